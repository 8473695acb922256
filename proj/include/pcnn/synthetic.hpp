#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "pcnn/dataset.hpp"
#include "pcnn/error.hpp"
#include "pcnn/image.hpp"
#include "pcnn/rng.hpp"

namespace pcnn {

// Procedural stand-in corpus: textured asphalt-like background, dark
// random-walk cracks, bright straight lane markings. Everything derives
// from one seeded Rng, so a corpus is reproducible byte for byte.

namespace synth {

enum class Kind { Background, FewCracks, CrackMesh, Band, BandWithCracks };

inline Kind kind_for_class(Task task, int label_index) {
  switch (task) {
    case Task::Crack:
      return label_index == 0 ? Kind::Background : Kind::FewCracks;
    case Task::Mark:
      return label_index == 0 ? Kind::Band : Kind::BandWithCracks;
    case Task::Severity:
      if (label_index == 0) return Kind::Background;
      return label_index == 1 ? Kind::FewCracks : Kind::CrackMesh;
  }
  throw ArgumentError("unknown task");
}

// Asphalt-like texture in 140..200: smooth blotches (coarse noise upsampled
// bilinearly) with fine per-pixel grain on top.
inline void fill_background(Image& img, Rng& rng) {
  Image coarse;
  coarse.width = coarse.height = std::max(2, img.width / 8);
  coarse.channels = 1;
  coarse.pixels.resize(static_cast<size_t>(coarse.width) * coarse.height);
  for (uint8_t& p : coarse.pixels)
    p = static_cast<uint8_t>(148 + rng.next_below(45));  // 148..192
  const Image smooth = resize_bilinear(coarse, img.width, img.height);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const int grain = static_cast<int>(rng.next_below(17)) - 8;  // -8..8
    int v = smooth.pixels[i] + grain;
    if (v < 140) v = 140;
    if (v > 200) v = 200;
    img.pixels[i] = static_cast<uint8_t>(v);
  }
}

// Dark random-walk polyline. Mostly-horizontal strokes enter from the left,
// mostly-vertical ones from the top, so mixed orientations intersect.
inline void draw_crack_stroke(Image& img, Rng& rng, bool horizontal, int min_width,
                              int max_width) {
  const int size = img.width;
  const int width =
      min_width + static_cast<int>(rng.next_below(
                      static_cast<uint64_t>(max_width - min_width + 1)));
  const auto value = static_cast<uint8_t>(20 + rng.next_below(51));  // 20..70

  // Walk the main axis edge to edge; lateral drift reflects at the borders
  // so every stroke crosses the whole image.
  double along = 0.0;
  double across = static_cast<double>(rng.next_below(static_cast<uint64_t>(size)));
  double drift = rng.next_uniform(-0.6, 0.6);

  const int max_steps = 6 * size;
  for (int step = 0; step < max_steps && along < size; ++step) {
    const int a = static_cast<int>(std::floor(along));
    const int b = static_cast<int>(std::floor(across));
    for (int db = 0; db < width; ++db) {
      for (int da = 0; da < width; ++da) {
        const int pa = a + da, pb = b + db;
        if (pa < 0 || pb < 0 || pa >= size || pb >= size) continue;
        const int px = horizontal ? pa : pb;
        const int py = horizontal ? pb : pa;
        img.pixels[static_cast<size_t>(py) * size + px] = value;
      }
    }
    drift += rng.next_uniform(-0.3, 0.3);
    if (drift > 0.9) drift = 0.9;
    if (drift < -0.9) drift = -0.9;
    along += 1.0;
    across += drift;
    if (across < 0.0) {
      across = -across;
      drift = -drift;
    }
    if (across > size - 1.0) {
      across = 2.0 * (size - 1.0) - across;
      drift = -drift;
    }
  }
}

// Sparse cracking: isolated thin strokes.
inline void draw_cracks(Image& img, Rng& rng, int count) {
  for (int i = 0; i < count; ++i)
    draw_crack_stroke(img, rng, /*horizontal=*/(i % 2) == 0, 1, 3);
}

// Dense interconnected mesh: many crossing strokes, visibly heavier than
// any sparse-crack image.
inline void draw_crack_mesh(Image& img, Rng& rng) {
  const int count = 10 + static_cast<int>(rng.next_below(5));  // 10..14
  for (int i = 0; i < count; ++i)
    draw_crack_stroke(img, rng, /*horizontal=*/(i % 2) == 0, 2, 4);
}

// Bright straight band, 6..12 px wide, horizontal or vertical.
inline void draw_band(Image& img, Rng& rng) {
  const int size = img.width;
  const int width = 6 + static_cast<int>(rng.next_below(7));  // 6..12
  const bool horizontal = rng.next_below(2) == 0;
  const int offset =
      static_cast<int>(rng.next_below(static_cast<uint64_t>(size - width + 1)));
  for (int a = 0; a < width; ++a) {
    for (int b = 0; b < size; ++b) {
      const int x = horizontal ? b : offset + a;
      const int y = horizontal ? offset + a : b;
      img.pixels[static_cast<size_t>(y) * size + x] =
          static_cast<uint8_t>(230 + rng.next_below(26));  // 230..255
    }
  }
}

inline Image generate_image(Kind kind, int size, Rng& rng) {
  Image img;
  img.width = size;
  img.height = size;
  img.channels = 1;
  img.pixels.resize(static_cast<size_t>(size) * size);
  fill_background(img, rng);
  switch (kind) {
    case Kind::Background:
      break;
    case Kind::FewCracks:
      draw_cracks(img, rng, 1 + static_cast<int>(rng.next_below(3)));  // 1..3
      break;
    case Kind::CrackMesh:
      draw_crack_mesh(img, rng);
      break;
    case Kind::Band:
      draw_band(img, rng);
      break;
    case Kind::BandWithCracks:
      draw_band(img, rng);
      draw_cracks(img, rng, 1 + static_cast<int>(rng.next_below(3)));
      break;
  }
  return img;
}

}  // namespace synth

/// Writes count_per_class PGM images per class plus manifest.csv under
/// out_dir, and returns the manifest. Deterministic for a given seed.
inline Manifest generate_synthetic_corpus(Task task, int count_per_class,
                                          int image_size, uint64_t seed,
                                          const std::string& out_dir) {
  if (count_per_class < 1) throw ArgumentError("count_per_class must be >= 1");
  if (image_size < 32) throw ArgumentError("image_size must be >= 32");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  Rng rng(seed);
  Manifest manifest;
  manifest.task = task;
  manifest.base_dir = out_dir;
  const auto& names = class_names(task);
  for (size_t cls = 0; cls < names.size(); ++cls) {
    const synth::Kind kind = synth::kind_for_class(task, static_cast<int>(cls));
    for (int i = 0; i < count_per_class; ++i) {
      const Image img = synth::generate_image(kind, image_size, rng);
      char name[64];
      std::snprintf(name, sizeof name, "%s_%04d.pgm", names[cls].c_str(), i);
      write_image(img, out_dir + "/" + name);
      ManifestEntry entry;
      entry.path = name;
      entry.label = names[cls];
      entry.label_index = static_cast<int>(cls);
      manifest.entries.push_back(std::move(entry));
    }
  }
  write_manifest(manifest, out_dir + "/manifest.csv");
  return manifest;
}

}  // namespace pcnn
