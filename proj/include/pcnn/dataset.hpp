#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "pcnn/error.hpp"
#include "pcnn/image.hpp"
#include "pcnn/rng.hpp"
#include "pcnn/tensor.hpp"

namespace pcnn {

// ---------------------------------------------------------------------------
// Tasks. Class indices follow the fixed orders below; input sizes are the
// canonical training resolutions per task.
// ---------------------------------------------------------------------------

enum class Task : uint8_t { Crack = 0, Mark = 1, Severity = 2 };

inline const char* task_name(Task task) {
  switch (task) {
    case Task::Crack: return "crack";
    case Task::Mark: return "mark";
    case Task::Severity: return "severity";
  }
  throw ArgumentError("unknown task");
}

inline Task task_from_name(const std::string& name) {
  if (name == "crack") return Task::Crack;
  if (name == "mark") return Task::Mark;
  if (name == "severity") return Task::Severity;
  throw ArgumentError("unknown task '" + name + "' (expected crack|mark|severity)");
}

/// Class names in index order: crack {noncrack, crack}; mark {mark, mark_crack};
/// severity {none, moderate, high}.
inline const std::vector<std::string>& class_names(Task task) {
  static const std::vector<std::string> crack = {"noncrack", "crack"};
  static const std::vector<std::string> mark = {"mark", "mark_crack"};
  static const std::vector<std::string> severity = {"none", "moderate", "high"};
  switch (task) {
    case Task::Crack: return crack;
    case Task::Mark: return mark;
    case Task::Severity: return severity;
  }
  throw ArgumentError("unknown task");
}

inline int num_classes(Task task) {
  return static_cast<int>(class_names(task).size());
}

/// Canonical input resolution: 256 for crack and mark, 500 for severity.
inline int task_input_size(Task task) {
  return task == Task::Severity ? 500 : 256;
}

inline int class_index(Task task, const std::string& label) {
  const auto& names = class_names(task);
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == label) return static_cast<int>(i);
  return -1;
}

// ---------------------------------------------------------------------------
// Manifest: headered CSV `path,label`, paths relative to the manifest file.
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string path;   // as written in the file
  std::string label;
  int label_index = -1;
};

struct Manifest {
  Task task = Task::Crack;
  std::string base_dir;  // directory of the manifest file
  std::vector<ManifestEntry> entries;

  std::string resolved_path(size_t i) const {
    const std::string& p = entries[i].path;
    if (!p.empty() && p.front() == '/') return p;
    return base_dir.empty() ? p : base_dir + "/" + p;
  }
};

namespace detail {

inline std::string dir_of(const std::string& path) {
  const size_t pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

inline Manifest load_manifest(const std::string& path, Task task) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);

  Manifest manifest;
  manifest.task = task;
  manifest.base_dir = detail::dir_of(path);

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path + ": empty manifest");
  if (detail::strip_cr(line) != "path,label")
    throw ValidationError(path + ": expected header 'path,label'");

  std::unordered_set<std::string> seen;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 >= line.size())
      throw ValidationError(path + " row " + std::to_string(row) +
                            ": expected 'path,label'");
    ManifestEntry entry;
    entry.path = line.substr(0, comma);
    entry.label = line.substr(comma + 1);
    entry.label_index = class_index(task, entry.label);
    if (entry.label_index < 0)
      throw ValidationError(path + " row " + std::to_string(row) +
                            ": label '" + entry.label + "' not valid for task " +
                            task_name(task));
    if (!seen.insert(entry.path).second)
      throw ValidationError(path + " row " + std::to_string(row) +
                            ": duplicate path '" + entry.path + "'");
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty())
    throw ValidationError(path + ": manifest has no entries");
  return manifest;
}

inline void write_manifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << "path,label\n";
  for (const ManifestEntry& e : manifest.entries)
    out << e.path << ',' << e.label << '\n';
  if (!out) throw IoError("short write: " + path);
}

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

struct LabeledSample {
  Tensor input;  // [S,S,1], values in [0,1]
  int label = 0;
};

/// Resize to size x size and normalize to [0,1]; shape [size,size,1].
inline LabeledSample to_sample(const Image& img, int size, int label_index) {
  if (img.channels != 1) throw ArgumentError("to_sample needs a 1-channel image");
  const Image resized = resize_bilinear(img, size, size);
  LabeledSample sample;
  sample.label = label_index;
  sample.input = Tensor({size, size, 1});
  double* dst = sample.input.data();
  for (size_t i = 0; i < resized.pixels.size(); ++i)
    dst[i] = resized.pixels[i] / 255.0;
  return sample;
}

/// Full ingestion for one manifest entry: load, gray-convert if RGB,
/// resize, normalize.
inline LabeledSample load_sample(const Manifest& manifest, size_t i, int size) {
  Image img = load_image(manifest.resolved_path(i));
  if (img.channels == 3) img = rgb_to_gray(img);
  return to_sample(img, size, manifest.entries[i].label_index);
}

inline std::vector<LabeledSample> load_samples(const Manifest& manifest, int size) {
  std::vector<LabeledSample> samples;
  samples.reserve(manifest.entries.size());
  for (size_t i = 0; i < manifest.entries.size(); ++i)
    samples.push_back(load_sample(manifest, i, size));
  return samples;
}

// ---------------------------------------------------------------------------
// Train/validation split
// ---------------------------------------------------------------------------

struct SplitIndices {
  std::vector<int64_t> train;
  std::vector<int64_t> val;
};

/// Seeded Fisher-Yates shuffle of 0..n-1; the first floor(n*(1-val_ratio))
/// indices train, the rest validate.
inline SplitIndices split_dataset(int64_t n, double val_ratio, uint64_t seed) {
  if (!(val_ratio > 0.0 && val_ratio < 1.0))
    throw ArgumentError("val_ratio must be in (0,1)");
  if (n < 2) throw ArgumentError("split needs at least 2 samples");

  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  for (int64_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(i) + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }

  const auto train_count =
      static_cast<int64_t>(std::floor(static_cast<double>(n) * (1.0 - val_ratio)));
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + train_count);
  split.val.assign(order.begin() + train_count, order.end());
  return split;
}

}  // namespace pcnn
