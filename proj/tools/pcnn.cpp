// pcnn command line: synthetic corpus generation, training, evaluation and
// prediction for the crack / mark / severity pavement classifiers.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcnn/pcnn.hpp"

namespace {

struct GenArgs {
  std::string task;
  int count = 0;
  int size = 64;
  uint64_t seed = 1;
  std::string out;
};

struct TrainArgs {
  std::string task;
  std::string manifest;
  int epochs = -1;       // -1: per-task default
  int batch_size = 64;
  double lr = 0.01;
  double val_split = -1.0;  // -1: per-task default
  uint64_t seed = 1;
  int patience = 5;
  bool no_early_stop = false;
  int input_size = -1;   // -1: task canonical
  std::string model_out = "model.pcnn";
  std::string log_out;
};

struct EvalArgs {
  std::string model;
  std::string manifest;
};

struct PredictArgs {
  std::string model;
  std::vector<std::string> images;
};

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void apply_task_defaults(TrainArgs& args, pcnn::Task task) {
  if (args.epochs < 0) args.epochs = (task == pcnn::Task::Mark) ? 20 : 30;
  if (args.val_split < 0.0) {
    switch (task) {
      case pcnn::Task::Crack: args.val_split = 0.2; break;
      case pcnn::Task::Mark: args.val_split = 0.1; break;
      case pcnn::Task::Severity: args.val_split = 0.3; break;
    }
  }
  if (args.input_size < 0) args.input_size = pcnn::task_input_size(task);
}

int run_gen(const GenArgs& args) {
  const pcnn::Task task = pcnn::task_from_name(args.task);
  const pcnn::Manifest manifest =
      pcnn::generate_synthetic_corpus(task, args.count, args.size, args.seed, args.out);
  std::cout << "wrote " << manifest.entries.size() << " images + manifest.csv to "
            << args.out << "\n";
  return 0;
}

int run_train(TrainArgs& args) {
  const pcnn::Task task = pcnn::task_from_name(args.task);
  apply_task_defaults(args, task);

  const pcnn::Manifest manifest = pcnn::load_manifest(args.manifest, task);
  const std::vector<pcnn::LabeledSample> samples =
      pcnn::load_samples(manifest, args.input_size);
  const pcnn::SplitIndices split =
      pcnn::split_dataset(static_cast<int64_t>(samples.size()), args.val_split, args.seed);

  std::vector<pcnn::LabeledSample> train_set, val_set;
  for (int64_t i : split.train) train_set.push_back(samples[static_cast<size_t>(i)]);
  for (int64_t i : split.val) val_set.push_back(samples[static_cast<size_t>(i)]);

  std::cout << "task=" << pcnn::task_name(task) << " samples=" << samples.size()
            << " train=" << train_set.size() << " val=" << val_set.size()
            << " input_size=" << args.input_size
            << " classes=" << pcnn::num_classes(task) << "\n";

  pcnn::TrainConfig config;
  config.batch_size = args.batch_size;
  config.learning_rate = args.lr;
  config.max_epochs = args.epochs;
  config.val_ratio = args.val_split;
  config.seed = args.seed;
  config.early_stopping = !args.no_early_stop;
  config.patience = args.patience;
  config.validate();

  pcnn::Network net = pcnn::build_model(task, args.input_size, args.seed);
  const pcnn::FitResult result =
      pcnn::fit(net, train_set, val_set, config, [&](const pcnn::EpochRecord& r) {
        std::cout << "epoch " << r.epoch << "/" << args.epochs
                  << " train_loss=" << fmt6(r.train_loss)
                  << " train_acc=" << fmt6(r.train_acc)
                  << " val_loss=" << fmt6(r.val_loss)
                  << " val_acc=" << fmt6(r.val_acc) << "\n"
                  << std::flush;
      });
  if (result.stopped_early)
    std::cout << "stopped early after epoch " << result.history.back().epoch
              << " (best epoch " << result.best_epoch << ")\n";

  pcnn::Model model{task, std::move(net)};
  pcnn::save_model(model, args.model_out);
  std::cout << "saved model: " << args.model_out << "\n";

  if (!args.log_out.empty()) {
    std::ofstream log(args.log_out);
    if (!log) throw pcnn::IoError("cannot write log file: " + args.log_out);
    pcnn::write_history_csv(result.history, log);
  }

  const pcnn::EvalResult train_eval = pcnn::evaluate(model.net, train_set);
  const pcnn::EvalResult val_eval = pcnn::evaluate(model.net, val_set);
  std::cout << "final train_acc=" << fmt6(train_eval.accuracy)
            << " val_acc=" << fmt6(val_eval.accuracy) << "\n";

  // Reported with the saved (single-precision) weights so that a later
  // `eval` of the model file reproduces it bitwise.
  const pcnn::Model reloaded = pcnn::load_model(args.model_out);
  const pcnn::EvalResult manifest_eval = pcnn::evaluate(reloaded.net, samples);
  std::cout << "manifest accuracy=" << fmt6(manifest_eval.accuracy) << "\n";
  return 0;
}

void print_confusion(const pcnn::ConfusionMatrix& confusion,
                     const std::vector<std::string>& names) {
  std::cout << "confusion matrix (rows=true, cols=predicted):\n";
  std::cout << "truth";
  for (const std::string& n : names) std::cout << ',' << n;
  std::cout << "\n";
  for (int t = 0; t < confusion.num_classes(); ++t) {
    std::cout << names[static_cast<size_t>(t)];
    for (int p = 0; p < confusion.num_classes(); ++p)
      std::cout << ',' << confusion.at(t, p);
    std::cout << "\n";
  }
}

int run_eval(const EvalArgs& args) {
  const pcnn::Model model = pcnn::load_model(args.model);
  const pcnn::Manifest manifest = pcnn::load_manifest(args.manifest, model.task);
  const std::vector<pcnn::LabeledSample> samples =
      pcnn::load_samples(manifest, model.input_size());
  const pcnn::EvalResult result = pcnn::evaluate(model.net, samples);
  std::cout << "samples=" << samples.size()
            << " classes=" << pcnn::num_classes(model.task) << "\n";
  std::cout << "loss=" << fmt6(result.loss)
            << " accuracy=" << fmt6(result.accuracy) << "\n";
  print_confusion(result.confusion, pcnn::class_names(model.task));
  return 0;
}

int run_predict(const PredictArgs& args) {
  const pcnn::Model model = pcnn::load_model(args.model);
  const std::vector<std::string>& names = pcnn::class_names(model.task);
  bool any_failed = false;
  for (const std::string& path : args.images) {
    try {
      pcnn::Image img = pcnn::load_image(path);
      if (img.channels == 3) img = pcnn::rgb_to_gray(img);
      const pcnn::LabeledSample sample = pcnn::to_sample(img, model.input_size(), 0);
      const pcnn::Prediction pred = pcnn::predict(model.net, sample.input);
      std::cout << path << ',' << names[static_cast<size_t>(pred.class_index)];
      for (int64_t i = 0; i < pred.probs.size(); ++i)
        std::cout << ',' << fmt6(pred.probs[i]);
      std::cout << "\n";
    } catch (const pcnn::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      any_failed = true;
    }
  }
  return any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pavement crack CNN: corpus generation, training, evaluation, prediction"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic labeled corpus");
  gen->add_option("--task", gen_args.task, "crack|mark|severity")->required();
  gen->add_option("--count", gen_args.count, "images per class")->required();
  gen->add_option("--size", gen_args.size, "image side in pixels");
  gen->add_option("--seed", gen_args.seed, "corpus seed");
  gen->add_option("--out", gen_args.out, "output directory")->required();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train a model from a manifest");
  train->add_option("--task", train_args.task, "crack|mark|severity")->required();
  train->add_option("--manifest", train_args.manifest, "manifest CSV path")->required();
  train->add_option("--epochs", train_args.epochs, "max epochs (default 30; mark 20)");
  train->add_option("--batch-size", train_args.batch_size, "minibatch size (default 64)");
  train->add_option("--lr", train_args.lr, "learning rate (default 0.01)");
  train->add_option("--val-split", train_args.val_split,
                    "validation ratio (default 0.2; mark 0.1; severity 0.3)");
  train->add_option("--seed", train_args.seed, "training seed");
  train->add_option("--patience", train_args.patience, "early stopping patience");
  train->add_flag("--no-early-stop", train_args.no_early_stop, "disable early stopping");
  train->add_option("--input-size", train_args.input_size,
                    "network input side (default per task: 256/256/500)");
  train->add_option("--model-out", train_args.model_out, "model file to write");
  train->add_option("--log-out", train_args.log_out, "epoch log CSV to write");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a model on a manifest");
  eval->add_option("--model", eval_args.model, "model file")->required();
  eval->add_option("--manifest", eval_args.manifest, "manifest CSV path")->required();

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "classify individual images");
  predict->add_option("--model", predict_args.model, "model file")->required();
  predict->add_option("--image", predict_args.images, "image file (repeatable)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return run_gen(gen_args);
    if (train->parsed()) return run_train(train_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (predict->parsed()) return run_predict(predict_args);
    return 2;
  } catch (const pcnn::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pcnn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
