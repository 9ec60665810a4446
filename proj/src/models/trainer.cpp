#include "alsent/models/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "alsent/io.hpp"
#include "alsent/nn/adam.hpp"

namespace alsent::models {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::size_t kInferenceChunk = 256;

nn::IdBatch gather_ids(const EncodedSet& set, const std::vector<std::size_t>& rows) {
  nn::IdBatch out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(set.ids[r]);
  return out;
}

std::vector<int> gather_labels(const EncodedSet& set, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(set.labels[r]);
  return out;
}

void check_set(const EncodedSet& set, int classes, const char* what) {
  if (set.ids.size() != set.labels.size()) throw Error("ShapeError", std::string(what) + ": ids and labels differ");
  for (int y : set.labels) {
    if (y < 0 || y >= classes) throw Error("LabelError", std::string(what) + ": label index out of range");
  }
}

// Batches of `size` over a shuffled order; a trailing batch of one sample is
// merged into the one before it so batch normalization always sees >= 2 rows.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, int size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() >= 2 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

int count_correct(const nn::Tensor2D& logits, const std::vector<int>& labels, int classes) {
  const std::vector<int> predicted = predicted_classes(nn::output_distribution(logits, classes));
  int correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i] ? 1 : 0;
  return correct;
}

struct Snapshot {
  std::vector<nn::Tensor2D> values;
};

Snapshot take_snapshot(nn::Network& net) {
  Snapshot s;
  for (nn::Parameter* p : net.parameters()) s.values.push_back(p->value);
  for (nn::Parameter* p : net.buffers()) s.values.push_back(p->value);
  return s;
}

void restore_snapshot(nn::Network& net, const Snapshot& s) {
  std::size_t i = 0;
  for (nn::Parameter* p : net.parameters()) p->value = s.values[i++];
  for (nn::Parameter* p : net.buffers()) p->value = s.values[i++];
}

nlohmann::json tensor_to_json(const nn::Tensor2D& t) {
  return {{"rows", t.rows()}, {"cols", t.cols()}, {"data", std::vector<double>(t.data(), t.data() + t.size())}};
}

Error checkpoint_error(const std::string& what) { return Error("CheckpointError", what); }

void tensor_from_json(const nlohmann::json& j, nn::Parameter& p) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows != p.value.rows() || cols != p.value.cols() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw checkpoint_error(p.name + ": shape mismatch, expected " + nn::shape_string(p.value));
  }
  std::copy(data.begin(), data.end(), p.value.data());
}

}  // namespace

TrainedModel train(const ModelSpec& spec, const EncodedSet& train_set, const EncodedSet& val_set,
                   const TrainConfig& config) {
  nn::RngStream init_rng(nn::derive_seed(config.seed, kInitStream));
  return train(spec, build_model(spec, init_rng), train_set, val_set, config);
}

TrainedModel train(const ModelSpec& spec, nn::Network network, const EncodedSet& train_set,
                   const EncodedSet& val_set, const TrainConfig& config) {
  spec.validate();
  config.validate();
  check_set(train_set, spec.output_classes, "training set");
  check_set(val_set, spec.output_classes, "validation set");
  if (train_set.size() == 0) throw Error("EmptyTrainingSet", "cannot train on an empty set");
  if (val_set.size() == 0) throw Error("EmptyValidationSet", "early stopping needs a validation set");

  TrainedModel model{spec, std::move(network), {}, 0};
  nn::Network& net = model.network;
  nn::AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  nn::Adam adam(adam_config);
  nn::RngStream rng(nn::derive_seed(config.seed, kTrainStream));
  const nn::ForwardOptions options{nn::Phase::kTrain, true};

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best_val = std::numeric_limits<double>::infinity();
  Snapshot best;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    int correct = 0;
    for (const auto& rows : make_batches(order, config.batch_size)) {
      const nn::IdBatch ids = gather_ids(train_set, rows);
      const std::vector<int> labels = gather_labels(train_set, rows);
      nn::Tensor2D logits;
      double loss;
      net.zero_grad();
      try {
        loss = net.train_step(ids, labels, options, rng, &logits);
      } catch (const nn::NumericalError& e) {
        throw Diverged(epoch, e.what());
      }
      adam.step(net.parameters());
      loss_sum += loss * static_cast<double>(rows.size());
      correct += count_correct(logits, labels, spec.output_classes);
    }
    const LossAndAccuracy val = measure(net, val_set);
    if (!std::isfinite(val.loss)) throw Diverged(epoch, "non-finite validation loss");
    const double n = static_cast<double>(train_set.size());
    model.history.push_back({epoch, loss_sum / n, val.loss, correct / n, val.accuracy});

    if (val.loss < best_val) {
      best_val = val.loss;
      best = take_snapshot(net);
      model.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  restore_snapshot(net, best);
  net.zero_grad();
  return model;
}

LossAndAccuracy measure(const nn::Network& network, const EncodedSet& set) {
  LossAndAccuracy out;
  if (set.size() == 0) return out;
  double loss_sum = 0.0;
  int correct = 0;
  for (std::size_t start = 0; start < set.size(); start += kInferenceChunk) {
    const std::size_t end = std::min(set.size(), start + kInferenceChunk);
    const nn::IdBatch ids(set.ids.begin() + static_cast<std::ptrdiff_t>(start),
                          set.ids.begin() + static_cast<std::ptrdiff_t>(end));
    const std::vector<int> labels(set.labels.begin() + static_cast<std::ptrdiff_t>(start),
                                  set.labels.begin() + static_cast<std::ptrdiff_t>(end));
    const nn::Tensor2D logits = network.evaluate<double>(ids, nn::Phase::kInfer);
    loss_sum += nn::output_loss(logits, labels, network.output_classes()).loss * static_cast<double>(end - start);
    correct += count_correct(logits, labels, network.output_classes());
  }
  out.loss = loss_sum / static_cast<double>(set.size());
  out.accuracy = correct / static_cast<double>(set.size());
  return out;
}

nn::Tensor2D predict_proba(const TrainedModel& model, const nn::IdBatch& ids) {
  const int classes = model.network.output_classes();
  nn::Tensor2D out(static_cast<Eigen::Index>(ids.size()), classes);
  for (std::size_t start = 0; start < ids.size(); start += kInferenceChunk) {
    const std::size_t end = std::min(ids.size(), start + kInferenceChunk);
    const nn::IdBatch chunk(ids.begin() + static_cast<std::ptrdiff_t>(start),
                            ids.begin() + static_cast<std::ptrdiff_t>(end));
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) =
        nn::output_distribution(model.network.evaluate<double>(chunk, nn::Phase::kInfer), classes);
  }
  return out;
}

std::vector<int> predicted_classes(const nn::Tensor2D& distributions) {
  std::vector<int> out(static_cast<std::size_t>(distributions.rows()));
  for (Eigen::Index r = 0; r < distributions.rows(); ++r) {
    if (distributions.cols() == 2) {
      out[static_cast<std::size_t>(r)] = distributions(r, 1) > 0.5 ? 1 : 0;
    } else {
      Eigen::Index best = 0;
      distributions.row(r).maxCoeff(&best);
      out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
  }
  return out;
}

MetricsReport evaluate(const TrainedModel& model, const EncodedSet& test_set) {
  if (test_set.size() == 0) throw Error("EmptyTestSet", "cannot evaluate on an empty test set");
  check_set(test_set, model.spec.output_classes, "test set");
  return compute_metrics(predicted_classes(predict_proba(model, test_set.ids)), test_set.labels,
                         model.spec.output_classes);
}

nlohmann::json history_to_json(const std::vector<EpochRecord>& history) {
  nlohmann::json out = nlohmann::json::array();
  for (const EpochRecord& e : history) {
    out.push_back({{"epoch", e.epoch},
                   {"train_loss", round4(e.train_loss)},
                   {"val_loss", round4(e.val_loss)},
                   {"train_acc", round4(e.train_acc)},
                   {"val_acc", round4(e.val_acc)}});
  }
  return out;
}

nlohmann::json spec_to_json(const ModelSpec& spec) {
  return {{"arch", arch_name(spec.arch)},
          {"vocab_size", spec.vocab_size},
          {"embed_dim", spec.embed_dim},
          {"seq_len", spec.seq_len},
          {"units", spec.units},
          {"dropout", spec.dropout.input_rate},
          {"recurrent_dropout", spec.dropout.recurrent_rate},
          {"output_classes", spec.output_classes}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.arch = parse_arch(j.at("arch").get<std::string>());
  spec.vocab_size = j.at("vocab_size").get<int>();
  spec.embed_dim = j.at("embed_dim").get<int>();
  spec.seq_len = j.at("seq_len").get<int>();
  spec.units = j.at("units").get<int>();
  spec.dropout = {j.at("dropout").get<double>(), j.at("recurrent_dropout").get<double>()};
  spec.output_classes = j.at("output_classes").get<int>();
  spec.validate();
  return spec;
}

nlohmann::json checkpoint_to_json(const TrainedModel& model) {
  nlohmann::json params = nlohmann::json::object();
  for (const nn::Parameter* p : model.network.parameters()) params[p->name] = tensor_to_json(p->value);
  nlohmann::json buffers = nlohmann::json::object();
  for (const nn::Parameter* p : model.network.buffers()) buffers[p->name] = tensor_to_json(p->value);
  nlohmann::json history = nlohmann::json::array();
  for (const EpochRecord& e : model.history) {
    history.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_loss", e.val_loss},
                       {"train_acc", e.train_acc},
                       {"val_acc", e.val_acc}});
  }
  return {{"format", "alsent-model"},
          {"version", 1},
          {"spec", spec_to_json(model.spec)},
          {"best_epoch", model.best_epoch},
          {"history", history},
          {"parameters", params},
          {"buffers", buffers}};
}

TrainedModel checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "alsent-model" || j.at("version") != 1) throw checkpoint_error("unsupported checkpoint format");
    const ModelSpec spec = spec_from_json(j.at("spec"));
    nn::RngStream rng(0);
    TrainedModel model{spec, build_model(spec, rng), {}, j.at("best_epoch").get<int>()};
    for (const auto& e : j.at("history")) {
      model.history.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                               e.at("val_loss").get<double>(), e.at("train_acc").get<double>(),
                               e.at("val_acc").get<double>()});
    }
    for (nn::Parameter* p : model.network.parameters()) tensor_from_json(j.at("parameters").at(p->name), *p);
    for (nn::Parameter* p : model.network.buffers()) tensor_from_json(j.at("buffers").at(p->name), *p);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw checkpoint_error(e.what());
  }
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, checkpoint_to_json(model).dump());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw checkpoint_error(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace alsent::models
