#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "alsent/models/metrics.hpp"
#include "alsent/models/spec.hpp"

namespace alsent::models {

// Encoded, label-indexed samples; every id row has the same length.
struct EncodedSet {
  nn::IdBatch ids;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  void add(std::vector<int> row, int label) {
    ids.push_back(std::move(row));
    labels.push_back(label);
  }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainedModel {
  ModelSpec spec;
  nn::Network network;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 1-based; 0 for an untrained model
};

class Diverged : public Error {
 public:
  Diverged(int epoch, const std::string& what)
      : Error("Diverged", "epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Freshly initialised model (seeded from config.seed) trained on `train`
// with Adam, shuffled mini-batches and early stopping on validation loss.
// The weights of the best epoch are restored before returning. A final
// batch of one sample is folded into the previous batch.
TrainedModel train(const ModelSpec& spec, const EncodedSet& train_set, const EncodedSet& val_set,
                   const TrainConfig& config);
// Same, starting from the given network.
TrainedModel train(const ModelSpec& spec, nn::Network network, const EncodedSet& train_set,
                   const EncodedSet& val_set, const TrainConfig& config);

// Inference-mode class distributions, one row per sample: [1 - p, p] for a
// binary head, softmax rows otherwise.
nn::Tensor2D predict_proba(const TrainedModel& model, const nn::IdBatch& ids);
// p > 0.5 for binary, first argmax otherwise.
std::vector<int> predicted_classes(const nn::Tensor2D& distributions);
// Mean inference-mode loss and accuracy.
struct LossAndAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};
LossAndAccuracy measure(const nn::Network& network, const EncodedSet& set);

// Throws EmptyTestSet.
MetricsReport evaluate(const TrainedModel& model, const EncodedSet& test_set);

nlohmann::json history_to_json(const std::vector<EpochRecord>& history);
nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

// Full-precision checkpoint: spec, history, best epoch, parameters and
// batch-norm statistics. Load throws CheckpointError on malformed files.
nlohmann::json checkpoint_to_json(const TrainedModel& model);
TrainedModel checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace alsent::models
