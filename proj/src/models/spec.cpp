#include "alsent/models/spec.hpp"

#include <algorithm>
#include <cctype>

namespace alsent::models {

namespace {

Error spec_error(const std::string& what) { return Error("SpecError", what); }

}  // namespace

std::string arch_name(Arch arch) {
  switch (arch) {
    case Arch::kRnn:
      return "RNN";
    case Arch::kLstm:
      return "LSTM";
    case Arch::kGru:
      return "GRU";
  }
  throw spec_error("unknown architecture");
}

Arch parse_arch(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "RNN") return Arch::kRnn;
  if (upper == "LSTM") return Arch::kLstm;
  if (upper == "GRU") return Arch::kGru;
  throw spec_error("unknown architecture '" + name + "' (expected RNN, LSTM or GRU)");
}

ModelSpec ModelSpec::preset(Arch arch, int output_classes) {
  ModelSpec spec;
  spec.arch = arch;
  spec.output_classes = output_classes;
  switch (arch) {
    case Arch::kRnn:
      spec.units = 32;
      spec.dropout = {0.2, 0.2};
      break;
    case Arch::kLstm:
      spec.units = 32;
      spec.dropout = {0.5, 0.5};
      break;
    case Arch::kGru:
      spec.units = 16;
      spec.dropout = {0.5, 0.5};
      break;
  }
  return spec;
}

void ModelSpec::validate() const {
  if (vocab_size < 2) throw spec_error("vocab_size must be at least 2");
  if (embed_dim < 1 || seq_len < 1 || units < 1) throw spec_error("embed_dim, seq_len and units must be positive");
  if (!(dropout.input_rate >= 0 && dropout.input_rate < 1 && dropout.recurrent_rate >= 0 &&
        dropout.recurrent_rate < 1)) {
    throw spec_error("dropout rates must lie in [0, 1)");
  }
  if (output_classes < 2) throw spec_error("output_classes must be at least 2");
}

TrainConfig TrainConfig::preset(Arch arch, std::uint64_t seed) {
  TrainConfig config;
  config.epochs = arch == Arch::kGru ? 100 : 20;
  config.seed = seed;
  return config;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw spec_error("epochs must be at least 1");
  if (patience < 1) throw spec_error("patience must be at least 1");
  if (batch_size < 1) throw spec_error("batch_size must be at least 1");
  if (!(learning_rate > 0)) throw spec_error("learning_rate must be positive");
}

nn::Network build_model(const ModelSpec& spec, nn::RngStream& rng) {
  spec.validate();
  nn::Embedding embedding("embedding", spec.vocab_size, spec.embed_dim, rng);
  std::vector<std::unique_ptr<nn::Layer>> layers;
  const int u = spec.units;
  switch (spec.arch) {
    case Arch::kRnn:
      layers.push_back(std::make_unique<nn::SimpleRnnLayer>("simple_rnn_1", spec.embed_dim, u, spec.dropout, true, rng));
      layers.push_back(std::make_unique<nn::BatchNormLayer>("batch_norm_1", u));
      layers.push_back(std::make_unique<nn::SimpleRnnLayer>("simple_rnn_2", u, u, spec.dropout, false, rng));
      layers.push_back(std::make_unique<nn::BatchNormLayer>("batch_norm_2", u));
      break;
    case Arch::kLstm:
      layers.push_back(std::make_unique<nn::LstmLayer>("lstm", spec.embed_dim, u, spec.dropout, false, rng));
      break;
    case Arch::kGru:
      layers.push_back(std::make_unique<nn::GruLayer>("gru", spec.embed_dim, u, spec.dropout, false, rng));
      layers.push_back(std::make_unique<nn::BatchNormLayer>("batch_norm", u));
      break;
  }
  const int outputs = spec.output_classes == 2 ? 1 : spec.output_classes;
  layers.push_back(std::make_unique<nn::DenseLayer>("dense", u, outputs, rng));
  return nn::Network(std::move(embedding), std::move(layers), spec.output_classes);
}

}  // namespace alsent::models
