#pragma once

#include <cstdint>
#include <string>

#include "alsent/nn/network.hpp"

namespace alsent::models {

enum class Arch { kRnn, kLstm, kGru };

// "RNN", "LSTM", "GRU".
std::string arch_name(Arch arch);
// Case-insensitive inverse of arch_name. Throws SpecError.
Arch parse_arch(const std::string& name);

struct ModelSpec {
  Arch arch = Arch::kLstm;
  int vocab_size = 2000;
  int embed_dim = 32;
  int seq_len = 100;
  // Units per recurrent layer; the RNN preset stacks two such layers.
  int units = 32;
  nn::DropoutSpec dropout{0.5, 0.5};
  int output_classes = 2;

  // RNN: 2 x SimpleRNN(32), dropout 0.2/0.2, batch norm after each.
  // LSTM: LSTM(32), dropout 0.5/0.5.
  // GRU: GRU(16), dropout 0.5/0.5, batch norm after.
  static ModelSpec preset(Arch arch, int output_classes = 2);
  // Throws SpecError.
  void validate() const;
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  int patience = 5;
  std::uint64_t seed = 0;
  double learning_rate = 0.001;

  // 20 epochs for RNN and LSTM, 100 for GRU; batch 32, patience 5.
  static TrainConfig preset(Arch arch, std::uint64_t seed = 0);
  void validate() const;
};

// Embedding, the preset's recurrent stack and a dense head with
// output_classes == 2 ? 1 : output_classes logits.
nn::Network build_model(const ModelSpec& spec, nn::RngStream& rng);

}  // namespace alsent::models
