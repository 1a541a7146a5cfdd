#pragma once

#include "comgan/autodiff.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace comgan {

using ad::Index;
using ad::Matrix;
using ad::Var;

enum class OutputActivation { Identity, Tanh };

struct Layer {
  Matrix weight;  // fan_in x fan_out
  Matrix bias;    // 1 x fan_out
};

// Leaky-rectifier MLP; the last layer is affine followed by `output`.
struct MlpParams {
  std::vector<Layer> layers;
  OutputActivation output = OutputActivation::Identity;

  Index input_width() const { return layers.front().weight.rows(); }
  Index output_width() const { return layers.back().weight.cols(); }
  std::size_t parameter_count() const;
};

// He-normal weights (std = sqrt(2 / fan_in)), zero biases.
MlpParams mlp_init(std::span<const Index> layer_sizes, std::uint64_t seed,
                   OutputActivation output = OutputActivation::Identity);

// Plain evaluation without a tape.
Matrix mlp_eval(const MlpParams& params, const Matrix& x);

// An MLP whose parameters have been placed on a tape, either as trainable
// parameters or as constants.
struct BoundMlp {
  std::vector<Var> weights;
  std::vector<Var> biases;
  OutputActivation output = OutputActivation::Identity;

  // Weight and bias nodes interleaved layer by layer, matching flatten order.
  std::vector<Var> parameters() const;
};

BoundMlp bind_parameters(ad::Tape& tape, const MlpParams& params);
BoundMlp bind_constants(ad::Tape& tape, const MlpParams& params);

Var mlp_forward(const BoundMlp& net, Var x);

// ---------------------------------------------------------------------------
// Discriminator structures.

enum class StructureKind { Single, PairConcat, PairSubtract, PairSum, PackConcat, MultiComparativeMean };

struct DiscStructure {
  StructureKind kind = StructureKind::Single;
  int pack = 2;  // slots per pack; PackConcat only

  // Input width of the discriminator network for samples of `sample_width`.
  Index network_input_width(Index sample_width) const;
  // phi-based structures share one network across inputs.
  bool shares_phi() const;
  bool is_pair() const { return kind == StructureKind::PairConcat || kind == StructureKind::PairSubtract; }
  bool is_pack() const { return kind == StructureKind::PairSum || kind == StructureKind::PackConcat; }
  int slots() const;

  friend bool operator==(const DiscStructure&, const DiscStructure&) = default;
};

std::string to_string(const DiscStructure& s);

class StructureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Single: phi(x).
Var disc_logit(const DiscStructure& s, const BoundMlp& net, Var x);
// PairSubtract phi(x)-phi(y); PairSum phi(x)+phi(y); PairConcat psi([x;y]);
// PackConcat(2) psi([x;y]); MultiComparativeMean phi(x) - mean_i phi(y_i)
// where y holds the comparatives as rows.
Var disc_logit(const DiscStructure& s, const BoundMlp& net, Var x, Var y);
// PackConcat(n) psi([x_1;...;x_n]) or the sum form sum_i phi(x_i).
Var disc_logit(const DiscStructure& s, const BoundMlp& net, std::span<const Var> slots);

// ---------------------------------------------------------------------------

// Standard-normal generator prior.
struct GenPrior {
  Index dimension = 2;

  Matrix sample(Index n, std::mt19937_64& rng) const;
};

}  // namespace comgan
