#pragma once

// Adam, the alternating training loop and the record it produces.

#include "comgan/config.hpp"
#include "comgan/toy.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace comgan {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t t = 0;
};

// One bias-corrected Adam update. State moments are created on first use.
// Throws ad::ShapeError when grads do not match params.
void adam_step(std::vector<Matrix*> params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamConfig& cfg);

// Weight and bias matrices interleaved, same order as BoundMlp::parameters().
std::vector<Matrix*> parameter_refs(MlpParams& params);

std::uint64_t splitmix64(std::uint64_t& state);

// Independent per-role seeds derived from the master seed.
struct SeedSet {
  std::uint64_t data, prior, pairing, init, eval;
  static SeedSet from_master(std::uint64_t master);
};

struct RunRow {
  int step = 0;
  double disc_loss = 0.0;
  double gen_loss = 0.0;
  int modes_captured = 0;
  double high_quality_fraction = 0.0;
  double hist_jsd = 0.0;
  std::optional<double> equality_residual_real;  // phi-based structures only
  std::optional<double> equality_residual_fake;
  std::optional<std::string> diverged;  // "disc_loss" or "gen_loss" on the abort row

  friend bool operator==(const RunRow&, const RunRow&) = default;
};

enum class RunStatus { Completed, Aborted };

struct RunRecord {
  TrainConfig config;
  std::vector<RunRow> rows;
  RunStatus status = RunStatus::Completed;
  std::string abort_reason;  // "unbounded/divergence: ..." when aborted
  double best_hist_jsd = 0.0;
  int modes_at_best = 0;
  double wall_clock_seconds = 0.0;
  Matrix final_samples;  // 2000 x 2 generator samples for the scatter plot
  Matrix centers;
};

inline constexpr Index kMetricSamples = 8000;
inline constexpr Index kScatterSamples = 2000;
inline constexpr double kDivergenceThreshold = 1e8;

using RowCallback = std::function<void(const RunRow&)>;

RunRecord train(const TrainConfig& config, const RowCallback& on_row = {});

}  // namespace comgan
