#pragma once

// 2D Gaussian mixtures and sample-quality metrics.

#include "comgan/nets.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>

namespace comgan {

struct MixtureSpec {
  std::string name;
  Matrix centers;  // k x 2
  double std = 0.02;

  void validate() const;
  // Half-width of the square that holds every component comfortably.
  double extent() const;
};

// Eight centers on the circle of radius 2, std 0.02.
MixtureSpec ring8(double radius = 2.0, double std = 0.02);
// 5 x 5 lattice with spacing 2 centered at the origin, std 0.05.
MixtureSpec grid25(double spacing = 2.0, double std = 0.05);
// "ring8" or "grid25".
MixtureSpec mixture_by_name(const std::string& name);

Matrix sample_mixture(const MixtureSpec& spec, Index n, std::mt19937_64& rng);
Matrix sample_mixture(const MixtureSpec& spec, Index n, std::uint64_t seed);

inline constexpr int kModeMinSamples = 20;

struct ModeMetrics {
  int modes_captured = 0;
  double high_quality_fraction = 0.0;
};

// Nearest-center assignment; a mode counts once at least kModeMinSamples of
// its samples fall within multiplier * std of the center.
ModeMetrics mode_metrics(const Matrix& samples, const MixtureSpec& spec, double multiplier = 3.0);

// JSD between 2D histograms on [-extent, extent]^2 with bins x bins cells.
// Points outside the square land in the border cells.
double hist_jsd(const Matrix& a, const Matrix& b, double extent, int bins = 32);

struct EqualityResiduals {
  double real = 0.0;
  double fake = 0.0;
};

// Mean squared deviation of phi from its same-class batch mean.
EqualityResiduals equality_residuals(const Matrix& phi_real, const Matrix& phi_fake);
EqualityResiduals equality_residuals(const MlpParams& phi, const Matrix& real, const Matrix& fake);

struct MetricReport {
  int modes_captured = 0;
  double high_quality_fraction = 0.0;
  double hist_jsd = 0.0;
  std::optional<double> equality_residual_real;
  std::optional<double> equality_residual_fake;
};

}  // namespace comgan
