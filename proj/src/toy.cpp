#include "comgan/toy.hpp"

#include "comgan/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace comgan {

void MixtureSpec::validate() const {
  if (centers.rows() == 0 || centers.cols() != 2) throw std::invalid_argument("mixture needs k x 2 centers");
  if (!(std > 0.0)) throw std::invalid_argument("mixture std must be > 0");
  for (Index i = 0; i < centers.rows(); ++i)
    for (Index j = i + 1; j < centers.rows(); ++j)
      if (centers.row(i) == centers.row(j)) throw std::invalid_argument("mixture centers must be distinct");
}

double MixtureSpec::extent() const { return centers.cwiseAbs().maxCoeff() + 1.0; }

MixtureSpec ring8(double radius, double std) {
  MixtureSpec s{"ring8", Matrix(8, 2), std};
  for (Index k = 0; k < 8; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / 8.0;
    s.centers(k, 0) = radius * std::cos(a);
    s.centers(k, 1) = radius * std::sin(a);
  }
  return s;
}

MixtureSpec grid25(double spacing, double std) {
  MixtureSpec s{"grid25", Matrix(25, 2), std};
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) {
      s.centers(i * 5 + j, 0) = spacing * static_cast<double>(i - 2);
      s.centers(i * 5 + j, 1) = spacing * static_cast<double>(j - 2);
    }
  return s;
}

MixtureSpec mixture_by_name(const std::string& name) {
  if (name == "ring8") return ring8();
  if (name == "grid25") return grid25();
  throw std::invalid_argument("unknown data spec '" + name + "' (expected ring8 or grid25)");
}

Matrix sample_mixture(const MixtureSpec& spec, Index n, std::mt19937_64& rng) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("sample_mixture: n must be >= 1");
  std::uniform_int_distribution<Index> pick(0, spec.centers.rows() - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix out(n, 2);
  for (Index i = 0; i < n; ++i) {
    const Index k = pick(rng);
    out(i, 0) = spec.centers(k, 0) + spec.std * noise(rng);
    out(i, 1) = spec.centers(k, 1) + spec.std * noise(rng);
  }
  return out;
}

Matrix sample_mixture(const MixtureSpec& spec, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_mixture(spec, n, rng);
}

ModeMetrics mode_metrics(const Matrix& samples, const MixtureSpec& spec, double multiplier) {
  if (samples.rows() == 0) throw std::invalid_argument("mode_metrics: no samples");
  const double radius = multiplier * spec.std;
  std::vector<int> close(static_cast<std::size_t>(spec.centers.rows()), 0);
  Index high_quality = 0;
  for (Index i = 0; i < samples.rows(); ++i) {
    Index nearest = 0;
    const double d = std::sqrt((spec.centers.rowwise() - samples.row(i)).rowwise().squaredNorm().minCoeff(&nearest));
    if (d <= radius) {
      ++close[static_cast<std::size_t>(nearest)];
      ++high_quality;
    }
  }
  ModeMetrics m;
  m.modes_captured = static_cast<int>(std::count_if(close.begin(), close.end(), [](int c) { return c >= kModeMinSamples; }));
  m.high_quality_fraction = static_cast<double>(high_quality) / static_cast<double>(samples.rows());
  return m;
}

namespace {

oracle::Vector histogram(const Matrix& pts, double extent, int bins) {
  oracle::Vector h = oracle::Vector::Zero(bins * bins);
  const double cell = 2.0 * extent / bins;
  auto bin_of = [&](double v) {
    if (std::isnan(v)) return 0;
    v = std::clamp(v, -2.0 * extent, 2.0 * extent);
    return std::clamp(static_cast<int>(std::floor((v + extent) / cell)), 0, bins - 1);
  };
  for (Index i = 0; i < pts.rows(); ++i) h[bin_of(pts(i, 0)) * bins + bin_of(pts(i, 1))] += 1.0;
  return h / static_cast<double>(pts.rows());
}

}  // namespace

double hist_jsd(const Matrix& a, const Matrix& b, double extent, int bins) {
  if (bins < 2) throw std::invalid_argument("hist_jsd: bins must be >= 2");
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("hist_jsd: empty sample set");
  const oracle::DiscreteDist p = oracle::DiscreteDist(histogram(a, extent, bins)).smoothed();
  const oracle::DiscreteDist q = oracle::DiscreteDist(histogram(b, extent, bins)).smoothed();
  return oracle::divergence(oracle::DivergenceKind::JSD, p, q);
}

EqualityResiduals equality_residuals(const Matrix& phi_real, const Matrix& phi_fake) {
  auto resid = [](const Matrix& v) { return (v.array() - v.mean()).square().mean(); };
  return {resid(phi_real), resid(phi_fake)};
}

EqualityResiduals equality_residuals(const MlpParams& phi, const Matrix& real, const Matrix& fake) {
  return equality_residuals(mlp_eval(phi, real), mlp_eval(phi, fake));
}

}  // namespace comgan
