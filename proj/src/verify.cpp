#include "comgan/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace comgan {

using namespace oracle;

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

std::string VerifyReport::text() const {
  std::string out;
  char buf[256];
  int failed = 0;
  for (const VerifyCheck& c : checks) {
    std::snprintf(buf, sizeof buf, "%-4s  %-36s  max=%.3e  tol=%.1e\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                  c.max_discrepancy, c.tolerance);
    out += buf;
    failed += c.passed ? 0 : 1;
  }
  std::snprintf(buf, sizeof buf, "%zu checks, %d failed\n", checks.size(), failed);
  out += buf;
  return out;
}

namespace {

VerifyCheck make_check(std::string name, double discrepancy, double tol) {
  // NaN discrepancies fail.
  return {std::move(name), discrepancy, tol, discrepancy <= tol};
}

std::pair<DiscreteDist, DiscreteDist> random_pair(Eigen::Index n, std::mt19937_64& rng) {
  DiscreteDist pd = random_dist(n, rng);
  DiscreteDist pg = random_dist(n, rng);
  return {pd, pg};
}

}  // namespace

VerifyReport verify_all(const VerifyOptions& options) {
  VerifyReport report;
  constexpr double ln2 = std::numbers::ln2;

  // Optimal pair discriminators: numeric per-cell minimization vs closed form.
  {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<int> support(2, 16);
    std::vector<std::pair<DiscreteDist, DiscreteDist>> pairs;
    for (int i = 0; i < 100; ++i) pairs.push_back(random_pair(support(rng), rng));
    for (PairVariant v : kBoundedVariants) {
      double worst = 0.0;
      for (const auto& [pd, pg] : pairs) {
        const PairTable num = numeric_optimal_pair_disc(v, pd, pg);
        const PairTable closed = options.closed_form(v, pd, pg);
        if (num.unbounded || closed.unbounded || num.values.rows() != closed.values.rows() ||
            num.values.cols() != closed.values.cols()) {
          worst = std::numeric_limits<double>::infinity();
          continue;
        }
        worst = std::max(worst, (num.values - closed.values).cwiseAbs().maxCoeff());
      }
      report.checks.push_back(make_check("pair_disc/" + to_string(v), worst, 1e-3));
    }
    int bounded = 0;
    for (int i = 0; i < 10; ++i)
      if (!numeric_optimal_pair_disc(PairVariant::WComGAN, pairs[i].first, pairs[i].second).unbounded) ++bounded;
    report.checks.push_back(make_check("pair_disc/wcomgan_unbounded", bounded, 0.0));
  }

  // Generator gradient identities.
  {
    std::mt19937_64 rng(options.seed + 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Theorem1Variant variants[] = {Theorem1Variant::FakeSum, Theorem1Variant::SameSat,
                                        Theorem1Variant::SameNonsat};
    double worst[3] = {0.0, 0.0, 0.0};
    double worst_fd = 0.0;
    for (int i = 0; i < 20; ++i) {
      const DiscreteDist pd = random_dist(8, rng);
      Vector theta(8);
      for (Eigen::Index k = 0; k < 8; ++k) theta[k] = normal(rng);
      for (int v = 0; v < 3; ++v) {
        const Theorem1Result r = theorem1_check(pd, theta, variants[v], 1e-5);
        worst[v] = std::max(worst[v], r.max_abs_diff);
        worst_fd = std::max({worst_fd, r.fd_kl_diff, r.fd_objective_diff});
      }
    }
    for (int v = 0; v < 3; ++v)
      report.checks.push_back(make_check("gen_gradient/" + to_string(variants[v]), worst[v], 1e-6));
    report.checks.push_back(make_check("gen_gradient/finite_difference", worst_fd, 1e-4));
  }

  // Fixed-anchor objective optimum.
  {
    std::mt19937_64 rng(options.seed + 2);
    std::uniform_int_distribution<int> support(2, 16);
    double worst_value = 0.0;
    double worst_phi = 0.0;
    for (int i = 0; i < 50; ++i) {
      const auto [pd, pg] = random_pair(support(rng), rng);
      for (double lambda : {0.1, 0.5, 1.0})
        for (double alpha : {0.0, 0.5}) {
          const LeCamResult r = lecam_prop5_check(pd, pg, lambda, alpha);
          worst_value = std::max(worst_value, r.abs_diff);
          worst_phi = std::max(worst_phi, r.phi_numeric_diff);
        }
    }
    report.checks.push_back(make_check("lecam/optimal_value", worst_value, 1e-9));
    report.checks.push_back(make_check("lecam/optimal_phi", worst_phi, 1e-6));
  }

  // 2 ln 2 minus the optimal pairwise loss equals twice the swapped-joint JSD.
  {
    std::mt19937_64 rng(options.seed + 3);
    std::uniform_int_distribution<int> support(2, 16);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const auto [pd, pg] = random_pair(support(rng), rng);
      const double lhs = 2.0 * ln2 - optimal_scomgan_disc_loss(pd, pg);
      const double rhs = 2.0 * swapped_joint_divergence(pd, pg, DivergenceKind::JSD);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    report.checks.push_back(make_check("swapped_joint/jsd_identity", worst, 1e-9));
  }

  // Divergence sanity: zero on identical inputs, JSD within [0, ln 2].
  {
    std::mt19937_64 rng(options.seed + 4);
    double self = 0.0;
    double bound = 0.0;
    for (int i = 0; i < 50; ++i) {
      const auto [p, q] = random_pair(8, rng);
      for (DivergenceKind k : {DivergenceKind::KL, DivergenceKind::JSD, DivergenceKind::W1, DivergenceKind::LeCam})
        self = std::max(self, std::abs(divergence(k, p, p)));
      const double jsd = divergence(DivergenceKind::JSD, p, q);
      bound = std::max({bound, -jsd, jsd - ln2});
    }
    report.checks.push_back(make_check("divergence/self_zero", self, 1e-12));
    report.checks.push_back(make_check("divergence/jsd_bounds", bound, 0.0));
  }

  return report;
}

}  // namespace comgan
