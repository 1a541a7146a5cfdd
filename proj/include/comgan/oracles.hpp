#pragma once

// Exact computations on finite discrete distributions: optimal
// discriminators in closed form and by pointwise numeric minimization,
// divergences, and gradient identities under a softmax-parameterized p_g.

#include <Eigen/Dense>

#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace comgan::oracle {

using Vector = Eigen::VectorXd;
using Table = Eigen::MatrixXd;

inline constexpr double kSmoothing = 1e-9;

class SupportMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Probability table over labeled scalar support points (0..n-1 by default).
class DiscreteDist {
 public:
  explicit DiscreteDist(Vector probs);
  DiscreteDist(Vector probs, std::vector<double> support);

  Eigen::Index size() const { return probs_.size(); }
  const Vector& probs() const { return probs_; }
  double operator[](Eigen::Index i) const { return probs_[i]; }
  const std::vector<double>& support() const { return support_; }

  // Mix with the uniform distribution at weight eps.
  DiscreteDist smoothed(double eps = kSmoothing) const;

 private:
  Vector probs_;
  std::vector<double> support_;
};

// Dirichlet(1) draw, smoothed.
DiscreteDist random_dist(Eigen::Index n, std::mt19937_64& rng);

void check_matched(const DiscreteDist& p, const DiscreteDist& q);

// C*(x) = log(p_d(x) / p_g(x)).
Vector optimal_logit_sgan(const DiscreteDist& pd, const DiscreteDist& pg);
// D*(x) = p_d / (p_d + p_g).
Vector optimal_disc_sgan(const DiscreteDist& pd, const DiscreteDist& pg);
// D*(x) = (p_d - p_g) / (p_d + p_g) for 1/-1 coded least squares.
Vector optimal_disc_lsgan(const DiscreteDist& pd, const DiscreteDist& pg);

enum class PairVariant { SComGAN, SComGANEq, LSComGANEq, SPacGAN, SPacGANRf, LSPacGANRf, WComGAN };

inline constexpr PairVariant kBoundedVariants[] = {PairVariant::SComGAN,   PairVariant::SComGANEq,
                                                   PairVariant::LSComGANEq, PairVariant::SPacGAN,
                                                   PairVariant::SPacGANRf, PairVariant::LSPacGANRf};

std::string to_string(PairVariant v);

// D(x, y) indexed [x][y], reported after the variant's output activation.
struct PairTable {
  Table values;
  bool unbounded = false;
};

PairTable closed_form_pair_disc(PairVariant v, const DiscreteDist& pd, const DiscreteDist& pg);
PairTable numeric_optimal_pair_disc(PairVariant v, const DiscreteDist& pd, const DiscreteDist& pg,
                                    double lambda = 1.0);

// ---------------------------------------------------------------------------
// One-dimensional minimization.

struct MinResult {
  double argmin = 0.0;
  double value = 0.0;
  bool unbounded = false;
};

MinResult golden_section(const std::function<double(double)>& f, double lo, double hi, double tol);

// Golden section on [-30, 30] to 1e-10. A minimizer on the bracket edge
// triggers bracket doubling; one that keeps escaping is reported unbounded.
MinResult minimize_scalar(const std::function<double(double)>& f);

// ---------------------------------------------------------------------------
// Divergences (natural log).

enum class DivergenceKind { KL, JSD, W1, LeCam };
std::string to_string(DivergenceKind k);

double divergence(DivergenceKind kind, const DiscreteDist& p, const DiscreteDist& q);

// Product joints p_{d,g}(x,y) = p_d(x) p_g(y) and p_{g,d}(x,y) = p_g(x) p_d(y),
// flattened row-major over (x, y).
DiscreteDist product_joint(const DiscreteDist& p, const DiscreteDist& q);
double swapped_joint_divergence(const DiscreteDist& pd, const DiscreteDist& pg, DivergenceKind kind);

// Cross-entropy objective of the pairwise discriminator evaluated at
// D(x, y) = sigma(C*(x) - C*(y)).
double optimal_scomgan_disc_loss(const DiscreteDist& pd, const DiscreteDist& pg);

// ---------------------------------------------------------------------------
// Generator gradient identities with p_g = softmax(theta).

Vector softmax(const Vector& theta);

// Generator objectives under the frozen optimal pairwise discriminator
// D(x, y) = sigma(C*(x) - C*(y)), comparatives drawn from p_g (Fake) or equal
// to the generated sample itself (Same).
enum class GenObjective { FakeSat, FakeNonsat, SameSat, SameNonsat };
std::string to_string(GenObjective g);

// d objective / d theta with C* and every detached comparative held fixed.
Vector gen_objective_gradient(const DiscreteDist& pd, const Vector& theta, GenObjective g);

// FakeSum: grad(FakeSat) + grad(FakeNonsat) = 2 grad KL(p_g || p_d).
// SameSat, SameNonsat: grad = grad KL(p_g || p_d).
enum class Theorem1Variant { FakeSum, SameSat, SameNonsat };
std::string to_string(Theorem1Variant v);

struct Theorem1Result {
  Vector lhs;
  Vector rhs;
  double max_abs_diff = 0.0;
  // Central-difference checks: of KL(p_g || p_d) against the analytic
  // gradient, and of the frozen-discriminator objective against lhs.
  double fd_kl_diff = 0.0;
  double fd_objective_diff = 0.0;
};

class DegenerateDistribution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Theorem1Result theorem1_check(const DiscreteDist& pd, const Vector& theta, Theorem1Variant variant,
                              double fd_step = 1e-5);

// ---------------------------------------------------------------------------
// Fixed-anchor objective: E_pd[lambda (phi - a)^2 - phi] + E_pg[lambda (phi + a)^2 + phi].

Vector lecam_optimal_phi(const DiscreteDist& pd, const DiscreteDist& pg, double lambda, double alpha_r);

struct LeCamResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff = 0.0;
  double phi_numeric_diff = 0.0;  // max |golden-section minimizer - closed form|
};

LeCamResult lecam_prop5_check(const DiscreteDist& pd, const DiscreteDist& pg, double lambda, double alpha_r);

}  // namespace comgan::oracle
