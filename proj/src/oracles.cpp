#include "comgan/oracles.hpp"

#include "comgan/autodiff.hpp"
#include "comgan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace comgan::oracle {

using Eigen::Index;

DiscreteDist::DiscreteDist(Vector probs) : probs_(std::move(probs)) {
  support_.resize(static_cast<std::size_t>(probs_.size()));
  std::iota(support_.begin(), support_.end(), 0.0);
  if (probs_.size() == 0) throw std::invalid_argument("empty distribution");
  if ((probs_.array() < 0.0).any() || !probs_.allFinite()) throw std::invalid_argument("negative or non-finite probability");
  if (std::abs(probs_.sum() - 1.0) > 1e-12) throw std::invalid_argument("probabilities must sum to 1");
}

DiscreteDist::DiscreteDist(Vector probs, std::vector<double> support) : DiscreteDist(std::move(probs)) {
  if (static_cast<Index>(support.size()) != probs_.size())
    throw SupportMismatch("support and probability table differ in length");
  support_ = std::move(support);
}

DiscreteDist DiscreteDist::smoothed(double eps) const {
  const double n = static_cast<double>(probs_.size());
  Vector mixed = (1.0 - eps) * probs_.array() + eps / n;
  mixed /= mixed.sum();
  return DiscreteDist(std::move(mixed), support_);
}

DiscreteDist random_dist(Index n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Vector p(n);
  for (Index i = 0; i < n; ++i) p[i] = e(rng);
  p /= p.sum();
  return DiscreteDist(p).smoothed();
}

void check_matched(const DiscreteDist& p, const DiscreteDist& q) {
  if (p.size() != q.size() || p.support() != q.support()) throw SupportMismatch("distributions have different supports");
}

Vector optimal_logit_sgan(const DiscreteDist& pd, const DiscreteDist& pg) {
  check_matched(pd, pg);
  return (pd.probs().array() / pg.probs().array()).log().matrix();
}

Vector optimal_disc_sgan(const DiscreteDist& pd, const DiscreteDist& pg) {
  check_matched(pd, pg);
  return (pd.probs().array() / (pd.probs() + pg.probs()).array()).matrix();
}

Vector optimal_disc_lsgan(const DiscreteDist& pd, const DiscreteDist& pg) {
  check_matched(pd, pg);
  return ((pd.probs() - pg.probs()).array() / (pd.probs() + pg.probs()).array()).matrix();
}

std::string to_string(PairVariant v) {
  switch (v) {
    case PairVariant::SComGAN: return "scomgan";
    case PairVariant::SComGANEq: return "scomgan_eq";
    case PairVariant::LSComGANEq: return "lscomgan_eq";
    case PairVariant::SPacGAN: return "spacgan2";
    case PairVariant::SPacGANRf: return "spacgan_rf";
    case PairVariant::LSPacGANRf: return "lspacgan_rf";
    case PairVariant::WComGAN: return "wcomgan";
  }
  return "?";
}

namespace {

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

template <typename F>
Table outer(Index n, F f) {
  Table t(n, n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) t(x, y) = f(x, y);
  return t;
}

}  // namespace

PairTable closed_form_pair_disc(PairVariant v, const DiscreteDist& pd, const DiscreteDist& pg) {
  const Vector c = optimal_logit_sgan(pd, pg);
  const Vector ds = optimal_disc_sgan(pd, pg);
  const Vector dl = optimal_disc_lsgan(pd, pg);
  const Index n = pd.size();
  PairTable out;
  switch (v) {
    case PairVariant::SComGAN: out.values = outer(n, [&](Index x, Index y) { return sigmoid(c[x] - c[y]); }); break;
    case PairVariant::SComGANEq:
      out.values = outer(n, [&](Index x, Index y) { return 0.5 + 0.5 * (ds[x] - ds[y]); });
      break;
    case PairVariant::LSComGANEq: out.values = outer(n, [&](Index x, Index y) { return 0.5 * (dl[x] - dl[y]); }); break;
    case PairVariant::SPacGAN: out.values = outer(n, [&](Index x, Index y) { return sigmoid(c[x] + c[y]); }); break;
    case PairVariant::SPacGANRf: out.values = outer(n, [&](Index x, Index y) { return 0.5 * (ds[x] + ds[y]); }); break;
    case PairVariant::LSPacGANRf: out.values = outer(n, [&](Index x, Index y) { return 0.5 * (dl[x] + dl[y]); }); break;
    case PairVariant::WComGAN: throw std::invalid_argument("wcomgan has no bounded closed form");
  }
  return out;
}

PairTable numeric_optimal_pair_disc(PairVariant v, const DiscreteDist& pd, const DiscreteDist& pg, double lambda) {
  check_matched(pd, pg);
  const Index n = pd.size();
  const FamilyKind sgan = FamilyKind::SGAN;
  auto f1 = [&](double c) { return eval_loss_fn(sgan, LossSlot::F1, c); };
  auto f2 = [&](double c) { return eval_loss_fn(sgan, LossSlot::F2, c); };
  auto neutral_ce = [&](double c) { return 0.5 * f1(c) + 0.5 * f2(c); };
  const bool sigmoid_output = v == PairVariant::SComGAN || v == PairVariant::SComGANEq || v == PairVariant::SPacGAN ||
                              v == PairVariant::SPacGANRf;

  PairTable out;
  out.values.resize(n, n);
  for (Index x = 0; x < n; ++x) {
    for (Index y = 0; y < n; ++y) {
      // Joint masses at (x, y) under p_{d,g}, p_{g,d}, p_{d,d}, p_{g,g}, normalized.
      double a = pd[x] * pg[y];
      double b = pg[x] * pd[y];
      double dd = pd[x] * pd[y];
      double gg = pg[x] * pg[y];
      const double total = a + b + dd + gg;
      a /= total;
      b /= total;
      dd /= total;
      gg /= total;

      std::function<double(double)> objective;
      switch (v) {
        case PairVariant::SComGAN: objective = [&](double c) { return a * f1(c) + b * f2(c); }; break;
        case PairVariant::SComGANEq:
          objective = [&](double c) { return a * f1(c) + b * f2(c) + lambda * (dd + gg) * neutral_ce(c); };
          break;
        case PairVariant::LSComGANEq:
          objective = [&](double c) {
            return a * (c - 1) * (c - 1) + b * (c + 1) * (c + 1) + lambda * (dd + gg) * c * c;
          };
          break;
        case PairVariant::SPacGAN: objective = [&](double c) { return dd * f1(c) + gg * f2(c); }; break;
        case PairVariant::SPacGANRf:
          objective = [&](double c) { return dd * f1(c) + gg * f2(c) + lambda * (a + b) * neutral_ce(c); };
          break;
        case PairVariant::LSPacGANRf:
          objective = [&](double c) {
            return dd * (c - 1) * (c - 1) + gg * (c + 1) * (c + 1) + lambda * (a + b) * c * c;
          };
          break;
        case PairVariant::WComGAN: objective = [&](double c) { return -a * c + b * c; }; break;
      }
      const MinResult m = minimize_scalar(objective);
      if (m.unbounded) {
        out.unbounded = true;
        out.values(x, y) = NAN;
        continue;
      }
      out.values(x, y) = sigmoid_output ? sigmoid(m.argmin) : m.argmin;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

MinResult golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  MinResult r;
  r.argmin = 0.5 * (a + b);
  r.value = f(r.argmin);
  // Compare against the edges: a monotone objective ends up pinned there.
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo < r.value) {
    r.argmin = lo;
    r.value = flo;
  }
  if (fhi < r.value) {
    r.argmin = hi;
    r.value = fhi;
  }
  return r;
}

MinResult minimize_scalar(const std::function<double(double)>& f) {
  constexpr double kTol = 1e-10;
  double half_width = 30.0;
  for (int expansion = 0; expansion < 12; ++expansion) {
    MinResult r = golden_section(f, -half_width, half_width, kTol);
    const bool at_edge = std::abs(std::abs(r.argmin) - half_width) <= 1e3 * kTol;
    if (!at_edge) return r;
    const double outward = std::copysign(1.01 * half_width, r.argmin);
    if (!(f(outward) < r.value)) return r;
    half_width *= 2.0;
  }
  MinResult r;
  r.unbounded = true;
  r.argmin = NAN;
  r.value = -INFINITY;
  return r;
}

// ---------------------------------------------------------------------------

std::string to_string(DivergenceKind k) {
  switch (k) {
    case DivergenceKind::KL: return "kl";
    case DivergenceKind::JSD: return "jsd";
    case DivergenceKind::W1: return "w1";
    case DivergenceKind::LeCam: return "lecam";
  }
  return "?";
}

namespace {

double kl(const Vector& p, const Vector& q) {
  double s = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return INFINITY;
    s += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(s, 0.0);
}

}  // namespace

double divergence(DivergenceKind kind, const DiscreteDist& p, const DiscreteDist& q) {
  check_matched(p, q);
  const Vector& a = p.probs();
  const Vector& b = q.probs();
  switch (kind) {
    case DivergenceKind::KL: return kl(a, b);
    case DivergenceKind::JSD: {
      const Vector m = 0.5 * (a + b);
      return std::clamp(0.5 * kl(a, m) + 0.5 * kl(b, m), 0.0, std::log(2.0));
    }
    case DivergenceKind::W1: {
      const auto& s = p.support();
      std::vector<std::size_t> order(s.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return s[i] < s[j]; });
      double cdf_gap = 0.0;
      double w = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const auto i = static_cast<Index>(order[k]);
        cdf_gap += a[i] - b[i];
        w += std::abs(cdf_gap) * (s[order[k + 1]] - s[order[k]]);
      }
      return w;
    }
    case DivergenceKind::LeCam: {
      double s = 0.0;
      for (Index i = 0; i < a.size(); ++i) {
        const double t = a[i] + b[i];
        if (t > 0.0) s += (a[i] - b[i]) * (a[i] - b[i]) / t;
      }
      return s;
    }
  }
  throw std::invalid_argument("unknown divergence");
}

DiscreteDist product_joint(const DiscreteDist& p, const DiscreteDist& q) {
  check_matched(p, q);
  const Index n = p.size();
  Vector joint(n * n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) joint[x * n + y] = p[x] * q[y];
  joint /= joint.sum();
  return DiscreteDist(std::move(joint));
}

double swapped_joint_divergence(const DiscreteDist& pd, const DiscreteDist& pg, DivergenceKind kind) {
  return divergence(kind, product_joint(pd, pg), product_joint(pg, pd));
}

double optimal_scomgan_disc_loss(const DiscreteDist& pd, const DiscreteDist& pg) {
  const Vector c = optimal_logit_sgan(pd, pg);
  const Index n = pd.size();
  double loss = 0.0;
  for (Index x = 0; x < n; ++x) {
    for (Index y = 0; y < n; ++y) {
      const double logit = c[x] - c[y];
      loss += pd[x] * pg[y] * eval_loss_fn(FamilyKind::SGAN, LossSlot::F1, logit);
      loss += pg[x] * pd[y] * eval_loss_fn(FamilyKind::SGAN, LossSlot::F2, logit);
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------

std::string to_string(GenObjective g) {
  switch (g) {
    case GenObjective::FakeSat: return "fake_sat";
    case GenObjective::FakeNonsat: return "fake_nonsat";
    case GenObjective::SameSat: return "same_sat";
    case GenObjective::SameNonsat: return "same_nonsat";
  }
  return "?";
}

std::string to_string(Theorem1Variant v) {
  switch (v) {
    case Theorem1Variant::FakeSum: return "fake_sat+fake_nonsat";
    case Theorem1Variant::SameSat: return "same_sat";
    case Theorem1Variant::SameNonsat: return "same_nonsat";
  }
  return "?";
}

Vector softmax(const Vector& theta) {
  const Vector e = (theta.array() - theta.maxCoeff()).exp().matrix();
  return e / e.sum();
}

namespace {

bool saturating(GenObjective g) { return g == GenObjective::FakeSat || g == GenObjective::SameSat; }

// Per-pair generator loss g1(C(comp, gen)) + g2(C(gen, comp)) for the SGAN
// family. The saturating pair is g1 = -f1, g2 = -f2.
ad::Var pair_gen_loss(bool sat, ad::Var comp_first, ad::Var gen_first) {
  if (sat)
    return -apply_loss_fn(FamilyKind::SGAN, LossSlot::F1, comp_first) -
           apply_loss_fn(FamilyKind::SGAN, LossSlot::F2, gen_first);
  return apply_loss_fn(FamilyKind::SGAN, LossSlot::G1, comp_first) +
         apply_loss_fn(FamilyKind::SGAN, LossSlot::G2, gen_first);
}

double pair_gen_loss_value(bool sat, double comp_first, double gen_first) {
  const FamilyKind s = FamilyKind::SGAN;
  if (sat) return -eval_loss_fn(s, LossSlot::F1, comp_first) - eval_loss_fn(s, LossSlot::F2, gen_first);
  return eval_loss_fn(s, LossSlot::G1, comp_first) + eval_loss_fn(s, LossSlot::G2, gen_first);
}

// J^T h for the softmax Jacobian J_ij = p_i (delta_ij - p_j).
Vector softmax_vjp(const Vector& p, const Vector& h) { return (p.array() * (h.array() - p.dot(h))).matrix(); }

Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x, double step) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector up = x;
    Vector down = x;
    up[i] += step;
    down[i] -= step;
    g[i] = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

// Weight kappa with d/dtheta E_z[loss] = kappa * sum_x grad p_g(x) C*(x) when the
// loss depends on the generated sample only through s = C*(G(z)) and its
// detached copy. Returned per support point; constant for these objectives.
Vector same_sample_weights(const Vector& c, bool sat) {
  Vector kappa(c.size());
  for (Index i = 0; i < c.size(); ++i) {
    ad::Tape tape;
    const ad::Var s = tape.input(ad::Matrix::Constant(1, 1, c[i]));
    const ad::Var frozen = ad::detach(s);
    const ad::Var loss = pair_gen_loss(sat, frozen - s, s - frozen);
    kappa[i] = ad::backward(loss)[s](0, 0);
  }
  return kappa;
}

void check_nondegenerate(const Vector& pg) {
  if (pg.minCoeff() <= 1e-12) throw DegenerateDistribution("softmax(theta) has a probability at or below 1e-12");
}

}  // namespace

Vector gen_objective_gradient(const DiscreteDist& pd, const Vector& theta, GenObjective g) {
  if (theta.size() != pd.size()) throw SupportMismatch("theta and p_d differ in length");
  const Vector pg = softmax(theta);
  check_nondegenerate(pg);
  const Vector c = optimal_logit_sgan(pd, DiscreteDist(pg, pd.support()));
  const bool sat = saturating(g);
  if (g == GenObjective::FakeSat || g == GenObjective::FakeNonsat) {
    // H(x) = E_{xbar ~ p_g}[loss(xbar, x)] with xbar and C* frozen.
    Vector h = Vector::Zero(pg.size());
    for (Index x = 0; x < pg.size(); ++x)
      for (Index xb = 0; xb < pg.size(); ++xb) h[x] += pg[xb] * pair_gen_loss_value(sat, c[xb] - c[x], c[x] - c[xb]);
    return softmax_vjp(pg, h);
  }
  const Vector kappa = same_sample_weights(c, sat);
  return softmax_vjp(pg, (kappa.array() * c.array()).matrix());
}

Theorem1Result theorem1_check(const DiscreteDist& pd, const Vector& theta, Theorem1Variant variant, double fd_step) {
  if (theta.size() != pd.size()) throw SupportMismatch("theta and p_d differ in length");
  const Vector pg = softmax(theta);
  check_nondegenerate(pg);
  const Vector c = optimal_logit_sgan(pd, DiscreteDist(pg, pd.support()));
  const Vector grad_kl = softmax_vjp(pg, -c);

  Theorem1Result r;
  std::function<double(const Vector&)> frozen_objective;
  if (variant == Theorem1Variant::FakeSum) {
    r.lhs = gen_objective_gradient(pd, theta, GenObjective::FakeSat) +
            gen_objective_gradient(pd, theta, GenObjective::FakeNonsat);
    r.rhs = 2.0 * grad_kl;
    Vector h = Vector::Zero(pg.size());
    for (Index x = 0; x < pg.size(); ++x)
      for (Index xb = 0; xb < pg.size(); ++xb)
        h[x] += pg[xb] * (pair_gen_loss_value(true, c[xb] - c[x], c[x] - c[xb]) +
                          pair_gen_loss_value(false, c[xb] - c[x], c[x] - c[xb]));
    frozen_objective = [h](const Vector& t) { return softmax(t).dot(h); };
  } else {
    const GenObjective g = variant == Theorem1Variant::SameSat ? GenObjective::SameSat : GenObjective::SameNonsat;
    r.lhs = gen_objective_gradient(pd, theta, g);
    r.rhs = grad_kl;
    const Vector weighted = (same_sample_weights(c, g == GenObjective::SameSat).array() * c.array()).matrix();
    frozen_objective = [weighted](const Vector& t) { return softmax(t).dot(weighted); };
  }
  r.max_abs_diff = (r.lhs - r.rhs).cwiseAbs().maxCoeff();

  const Vector pd_probs = pd.probs();
  auto kl_at = [&](const Vector& t) {
    const Vector q = softmax(t);
    return (q.array() * (q.array() / pd_probs.array()).log()).sum();
  };
  r.fd_kl_diff = (central_difference(kl_at, theta, fd_step) - grad_kl).cwiseAbs().maxCoeff();
  r.fd_objective_diff = (central_difference(frozen_objective, theta, fd_step) - r.lhs).cwiseAbs().maxCoeff();
  return r;
}

// ---------------------------------------------------------------------------

Vector lecam_optimal_phi(const DiscreteDist& pd, const DiscreteDist& pg, double lambda, double alpha_r) {
  check_matched(pd, pg);
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  const double scale = 1.0 / (2.0 * lambda) + alpha_r;
  Vector phi(pd.size());
  for (Index i = 0; i < pd.size(); ++i) {
    const double t = pd[i] + pg[i];
    phi[i] = t > 0.0 ? scale * (pd[i] - pg[i]) / t : 0.0;
  }
  return phi;
}

LeCamResult lecam_prop5_check(const DiscreteDist& pd, const DiscreteDist& pg, double lambda, double alpha_r) {
  const Vector phi = lecam_optimal_phi(pd, pg, lambda, alpha_r);
  LeCamResult r;
  r.lhs = pd.probs().dot(phi) - pg.probs().dot(phi);
  r.rhs = (1.0 / (2.0 * lambda) + alpha_r) * divergence(DivergenceKind::LeCam, pd, pg);
  r.abs_diff = std::abs(r.lhs - r.rhs);
  for (Index i = 0; i < pd.size(); ++i) {
    const double t = pd[i] + pg[i];
    if (t <= 0.0) continue;
    const double wd = pd[i] / t;
    const double wg = pg[i] / t;
    const MinResult m = minimize_scalar([&](double v) {
      return wd * (lambda * (v - alpha_r) * (v - alpha_r) - v) + wg * (lambda * (v + alpha_r) * (v + alpha_r) + v);
    });
    r.phi_numeric_diff = std::max(r.phi_numeric_diff, std::abs(m.argmin - phi[i]));
  }
  return r;
}

}  // namespace comgan::oracle
