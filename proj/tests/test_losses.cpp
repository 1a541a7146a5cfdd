#include "comgan/losses.hpp"

#include "doctest.h"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>

using namespace comgan;

namespace {

const double kLn2 = std::log(2.0);
const FamilyKind kFamilies[] = {FamilyKind::SGAN, FamilyKind::LSGAN, FamilyKind::Hinge, FamilyKind::WGAN};

Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Direct scalar transcriptions of the loss table, kept apart from the library.
double ref_f1(FamilyKind f, double t) {
  switch (f) {
    case FamilyKind::SGAN: return std::log1p(std::exp(-t));
    case FamilyKind::LSGAN: return (t - 1) * (t - 1);
    case FamilyKind::Hinge: return t < 1 ? 1 - t : 0.0;
    case FamilyKind::WGAN: return -t;
  }
  return NAN;
}
double ref_f2(FamilyKind f, double t) {
  switch (f) {
    case FamilyKind::SGAN: return std::log1p(std::exp(t));
    case FamilyKind::LSGAN: return (t + 1) * (t + 1);
    case FamilyKind::Hinge: return t > -1 ? 1 + t : 0.0;
    case FamilyKind::WGAN: return t;
  }
  return NAN;
}
double ref_g1(FamilyKind f, double t) { return (f == FamilyKind::SGAN || f == FamilyKind::LSGAN) ? ref_f2(f, t) : t; }
double ref_g2(FamilyKind f, double t) { return (f == FamilyKind::SGAN || f == FamilyKind::LSGAN) ? ref_f1(f, t) : -t; }

std::vector<double> phi_values(const MlpParams& p, const Matrix& x) {
  const Matrix out = mlp_eval(p, x);
  return {out.data(), out.data() + out.size()};
}

double avg(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

struct Setup {
  MlpParams disc;
  Matrix real;
  Matrix fake;
  BatchPairing pairing;
};

Setup make_setup(std::mt19937_64& rng, Index batch, Index in_width = 2) {
  const Index sizes[] = {in_width, 8, 8, 1};
  Setup s;
  s.disc = mlp_init(sizes, rng());
  s.real = random_matrix(rng, batch, 2);
  s.fake = random_matrix(rng, batch, 2, 1.5);
  s.pairing = make_pairing(batch, 1, rng);
  return s;
}

double disc_value(FamilyKind family, const DiscStructure& structure, const Regularizer& reg, const Setup& s) {
  ad::Tape tape;
  const BoundMlp net = bind_parameters(tape, s.disc);
  return disc_loss(family, structure, net, tape.input(s.real), tape.input(s.fake), reg, s.pairing).scalar();
}

double gen_value(FamilyKind family, const DiscStructure& structure, ComparativeSource source, const Setup& s) {
  ad::Tape tape;
  const BoundMlp net = bind_parameters(tape, s.disc);
  return gen_loss(family, structure, source, net, tape.input(s.real), tape.input(s.fake), std::nullopt, s.pairing)
      .scalar();
}

// Discriminator whose output layer is identically `c`.
MlpParams constant_disc(Index in_width, double c) {
  const Index sizes[] = {in_width, 8, 1};
  MlpParams p = mlp_init(sizes, 1);
  p.layers.back().weight.setZero();
  p.layers.back().bias.setConstant(c);
  return p;
}

// Single affine layer phi(x) = x * w.
MlpParams linear_disc(const Matrix& w) {
  const Index sizes[] = {w.rows(), 1};
  MlpParams p = mlp_init(sizes, 1);
  p.layers[0].weight = w;
  return p;
}

}  // namespace

TEST_CASE("loss table values") {
  CHECK(eval_loss_fn(FamilyKind::SGAN, LossSlot::F1, 0.0) == doctest::Approx(kLn2).epsilon(1e-15));
  CHECK(eval_loss_fn(FamilyKind::Hinge, LossSlot::F1, 2.0) == 0.0);
  CHECK(eval_loss_fn(FamilyKind::LSGAN, LossSlot::F1, 1.0) == 0.0);
  CHECK(eval_loss_fn(FamilyKind::WGAN, LossSlot::F2, -3.0) == -3.0);
  CHECK(activation(FamilyKind::SGAN, 0.0) == 0.5);
  CHECK(activation(FamilyKind::WGAN, 1.5) == 1.5);

  for (FamilyKind f : kFamilies) {
    for (double t = -6.0; t <= 6.0; t += 0.37) {
      CHECK(eval_loss_fn(f, LossSlot::F1, t) == doctest::Approx(ref_f1(f, t)).epsilon(1e-13));
      CHECK(eval_loss_fn(f, LossSlot::F2, t) == doctest::Approx(ref_f2(f, t)).epsilon(1e-13));
      CHECK(eval_loss_fn(f, LossSlot::G1, t) == doctest::Approx(ref_g1(f, t)).epsilon(1e-13));
      CHECK(eval_loss_fn(f, LossSlot::G2, t) == doctest::Approx(ref_g2(f, t)).epsilon(1e-13));
      for (LossSlot slot : {LossSlot::F1, LossSlot::F2, LossSlot::G1, LossSlot::G2}) {
        ad::Tape tape;
        const Var v = apply_loss_fn(f, slot, tape.input(Matrix::Constant(1, 1, t)));
        CHECK(v.scalar() == doctest::Approx(eval_loss_fn(f, slot, t)).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("SGAN loss is stable at extreme logits") {
  CHECK(eval_loss_fn(FamilyKind::SGAN, LossSlot::F1, 800.0) == 0.0);
  CHECK(eval_loss_fn(FamilyKind::SGAN, LossSlot::F1, -800.0) == doctest::Approx(800.0));
}

TEST_CASE("make_pairing draws a permutation and distinct mates") {
  std::mt19937_64 rng(1);
  const BatchPairing p = make_pairing(16, 3, rng);
  std::vector<Index> sorted = p.opposing;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < 16; ++i) CHECK(sorted[std::size_t(i)] == i);
  REQUIRE(p.real_mates.size() == 3);
  for (const auto& mates : p.real_mates)
    for (Index i = 0; i < 16; ++i) CHECK(mates[std::size_t(i)] != i);
  for (double e : p.interpolation) CHECK((e >= 0.0 && e < 1.0));
  CHECK_THROWS(make_pairing(1, 1, rng));
}

TEST_CASE("single structure reduces to the ordinary objectives") {
  std::mt19937_64 rng(20);
  const DiscStructure single{StructureKind::Single};
  for (int trial = 0; trial < 20; ++trial) {
    const Setup s = make_setup(rng, 16);
    const auto pr = phi_values(s.disc, s.real);
    const auto pf = phi_values(s.disc, s.fake);
    for (FamilyKind f : kFamilies) {
      double d = 0.0;
      double g = 0.0;
      for (std::size_t i = 0; i < pr.size(); ++i) {
        d += ref_f1(f, pr[i]) + ref_f2(f, pf[i]);
        g += ref_g1(f, pr[i]) + ref_g2(f, pf[i]);
      }
      d /= double(pr.size());
      g /= double(pr.size());
      CHECK(std::abs(disc_value(f, single, {}, s) - d) <= 1e-12);
      CHECK(std::abs(gen_value(f, single, ComparativeSource::RealData, s) - g) <= 1e-12);
    }
  }
}

TEST_CASE("pair subtraction reproduces the relativistic pairwise objective") {
  std::mt19937_64 rng(21);
  const DiscStructure sub{StructureKind::PairSubtract};
  for (int trial = 0; trial < 20; ++trial) {
    const Setup s = make_setup(rng, 16);
    const auto pr = phi_values(s.disc, s.real);
    const auto pf = phi_values(s.disc, s.fake);
    const auto& pi = s.pairing.opposing;
    for (FamilyKind f : kFamilies) {
      double d = 0.0;
      double g = 0.0;
      for (std::size_t i = 0; i < pr.size(); ++i) {
        const double real_i = pr[i];
        const double fake_pi = pf[std::size_t(pi[i])];
        d += ref_f1(f, real_i - fake_pi) + ref_f2(f, fake_pi - real_i);
        const double real_pi = pr[std::size_t(pi[i])];
        g += ref_g1(f, real_pi - pf[i]) + ref_g2(f, pf[i] - real_pi);
      }
      d /= double(pr.size());
      g /= double(pr.size());
      CHECK(std::abs(disc_value(f, sub, {}, s) - d) <= 1e-12);
      CHECK(std::abs(gen_value(f, sub, ComparativeSource::RealData, s) - g) <= 1e-12);
    }
  }
}

TEST_CASE("multi-comparative mean reproduces the relativistic average objective") {
  std::mt19937_64 rng(22);
  const DiscStructure mcm{StructureKind::MultiComparativeMean};
  for (int trial = 0; trial < 20; ++trial) {
    const Setup s = make_setup(rng, 16);
    const auto pr = phi_values(s.disc, s.real);
    const auto pf = phi_values(s.disc, s.fake);
    const double mr = avg(pr);
    const double mf = avg(pf);
    for (FamilyKind f : kFamilies) {
      double d = 0.0;
      double g = 0.0;
      double eq = 0.0;
      for (std::size_t i = 0; i < pr.size(); ++i) {
        d += ref_f1(f, pr[i] - mf) + ref_f2(f, pf[i] - mr);
        g += ref_g1(f, pr[i] - mf) + ref_g2(f, pf[i] - mr);
        eq += (pr[i] - mr) * (pr[i] - mr) + (pf[i] - mf) * (pf[i] - mf);
      }
      const double n = double(pr.size());
      CHECK(std::abs(disc_value(f, mcm, {}, s) - d / n) <= 1e-12);
      CHECK(std::abs(gen_value(f, mcm, ComparativeSource::RealData, s) - g / n) <= 1e-12);
      Regularizer reg{RegKind::Equality, 0.7};
      CHECK(std::abs(disc_value(f, mcm, reg, s) - (d + 0.7 * eq) / n) <= 1e-12);
    }
  }
}

TEST_CASE("perfect single discriminator drives the SGAN loss to zero") {
  const DiscStructure single{StructureKind::Single};
  Setup s;
  s.real = Matrix::Constant(4, 2, 1.0);
  s.fake = Matrix::Constant(4, 2, -1.0);
  std::mt19937_64 rng(0);
  s.pairing = make_pairing(4, 1, rng);
  double previous = INFINITY;
  for (double k : {1.0, 5.0, 20.0, 40.0}) {
    Matrix w(2, 1);
    w << k, 0.0;
    s.disc = linear_disc(w);
    const double loss = disc_value(FamilyKind::SGAN, single, {}, s);
    CHECK(loss < previous);
    previous = loss;
  }
  CHECK(previous < 1e-16);
}

TEST_CASE("zero-logit discriminator gives the ln 2 values") {
  std::mt19937_64 rng(1);
  Setup s = make_setup(rng, 8);
  s.disc = constant_disc(4, 0.0);
  const DiscStructure concat{StructureKind::PairConcat};
  ad::Tape tape;
  const BoundMlp net = bind_parameters(tape, s.disc);
  const DiscLossParts parts = disc_loss_parts(FamilyKind::SGAN, concat, net, tape.input(s.real), tape.input(s.fake),
                                              Regularizer{RegKind::Equality, 1.0}, s.pairing);
  CHECK(parts.base.scalar() == doctest::Approx(2 * kLn2).epsilon(1e-15));
  CHECK(parts.penalty.scalar() == doctest::Approx(2 * kLn2).epsilon(1e-15));
  CHECK(parts.total.scalar() == doctest::Approx(4 * kLn2).epsilon(1e-15));
  CHECK(4 * kLn2 == doctest::Approx(2.7726).epsilon(1e-4));

  CHECK(gen_value(FamilyKind::SGAN, concat, ComparativeSource::RealData, s) ==
        doctest::Approx(2 * kLn2).epsilon(1e-15));

  const DiscStructure pack{StructureKind::PackConcat, 2};
  CHECK(disc_value(FamilyKind::SGAN, pack, Regularizer{RegKind::Rf, 1.0}, s) ==
        doctest::Approx(4 * kLn2).epsilon(1e-15));
}

TEST_CASE("constant phi vanishes under the WGAN equality objective") {
  std::mt19937_64 rng(2);
  Setup s = make_setup(rng, 8);
  s.disc = constant_disc(2, 3.25);
  ad::Tape tape;
  const BoundMlp net = bind_parameters(tape, s.disc);
  const DiscLossParts parts =
      disc_loss_parts(FamilyKind::WGAN, DiscStructure{StructureKind::MultiComparativeMean}, net, tape.input(s.real),
                      tape.input(s.fake), Regularizer{RegKind::Equality, 1.0}, s.pairing);
  CHECK(parts.base.scalar() == 0.0);
  CHECK(parts.penalty.scalar() == 0.0);
}

TEST_CASE("equality terms are nonnegative and vanish only with zero logits") {
  std::mt19937_64 rng(3);
  for (FamilyKind f : {FamilyKind::LSGAN, FamilyKind::Hinge, FamilyKind::WGAN}) {
    for (StructureKind k : {StructureKind::PairSubtract, StructureKind::PairConcat}) {
      const Setup s = make_setup(rng, 8, k == StructureKind::PairConcat ? 4 : 2);
      ad::Tape tape;
      const BoundMlp net = bind_parameters(tape, s.disc);
      const DiscLossParts parts = disc_loss_parts(f, DiscStructure{k}, net, tape.input(s.real), tape.input(s.fake),
                                                  Regularizer{RegKind::Equality, 1.0}, s.pairing);
      CHECK(parts.penalty.scalar() > 0.0);
    }
  }
  Setup s = make_setup(rng, 8, 4);
  s.disc = constant_disc(4, 0.0);
  CHECK(disc_value(FamilyKind::WGAN, DiscStructure{StructureKind::PairConcat}, Regularizer{RegKind::Equality, 1.0},
                   s) == 0.0);

  // Cross-entropy to the neutral label: 0.5 softplus(-c) + 0.5 softplus(c) is smallest at D = 0.5.
  double best = INFINITY;
  double best_d = 0.0;
  for (int i = 1; i < 1000; ++i) {
    const double d = i / 1000.0;
    const double c = std::log(d / (1 - d));
    const double ce = 0.5 * eval_loss_fn(FamilyKind::SGAN, LossSlot::F1, c) +
                      0.5 * eval_loss_fn(FamilyKind::SGAN, LossSlot::F2, c);
    CHECK(ce >= kLn2 - 1e-15);
    if (ce < best) {
      best = ce;
      best_d = d;
    }
  }
  CHECK(best_d == doctest::Approx(0.5));
  CHECK(best == doctest::Approx(kLn2).epsilon(1e-15));
}

TEST_CASE("WGAN pair subtraction is unbounded without a regularizer and bounded with equality") {
  std::mt19937_64 rng(4);
  Setup s = make_setup(rng, 16);
  const DiscStructure sub{StructureKind::PairSubtract};
  // Orient phi so that the unregularized loss is negative.
  if (disc_value(FamilyKind::WGAN, sub, {}, s) > 0.0) {
    s.disc.layers.back().weight *= -1.0;
    s.disc.layers.back().bias *= -1.0;
  }
  const double base = disc_value(FamilyKind::WGAN, sub, {}, s);
  REQUIRE(base < 0.0);
  const double reg1 = disc_value(FamilyKind::WGAN, sub, Regularizer{RegKind::Equality, 1.0}, s);
  CHECK(std::isfinite(reg1));

  Setup scaled = s;
  double previous_reg = -INFINITY;
  for (double k : {10.0, 100.0, 1000.0}) {
    scaled.disc.layers.back().weight = s.disc.layers.back().weight * k;
    scaled.disc.layers.back().bias = s.disc.layers.back().bias * k;
    CHECK(disc_value(FamilyKind::WGAN, sub, {}, scaled) == doctest::Approx(k * base).epsilon(1e-10));
    const double with_reg = disc_value(FamilyKind::WGAN, sub, Regularizer{RegKind::Equality, 1.0}, scaled);
    CHECK(with_reg > previous_reg);
    previous_reg = with_reg;
  }
  CHECK(previous_reg > reg1);
}

TEST_CASE("WGAN pair subtraction generator loss is twice the single-structure loss") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Setup s = make_setup(rng, 16);
    const double single = gen_value(FamilyKind::WGAN, DiscStructure{}, ComparativeSource::RealData, s);
    const double pair =
        gen_value(FamilyKind::WGAN, DiscStructure{StructureKind::PairSubtract}, ComparativeSource::RealData, s);
    CHECK(std::abs(pair - 2.0 * single) <= 1e-12);
  }
}

TEST_CASE("same-sample comparisons have exactly zero logit") {
  std::mt19937_64 rng(6);
  const Setup s = make_setup(rng, 8);
  const DiscStructure sub{StructureKind::PairSubtract};
  CHECK(gen_value(FamilyKind::WGAN, sub, ComparativeSource::SameSample, s) == 0.0);
  CHECK(gen_value(FamilyKind::Hinge, sub, ComparativeSource::SameSample, s) == 0.0);
  CHECK(gen_value(FamilyKind::SGAN, sub, ComparativeSource::SameSample, s) == doctest::Approx(2 * kLn2).epsilon(1e-15));
  CHECK(gen_value(FamilyKind::LSGAN, sub, ComparativeSource::SameSample, s) == 2.0);
}

TEST_CASE("generator loss sends no gradient to the discriminator or to detached comparatives") {
  std::mt19937_64 rng(7);
  for (StructureKind k : {StructureKind::PairSubtract, StructureKind::PairConcat, StructureKind::MultiComparativeMean}) {
    for (ComparativeSource src :
         {ComparativeSource::RealData, ComparativeSource::FakeData, ComparativeSource::SameSample}) {
      const DiscStructure structure{k};
      const Setup s = make_setup(rng, 8, structure.network_input_width(2));
      ad::Tape tape;
      const BoundMlp net = bind_parameters(tape, s.disc);
      const Var real = tape.input(s.real);
      const Var fake = tape.input(s.fake);
      const Var other = tape.input(random_matrix(rng, 8, 2));
      const Var loss = gen_loss(FamilyKind::SGAN, structure, src, net, real, fake, other, s.pairing);
      const ad::Gradients g = ad::backward(loss);
      for (const Var& p : net.parameters()) CHECK(g[p].isZero(0.0));
      CHECK(g[other].isZero(0.0));
      CHECK(g[fake].cwiseAbs().maxCoeff() > 0.0);
    }
  }
}

TEST_CASE("same-sample gradient equals a frozen copy of the batch as comparative") {
  std::mt19937_64 rng(8);
  Setup s = make_setup(rng, 8, 4);
  std::iota(s.pairing.opposing.begin(), s.pairing.opposing.end(), Index{0});
  const DiscStructure concat{StructureKind::PairConcat};
  ad::Tape tape;
  const BoundMlp net = bind_parameters(tape, s.disc);
  const Var fake = tape.input(s.fake);
  const Var same = gen_loss(FamilyKind::LSGAN, concat, ComparativeSource::SameSample, net, std::nullopt, fake,
                            std::nullopt, s.pairing);
  const Var copy = tape.constant(s.fake);
  const Var frozen = gen_loss(FamilyKind::LSGAN, concat, ComparativeSource::FakeData, net, std::nullopt, fake, copy,
                              s.pairing);
  CHECK(same.scalar() == frozen.scalar());
  CHECK(ad::backward(same)[fake] == ad::backward(frozen)[fake]);
}

TEST_CASE("gradient penalty on affine critics") {
  std::mt19937_64 rng(9);
  const Index batch = 8;
  for (double norm : {1.0, 2.0, 0.5}) {
    for (StructureKind k : {StructureKind::Single, StructureKind::PairSubtract, StructureKind::PairConcat,
                            StructureKind::MultiComparativeMean}) {
      const DiscStructure structure{k};
      Matrix w = random_matrix(rng, structure.network_input_width(2), 1);
      w *= norm / w.norm();
      Setup s;
      s.disc = linear_disc(w);
      s.real = random_matrix(rng, batch, 2);
      s.fake = random_matrix(rng, batch, 2);
      s.pairing = make_pairing(batch, 1, rng);
      ad::Tape tape;
      const BoundMlp net = bind_parameters(tape, s.disc);
      const DiscLossParts parts = disc_loss_parts(FamilyKind::WGAN, structure, net, tape.input(s.real),
                                                  tape.input(s.fake), Regularizer{RegKind::GradientPenalty, 3.0},
                                                  s.pairing);
      CHECK(parts.penalty.scalar() == doctest::Approx(3.0 * (norm - 1) * (norm - 1)).epsilon(1e-9));
    }
  }
}

TEST_CASE("rf and fixed-anchor terms match direct sums") {
  std::mt19937_64 rng(10);
  for (FamilyKind f : kFamilies) {
    const Setup s = make_setup(rng, 12);
    const auto pr = phi_values(s.disc, s.real);
    const auto pf = phi_values(s.disc, s.fake);
    const double mr = avg(pr);
    const double mf = avg(pf);
    const auto& rm = s.pairing.real_mate();
    const auto& fm = s.pairing.fake_mate();
    double base = 0.0;
    double rf = 0.0;
    double anchor_base = 0.0;
    double anchor = 0.0;
    const double a = 0.4;
    for (std::size_t i = 0; i < pr.size(); ++i) {
      base += ref_f1(f, pr[i] + pr[std::size_t(rm[i])]) + ref_f2(f, pf[i] + pf[std::size_t(fm[i])]);
      rf += (pr[i] + mf) * (pr[i] + mf) + (pf[i] + mr) * (pf[i] + mr);
      anchor_base += ref_f1(f, pr[i]) + ref_f2(f, pf[i]);
      anchor += (pr[i] - a) * (pr[i] - a) + (pf[i] + a) * (pf[i] + a);
    }
    const double n = double(pr.size());
    CHECK(std::abs(disc_value(f, DiscStructure{StructureKind::PairSum}, Regularizer{RegKind::Rf, 0.5}, s) -
                   (base + 0.5 * rf) / n) <= 1e-12);
    Regularizer lecam{RegKind::LeCamFixed, 2.0};
    lecam.alpha_r = a;
    CHECK(std::abs(disc_value(f, DiscStructure{}, lecam, s) - (anchor_base + 2.0 * anchor) / n) <= 1e-12);
  }
}

TEST_CASE("pack structures use real packs and fake packs") {
  std::mt19937_64 rng(11);
  const DiscStructure pack3{StructureKind::PackConcat, 3};
  Setup s = make_setup(rng, 10, 6);
  s.pairing = make_pairing(10, 2, rng);
  auto packed = [&](const Matrix& x, const std::vector<std::vector<Index>>& mates) {
    Matrix out(x.rows(), 6);
    for (Index i = 0; i < x.rows(); ++i)
      out.row(i) << x.row(i), x.row(mates[0][std::size_t(i)]), x.row(mates[1][std::size_t(i)]);
    return out;
  };
  const auto pr = phi_values(s.disc, packed(s.real, s.pairing.real_mates));
  const auto pf = phi_values(s.disc, packed(s.fake, s.pairing.fake_mates));
  double d = 0.0;
  double g = 0.0;
  for (std::size_t i = 0; i < pr.size(); ++i) {
    d += ref_f1(FamilyKind::Hinge, pr[i]) + ref_f2(FamilyKind::Hinge, pf[i]);
    g += ref_g1(FamilyKind::Hinge, pr[i]) + ref_g2(FamilyKind::Hinge, pf[i]);
  }
  CHECK(std::abs(disc_value(FamilyKind::Hinge, pack3, {}, s) - d / 10.0) <= 1e-12);
  CHECK(std::abs(gen_value(FamilyKind::Hinge, pack3, ComparativeSource::RealData, s) - g / 10.0) <= 1e-12);
}

TEST_CASE("incompatible combinations are rejected") {
  const Regularizer eq{RegKind::Equality};
  const Regularizer rf{RegKind::Rf};
  const Regularizer lecam{RegKind::LeCamFixed};
  CHECK_THROWS_AS(check_compatible(DiscStructure{StructureKind::Single}, eq), IncompatibleObjective);
  CHECK_THROWS_AS(check_compatible(DiscStructure{StructureKind::PairSum}, eq), IncompatibleObjective);
  CHECK_THROWS_AS(check_compatible(DiscStructure{StructureKind::PairSubtract}, rf), IncompatibleObjective);
  CHECK_THROWS_AS(check_compatible(DiscStructure{StructureKind::PackConcat, 3}, rf), IncompatibleObjective);
  CHECK_THROWS_AS(check_compatible(DiscStructure{StructureKind::PairConcat}, lecam), IncompatibleObjective);
  CHECK_THROWS_AS(check_compatible(DiscStructure{}, Regularizer{}, ComparativeSource::SameSample),
                  IncompatibleObjective);
  CHECK_THROWS_AS(check_compatible(DiscStructure{}, Regularizer{RegKind::None, -1.0}), std::invalid_argument);
  Regularizer bad_anchor{RegKind::LeCamFixed};
  bad_anchor.alpha_r = INFINITY;
  CHECK_THROWS_AS(check_compatible(DiscStructure{}, bad_anchor), std::invalid_argument);
  CHECK_NOTHROW(check_compatible(DiscStructure{StructureKind::PairSum}, rf));
  CHECK_NOTHROW(check_compatible(DiscStructure{StructureKind::PackConcat, 2}, rf));
  CHECK_NOTHROW(check_compatible(DiscStructure{StructureKind::MultiComparativeMean}, eq));

  std::mt19937_64 rng(12);
  const Setup s = make_setup(rng, 4);
  ad::Tape tape;
  const BoundMlp net = bind_parameters(tape, s.disc);
  CHECK_THROWS(gen_loss(FamilyKind::SGAN, DiscStructure{StructureKind::PairSubtract}, ComparativeSource::RealData, net,
                        std::nullopt, tape.input(s.fake), std::nullopt, s.pairing));
  CHECK_THROWS(gen_loss(FamilyKind::SGAN, DiscStructure{StructureKind::PairSubtract}, ComparativeSource::FakeData, net,
                        tape.input(s.real), tape.input(s.fake), std::nullopt, s.pairing));
}

TEST_CASE("discriminator loss gradients agree with finite differences") {
  std::mt19937_64 rng(13);
  struct Combo {
    FamilyKind family;
    DiscStructure structure;
    Regularizer reg;
  };
  const Combo combos[] = {
      {FamilyKind::SGAN, {StructureKind::PairConcat}, {RegKind::Equality}},
      {FamilyKind::LSGAN, {StructureKind::PairSubtract}, {RegKind::Equality}},
      {FamilyKind::Hinge, {StructureKind::MultiComparativeMean}, {RegKind::Equality}},
      {FamilyKind::WGAN, {StructureKind::Single}, {RegKind::GradientPenalty, 0.1}},
      {FamilyKind::WGAN, {StructureKind::PairConcat}, {RegKind::GradientPenalty}},
      {FamilyKind::SGAN, {StructureKind::PairSum}, {RegKind::Rf}},
      {FamilyKind::LSGAN, {StructureKind::PackConcat, 2}, {RegKind::Rf}},
      {FamilyKind::WGAN, {StructureKind::Single}, {RegKind::LeCamFixed, 1.0, 0.01, 0.3}},
  };
  for (const Combo& c : combos) {
    const Setup s = make_setup(rng, 6, c.structure.network_input_width(2));
    auto loss_at = [&](const Matrix& w0) {
      Setup t = s;
      t.disc.layers[0].weight = w0;
      return disc_value(c.family, c.structure, c.reg, t);
    };
    ad::Tape tape;
    const BoundMlp net = bind_parameters(tape, s.disc);
    const Var loss = disc_loss(c.family, c.structure, net, tape.input(s.real), tape.input(s.fake), c.reg, s.pairing);
    const Matrix analytic = ad::backward(loss)[net.weights[0]];
    const Matrix numeric = ad::finite_diff_gradient(loss_at, s.disc.layers[0].weight, 1e-5);
    const double err = (analytic - numeric).cwiseAbs().maxCoeff() / std::max(1.0, numeric.cwiseAbs().maxCoeff());
    INFO(to_string(c.family), " ", to_string(c.structure), " ", to_string(c.reg));
    CHECK(err < 1e-6);
  }
}
