#include "comgan/nets.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace comgan;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

const Index kSizes[] = {2, 8, 8, 1};

}  // namespace

TEST_CASE("mlp_init shapes, zero biases, determinism") {
  const Index sizes[] = {2, 4, 1};
  const MlpParams p = mlp_init(sizes, 7);
  REQUIRE(p.layers.size() == 2);
  CHECK(p.layers[0].weight.rows() == 2);
  CHECK(p.layers[0].weight.cols() == 4);
  CHECK(p.layers[0].bias.cols() == 4);
  CHECK(p.layers[1].weight.rows() == 4);
  CHECK(p.layers[1].weight.cols() == 1);
  CHECK(p.layers[1].bias.cols() == 1);
  CHECK(p.parameter_count() == 8 + 4 + 4 + 1);
  for (const Layer& l : p.layers) CHECK(l.bias.isZero(0.0));

  const MlpParams q = mlp_init(sizes, 7);
  for (std::size_t l = 0; l < p.layers.size(); ++l) CHECK(p.layers[l].weight == q.layers[l].weight);
  const MlpParams other = mlp_init(sizes, 8);
  CHECK(p.layers[0].weight != other.layers[0].weight);
}

TEST_CASE("mlp_init weight scale follows fan-in") {
  const Index sizes[] = {200, 400};
  const MlpParams p = mlp_init(sizes, 1);
  const Matrix& w = p.layers[0].weight;
  const double var = w.array().square().mean() - std::pow(w.mean(), 2);
  CHECK(var == doctest::Approx(2.0 / 200.0).epsilon(0.05));
}

TEST_CASE("mlp_init rejects bad sizes") {
  const Index one[] = {3};
  const Index zero[] = {2, 0, 1};
  CHECK_THROWS_AS(mlp_init(one, 0), std::invalid_argument);
  CHECK_THROWS_AS(mlp_init(zero, 0), std::invalid_argument);
}

TEST_CASE("taped forward matches plain evaluation") {
  std::mt19937_64 rng(3);
  for (OutputActivation act : {OutputActivation::Identity, OutputActivation::Tanh}) {
    const MlpParams p = mlp_init(kSizes, 11, act);
    const Matrix x = random_matrix(rng, 5, 2);
    ad::Tape tape;
    const BoundMlp net = bind_parameters(tape, p);
    const Var out = mlp_forward(net, tape.input(x));
    CHECK((out.value() - mlp_eval(p, x)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(mlp_forward(net, tape.input(random_matrix(rng, 5, 3))), ad::ShapeError);
  }
}

TEST_CASE("pair structures: antisymmetry, symmetry, zero on equal inputs") {
  std::mt19937_64 rng(5);
  const MlpParams phi = mlp_init(kSizes, 2);
  const DiscStructure sub{StructureKind::PairSubtract};
  const DiscStructure sum{StructureKind::PairSum};
  for (int trial = 0; trial < 20; ++trial) {
    ad::Tape tape;
    const BoundMlp net = bind_parameters(tape, phi);
    const Var x = tape.input(random_matrix(rng, 6, 2));
    const Var y = tape.input(random_matrix(rng, 6, 2));
    const Matrix xy = disc_logit(sub, net, x, y).value();
    const Matrix yx = disc_logit(sub, net, y, x).value();
    CHECK(xy == -yx);
    CHECK(disc_logit(sub, net, x, x).value().isZero(0.0));
    CHECK(disc_logit(sum, net, x, y).value() == disc_logit(sum, net, y, x).value());
  }
}

TEST_CASE("multi-comparative mean with one comparative equals pair subtraction") {
  std::mt19937_64 rng(6);
  const MlpParams phi = mlp_init(kSizes, 4);
  ad::Tape tape;
  const BoundMlp net = bind_parameters(tape, phi);
  const Var x = tape.input(random_matrix(rng, 1, 2));
  const Var y = tape.input(random_matrix(rng, 1, 2));
  const DiscStructure mcm{StructureKind::MultiComparativeMean};
  const DiscStructure sub{StructureKind::PairSubtract};
  CHECK(disc_logit(mcm, net, x, y).value() == disc_logit(sub, net, x, y).value());

  const Var ys = tape.input(random_matrix(rng, 4, 2));
  const Matrix got = disc_logit(mcm, net, x, ys).value();
  const double expect = mlp_eval(phi, x.value())(0, 0) - mlp_eval(phi, ys.value()).mean();
  CHECK(got(0, 0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("concatenation structures") {
  std::mt19937_64 rng(7);
  const DiscStructure concat{StructureKind::PairConcat};
  const DiscStructure pack3{StructureKind::PackConcat, 3};
  CHECK(concat.network_input_width(2) == 4);
  CHECK(pack3.network_input_width(2) == 6);
  CHECK_FALSE(concat.shares_phi());
  CHECK(DiscStructure{StructureKind::PairSum}.shares_phi());
  CHECK(to_string(pack3) == "pack_concat(3)");

  const Index wide[] = {4, 8, 1};
  const MlpParams psi = mlp_init(wide, 1);
  ad::Tape tape;
  const BoundMlp net = bind_parameters(tape, psi);
  const Var x = tape.input(random_matrix(rng, 3, 2));
  const Var y = tape.input(random_matrix(rng, 3, 2));
  const Matrix same = disc_logit(concat, net, x, x).value();
  CHECK(same.allFinite());
  Matrix joined(3, 4);
  joined << x.value(), y.value();
  CHECK(disc_logit(concat, net, x, y).value() == mlp_eval(psi, joined));

  const Index wider[] = {6, 8, 1};
  const MlpParams psi3 = mlp_init(wider, 1);
  const BoundMlp net3 = bind_parameters(tape, psi3);
  const Var z = tape.input(random_matrix(rng, 3, 2));
  const Var slots[] = {x, y, z};
  Matrix packed(3, 6);
  packed << x.value(), y.value(), z.value();
  CHECK((disc_logit(pack3, net3, slots).value() - mlp_eval(psi3, packed)).cwiseAbs().maxCoeff() < 1e-14);
  const Var two[] = {x, y};
  CHECK_THROWS_AS(disc_logit(pack3, net3, two), StructureError);
}

TEST_CASE("missing inputs are rejected") {
  const MlpParams phi = mlp_init(kSizes, 4);
  ad::Tape tape;
  const BoundMlp net = bind_parameters(tape, phi);
  const Var x = tape.input(Matrix::Zero(2, 2));
  CHECK_THROWS_AS(disc_logit(DiscStructure{StructureKind::PairSubtract}, net, x), StructureError);
  CHECK_THROWS_AS(disc_logit(DiscStructure{StructureKind::Single}, net, x, x), StructureError);
  CHECK_THROWS_AS(disc_logit(DiscStructure{StructureKind::PairSubtract}, net, x, tape.input(Matrix::Zero(3, 2))),
                  ad::ShapeError);
}

TEST_CASE("generator prior is reproducible") {
  GenPrior prior;
  std::mt19937_64 a(9);
  std::mt19937_64 b(9);
  const Matrix za = prior.sample(100, a);
  CHECK(za == prior.sample(100, b));
  CHECK(za.cols() == 2);
  CHECK(std::abs(za.mean()) < 0.3);
}
