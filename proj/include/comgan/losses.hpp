#pragma once

// Discriminator and generator objectives: ordinary, relativistic (pairwise
// and batch-mean), comparative pair structures, packed inputs, and the
// equality / rf / gradient-penalty / fixed-anchor regularizers.

#include "comgan/nets.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace comgan {

enum class FamilyKind { SGAN, LSGAN, Hinge, WGAN };
enum class LossSlot { F1, F2, G1, G2 };

std::string to_string(FamilyKind f);

// Scalar loss maps. SGAN uses the non-saturating generator pair.
double eval_loss_fn(FamilyKind family, LossSlot slot, double t);
Var apply_loss_fn(FamilyKind family, LossSlot slot, Var t);
// Output activation used to report D = A(C): sigmoid for SGAN, identity otherwise.
double activation(FamilyKind family, double logit);

enum class ComparativeSource { RealData, FakeData, SameSample };
std::string to_string(ComparativeSource c);

enum class RegKind { None, Equality, Rf, GradientPenalty, WeightClip, LeCamFixed };

struct Regularizer {
  RegKind kind = RegKind::None;
  double lambda = 1.0;
  double clip = 0.01;     // WeightClip
  double alpha_r = 0.0;   // LeCamFixed; alpha_f = -alpha_r

  void validate() const;
};

std::string to_string(const Regularizer& r);

class IncompatibleObjective : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws IncompatibleObjective when the regularizer does not apply to the
// structure, or the comparative source does not apply to it.
void check_compatible(const DiscStructure& s, const Regularizer& r,
                      ComparativeSource source = ComparativeSource::RealData);

// Random within-batch pairings drawn once per step. Real sample i is paired
// with fake sample `opposing[i]`; `real_mate` / `fake_mate` give a distinct
// same-class partner; packs of n slots use `*_mates[0..n-2]`.
struct BatchPairing {
  std::vector<Index> opposing;
  std::vector<std::vector<Index>> real_mates;
  std::vector<std::vector<Index>> fake_mates;
  std::vector<double> interpolation;  // gradient-penalty mixing weights in [0,1)

  const std::vector<Index>& real_mate() const { return real_mates.front(); }
  const std::vector<Index>& fake_mate() const { return fake_mates.front(); }
};

// `extra_slots` is pack size minus one (at least one set of mates is drawn).
BatchPairing make_pairing(Index batch, int extra_slots, std::mt19937_64& rng);

struct DiscLossParts {
  Var total;
  Var base;
  Var penalty;  // lambda-weighted regularizer term; zero constant when absent
};

// real, fake: (B x d) batches; fake is treated as given (the caller detaches).
DiscLossParts disc_loss_parts(FamilyKind family, const DiscStructure& s, const BoundMlp& disc, Var real, Var fake,
                              const Regularizer& reg, const BatchPairing& pairing);

inline Var disc_loss(FamilyKind family, const DiscStructure& s, const BoundMlp& disc, Var real, Var fake,
                     const Regularizer& reg, const BatchPairing& pairing) {
  return disc_loss_parts(family, s, disc, real, fake, reg, pairing).total;
}

// The same network with every weight and bias behind a detach node.
BoundMlp detached(const BoundMlp& net);

// fake = G(z), differentiable. The discriminator is detached, so no gradient
// reaches its parameters. `real` is required for RealData and for pack
// and single structures; `other_fake` (an independent generated batch) for
// FakeData. Comparatives drawn from generated data are detached here.
Var gen_loss(FamilyKind family, const DiscStructure& s, ComparativeSource source, const BoundMlp& disc,
             std::optional<Var> real, Var fake, std::optional<Var> other_fake, const BatchPairing& pairing);

// Clamp every discriminator weight and bias to [-c, c].
void clip_weights(MlpParams& params, double c);

}  // namespace comgan
