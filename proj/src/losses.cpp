#include "comgan/losses.hpp"

#include <algorithm>
#include <cmath>

namespace comgan {

using namespace comgan::ad;

std::string to_string(FamilyKind f) {
  switch (f) {
    case FamilyKind::SGAN: return "sgan";
    case FamilyKind::LSGAN: return "lsgan";
    case FamilyKind::Hinge: return "hinge";
    case FamilyKind::WGAN: return "wgan";
  }
  return "?";
}

std::string to_string(ComparativeSource c) {
  switch (c) {
    case ComparativeSource::RealData: return "real_data";
    case ComparativeSource::FakeData: return "fake_data";
    case ComparativeSource::SameSample: return "same_sample";
  }
  return "?";
}

std::string to_string(const Regularizer& r) {
  switch (r.kind) {
    case RegKind::None: return "none";
    case RegKind::Equality: return "equality";
    case RegKind::Rf: return "rf";
    case RegKind::GradientPenalty: return "gp";
    case RegKind::WeightClip: return "clip(" + std::to_string(r.clip) + ")";
    case RegKind::LeCamFixed: return "lecam(" + std::to_string(r.alpha_r) + ")";
  }
  return "?";
}

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double eval_loss_fn(FamilyKind family, LossSlot slot, double t) {
  // g1 = f2 and g2 = f1 for SGAN and LSGAN.
  if (family == FamilyKind::SGAN || family == FamilyKind::LSGAN) {
    if (slot == LossSlot::G1) slot = LossSlot::F2;
    if (slot == LossSlot::G2) slot = LossSlot::F1;
  }
  switch (family) {
    case FamilyKind::SGAN: return slot == LossSlot::F1 ? softplus(-t) : softplus(t);
    case FamilyKind::LSGAN: return slot == LossSlot::F1 ? (t - 1.0) * (t - 1.0) : (t + 1.0) * (t + 1.0);
    case FamilyKind::Hinge:
      switch (slot) {
        case LossSlot::F1: return std::max(0.0, 1.0 - t);
        case LossSlot::F2: return std::max(0.0, 1.0 + t);
        case LossSlot::G1: return t;
        case LossSlot::G2: return -t;
      }
      break;
    case FamilyKind::WGAN:
      return (slot == LossSlot::F1 || slot == LossSlot::G2) ? -t : t;
  }
  return 0.0;
}

Var apply_loss_fn(FamilyKind family, LossSlot slot, Var t) {
  if (family == FamilyKind::SGAN || family == FamilyKind::LSGAN) {
    if (slot == LossSlot::G1) slot = LossSlot::F2;
    if (slot == LossSlot::G2) slot = LossSlot::F1;
  }
  switch (family) {
    case FamilyKind::SGAN: return slot == LossSlot::F1 ? ad::softplus(-t) : ad::softplus(t);
    case FamilyKind::LSGAN: return slot == LossSlot::F1 ? square(t - 1.0) : square(t + 1.0);
    case FamilyKind::Hinge:
      switch (slot) {
        case LossSlot::F1: return relu(1.0 - t);
        case LossSlot::F2: return relu(t + 1.0);
        case LossSlot::G1: return t * 1.0;
        case LossSlot::G2: return -t;
      }
      break;
    case FamilyKind::WGAN:
      return (slot == LossSlot::F1 || slot == LossSlot::G2) ? -t : t * 1.0;
  }
  throw std::invalid_argument("apply_loss_fn: unknown family");
}

double activation(FamilyKind family, double logit) {
  return family == FamilyKind::SGAN ? 1.0 / (1.0 + std::exp(-logit)) : logit;
}

void Regularizer::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("regularizer lambda must be >= 0");
  if (kind == RegKind::WeightClip && !(clip > 0.0)) throw std::invalid_argument("clip value must be > 0");
  if (kind == RegKind::LeCamFixed && !std::isfinite(alpha_r)) throw std::invalid_argument("alpha_r must be finite");
}

void check_compatible(const DiscStructure& s, const Regularizer& r, ComparativeSource source) {
  r.validate();
  const std::string where = to_string(r) + " with " + to_string(s);
  switch (r.kind) {
    case RegKind::Equality:
      if (!s.is_pair() && s.kind != StructureKind::MultiComparativeMean)
        throw IncompatibleObjective(where + ": equality needs a pair or multi-comparative structure");
      break;
    case RegKind::Rf:
      if (s.kind != StructureKind::PairSum && !(s.kind == StructureKind::PackConcat && s.pack == 2))
        throw IncompatibleObjective(where + ": rf needs pair_sum or pack_concat(2)");
      break;
    case RegKind::LeCamFixed:
      if (s.kind != StructureKind::Single && s.kind != StructureKind::MultiComparativeMean)
        throw IncompatibleObjective(where + ": fixed-anchor objective needs a single phi");
      break;
    default: break;
  }
  if (s.kind == StructureKind::PackConcat && s.pack < 2) throw IncompatibleObjective("pack size must be >= 2");
  if (source != ComparativeSource::RealData && (s.kind == StructureKind::Single || s.is_pack()))
    throw IncompatibleObjective(to_string(source) + " comparatives need a pair or multi-comparative structure");
}

BatchPairing make_pairing(Index batch, int extra_slots, std::mt19937_64& rng) {
  if (batch < 2) throw std::invalid_argument("pairing needs a batch of at least 2");
  extra_slots = std::max(extra_slots, 1);
  BatchPairing p;
  p.opposing.resize(static_cast<std::size_t>(batch));
  for (Index i = 0; i < batch; ++i) p.opposing[static_cast<std::size_t>(i)] = i;
  std::shuffle(p.opposing.begin(), p.opposing.end(), rng);

  std::uniform_int_distribution<Index> offset(1, batch - 1);
  auto mates = [&] {
    std::vector<Index> m(static_cast<std::size_t>(batch));
    for (Index i = 0; i < batch; ++i) m[static_cast<std::size_t>(i)] = (i + offset(rng)) % batch;
    return m;
  };
  for (int k = 0; k < extra_slots; ++k) p.real_mates.push_back(mates());
  for (int k = 0; k < extra_slots; ++k) p.fake_mates.push_back(mates());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  p.interpolation.resize(static_cast<std::size_t>(batch));
  for (double& e : p.interpolation) e = unit(rng);
  return p;
}

namespace {

Var mean_loss(FamilyKind family, LossSlot slot, Var logits) { return mean(apply_loss_fn(family, slot, logits)); }

// CE(0.5 || sigmoid(c)) for SGAN, c^2 otherwise.
Var neutral_penalty(FamilyKind family, Var logits) {
  if (family == FamilyKind::SGAN)
    return mean(0.5 * ad::softplus(-logits) + 0.5 * ad::softplus(logits));
  return mean(square(logits));
}

Var broadcast_mean(Var column, Index rows) { return broadcast(mean(column), rows, 1); }

std::vector<Var> real_pack(Var x, const std::vector<std::vector<Index>>& mates, int slots) {
  std::vector<Var> pack{x};
  for (int k = 1; k < slots; ++k) pack.push_back(gather_rows(x, mates[static_cast<std::size_t>(k - 1)]));
  return pack;
}

Matrix mix(const Matrix& a, const Matrix& b, const std::vector<double>& eps) {
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double e = eps[static_cast<std::size_t>(i)];
    out.row(i) = e * a.row(i) + (1.0 - e) * b.row(i);
  }
  return out;
}

Var gradient_penalty(const DiscStructure& s, const BoundMlp& disc, Var real, Var fake,
                     const BatchPairing& pairing) {
  const Matrix& r = real.value();
  Matrix f(r.rows(), r.cols());
  for (Index i = 0; i < r.rows(); ++i) f.row(i) = fake.value().row(pairing.opposing[static_cast<std::size_t>(i)]);

  Matrix a;
  Matrix b;
  if (s.kind == StructureKind::PairConcat) {
    a.resize(r.rows(), 2 * r.cols());
    b.resize(r.rows(), 2 * r.cols());
    a << r, f;
    b << f, r;
  } else if (s.kind == StructureKind::PackConcat) {
    a.resize(r.rows(), s.pack * r.cols());
    b.resize(r.rows(), s.pack * r.cols());
    for (int k = 0; k < s.pack; ++k) {
      for (Index i = 0; i < r.rows(); ++i) {
        const Index ri = k == 0 ? i : pairing.real_mates[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(i)];
        const Index fi = k == 0 ? i : pairing.fake_mates[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(i)];
        a.block(i, k * r.cols(), 1, r.cols()) = r.row(ri);
        b.block(i, k * r.cols(), 1, r.cols()) = fake.value().row(fi);
      }
    }
  } else {
    a = r;
    b = f;
  }
  const Var point = input_on(real, mix(a, b, pairing.interpolation));
  const Var critic = sum(mlp_forward(disc, point));
  const Var g = input_gradient(critic, point);
  const Var norms = ad::sqrt(sum_cols(square(g)));
  return mean(square(norms - 1.0));
}

}  // namespace

BoundMlp detached(const BoundMlp& net) {
  BoundMlp out;
  out.output = net.output;
  for (const Var& w : net.weights) out.weights.push_back(detach(w));
  for (const Var& b : net.biases) out.biases.push_back(detach(b));
  return out;
}

DiscLossParts disc_loss_parts(FamilyKind family, const DiscStructure& s, const BoundMlp& disc, Var real, Var fake,
                              const Regularizer& reg, const BatchPairing& pairing) {
  check_compatible(s, reg);
  if (real.rows() != fake.rows()) throw ShapeError("disc_loss: real and fake batches differ in size");
  if (static_cast<Index>(pairing.opposing.size()) != real.rows())
    throw std::invalid_argument("disc_loss: pairing built for a different batch size");
  const Index batch = real.rows();
  const double lambda = reg.lambda;

  Var base;
  std::optional<Var> penalty;
  std::optional<Var> phi_real;
  std::optional<Var> phi_fake;

  switch (s.kind) {
    case StructureKind::Single: {
      phi_real = mlp_forward(disc, real);
      phi_fake = mlp_forward(disc, fake);
      base = mean_loss(family, LossSlot::F1, *phi_real) + mean_loss(family, LossSlot::F2, *phi_fake);
      break;
    }
    case StructureKind::PairSubtract: {
      phi_real = mlp_forward(disc, real);
      phi_fake = mlp_forward(disc, fake);
      const Var paired_fake = gather_rows(*phi_fake, pairing.opposing);
      const Var real_vs_fake = *phi_real - paired_fake;
      const Var fake_vs_real = paired_fake - *phi_real;
      base = mean_loss(family, LossSlot::F1, real_vs_fake) + mean_loss(family, LossSlot::F2, fake_vs_real);
      if (reg.kind == RegKind::Equality) {
        const Var rr = *phi_real - gather_rows(*phi_real, pairing.real_mate());
        const Var ff = *phi_fake - gather_rows(*phi_fake, pairing.fake_mate());
        penalty = lambda * (neutral_penalty(family, rr) + neutral_penalty(family, ff));
      }
      break;
    }
    case StructureKind::PairConcat: {
      const Var paired_fake = gather_rows(fake, pairing.opposing);
      const Var real_vs_fake = mlp_forward(disc, concat_cols(real, paired_fake));
      const Var fake_vs_real = mlp_forward(disc, concat_cols(paired_fake, real));
      base = mean_loss(family, LossSlot::F1, real_vs_fake) + mean_loss(family, LossSlot::F2, fake_vs_real);
      if (reg.kind == RegKind::Equality) {
        const Var rr = mlp_forward(disc, concat_cols(real, gather_rows(real, pairing.real_mate())));
        const Var ff = mlp_forward(disc, concat_cols(fake, gather_rows(fake, pairing.fake_mate())));
        penalty = lambda * (neutral_penalty(family, rr) + neutral_penalty(family, ff));
      }
      break;
    }
    case StructureKind::PairSum: {
      phi_real = mlp_forward(disc, real);
      phi_fake = mlp_forward(disc, fake);
      const Var rr = *phi_real + gather_rows(*phi_real, pairing.real_mate());
      const Var ff = *phi_fake + gather_rows(*phi_fake, pairing.fake_mate());
      base = mean_loss(family, LossSlot::F1, rr) + mean_loss(family, LossSlot::F2, ff);
      if (reg.kind == RegKind::Rf) {
        // phi(x) + E phi(fake) -> 0 for real x, and symmetrically.
        const Var real_shifted = *phi_real + broadcast_mean(*phi_fake, batch);
        const Var fake_shifted = *phi_fake + broadcast_mean(*phi_real, batch);
        penalty = lambda * (mean(square(real_shifted)) + mean(square(fake_shifted)));
      }
      break;
    }
    case StructureKind::PackConcat: {
      const Var rp = mlp_forward(disc, concat_cols(real_pack(real, pairing.real_mates, s.pack)));
      const Var fp = mlp_forward(disc, concat_cols(real_pack(fake, pairing.fake_mates, s.pack)));
      base = mean_loss(family, LossSlot::F1, rp) + mean_loss(family, LossSlot::F2, fp);
      if (reg.kind == RegKind::Rf) {
        const Var paired_fake = gather_rows(fake, pairing.opposing);
        const Var rf = mlp_forward(disc, concat_cols(real, paired_fake));
        const Var fr = mlp_forward(disc, concat_cols(paired_fake, real));
        penalty = lambda * (neutral_penalty(family, rf) + neutral_penalty(family, fr));
      }
      break;
    }
    case StructureKind::MultiComparativeMean: {
      phi_real = mlp_forward(disc, real);
      phi_fake = mlp_forward(disc, fake);
      const Var mean_real = broadcast_mean(*phi_real, batch);
      const Var mean_fake = broadcast_mean(*phi_fake, batch);
      base = mean_loss(family, LossSlot::F1, *phi_real - mean_fake) +
             mean_loss(family, LossSlot::F2, *phi_fake - mean_real);
      if (reg.kind == RegKind::Equality)
        penalty = lambda * (mean(square(*phi_real - mean_real)) + mean(square(*phi_fake - mean_fake)));
      break;
    }
  }

  if (reg.kind == RegKind::GradientPenalty) penalty = lambda * gradient_penalty(s, disc, real, fake, pairing);
  if (reg.kind == RegKind::LeCamFixed) {
    penalty = lambda * (mean(square(*phi_real - reg.alpha_r)) + mean(square(*phi_fake + reg.alpha_r)));
  }

  DiscLossParts parts;
  parts.base = base;
  if (penalty) {
    parts.penalty = *penalty;
    parts.total = base + *penalty;
  } else {
    parts.penalty = constant_on(base, Matrix::Zero(1, 1));
    parts.total = base;
  }
  return parts;
}

Var gen_loss(FamilyKind family, const DiscStructure& s, ComparativeSource source, const BoundMlp& disc_params,
             std::optional<Var> real, Var fake, std::optional<Var> other_fake, const BatchPairing& pairing) {
  check_compatible(s, Regularizer{}, source);
  const BoundMlp disc = detached(disc_params);
  const Index batch = fake.rows();

  if (s.kind == StructureKind::Single || s.is_pack()) {
    if (!real) throw std::invalid_argument("gen_loss: real batch required for " + to_string(s));
    if (s.kind == StructureKind::Single)
      return mean_loss(family, LossSlot::G1, mlp_forward(disc, *real)) +
             mean_loss(family, LossSlot::G2, mlp_forward(disc, fake));
    const Var rp = disc_logit(s, disc, real_pack(*real, pairing.real_mates, s.slots()));
    const Var fp = disc_logit(s, disc, real_pack(fake, pairing.fake_mates, s.slots()));
    return mean_loss(family, LossSlot::G1, rp) + mean_loss(family, LossSlot::G2, fp);
  }

  // Comparative samples y; logits C(y, G(z)) under g1 and C(G(z), y) under g2.
  Var comparative;
  bool permute = true;
  switch (source) {
    case ComparativeSource::RealData:
      if (!real) throw std::invalid_argument("gen_loss: real_data comparatives need a real batch");
      comparative = *real;
      break;
    case ComparativeSource::FakeData:
      if (!other_fake) throw std::invalid_argument("gen_loss: fake_data comparatives need an independent fake batch");
      comparative = detach(*other_fake);
      break;
    case ComparativeSource::SameSample:
      comparative = detach(fake);
      permute = false;
      break;
  }
  if (comparative.rows() != batch) throw ShapeError("gen_loss: comparative batch size differs");

  Var comp_first;
  Var gen_first;
  switch (s.kind) {
    case StructureKind::PairSubtract: {
      const Var phi_comp = mlp_forward(disc, comparative);
      const Var phi_gen = mlp_forward(disc, fake);
      const Var paired = permute ? gather_rows(phi_comp, pairing.opposing) : phi_comp;
      comp_first = paired - phi_gen;
      gen_first = phi_gen - paired;
      break;
    }
    case StructureKind::PairConcat: {
      const Var paired = permute ? gather_rows(comparative, pairing.opposing) : comparative;
      comp_first = mlp_forward(disc, concat_cols(paired, fake));
      gen_first = mlp_forward(disc, concat_cols(fake, paired));
      break;
    }
    case StructureKind::MultiComparativeMean: {
      const Var phi_comp = mlp_forward(disc, comparative);
      const Var phi_gen = mlp_forward(disc, fake);
      comp_first = phi_comp - broadcast_mean(phi_gen, batch);
      gen_first = phi_gen - broadcast_mean(phi_comp, batch);
      break;
    }
    default: throw IncompatibleObjective("gen_loss: unsupported structure " + to_string(s));
  }
  return mean_loss(family, LossSlot::G1, comp_first) + mean_loss(family, LossSlot::G2, gen_first);
}

void clip_weights(MlpParams& params, double c) {
  for (Layer& l : params.layers) {
    l.weight = l.weight.cwiseMax(-c).cwiseMin(c);
    l.bias = l.bias.cwiseMax(-c).cwiseMin(c);
  }
}

}  // namespace comgan
