#include "comgan/nets.hpp"

#include <cmath>

namespace comgan {

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

MlpParams mlp_init(std::span<const Index> layer_sizes, std::uint64_t seed, OutputActivation output) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("mlp_init: need at least two layer sizes");
  for (Index s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("mlp_init: zero-width layer");
  std::mt19937_64 rng(seed);
  MlpParams p;
  p.output = output;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const Index fan_in = layer_sizes[l];
    const Index fan_out = layer_sizes[l + 1];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Layer layer{Matrix(fan_in, fan_out), Matrix::Zero(1, fan_out)};
    for (Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Matrix mlp_eval(const MlpParams& params, const Matrix& x) {
  Matrix h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    Matrix next = h * layer.weight;
    next.rowwise() += layer.bias.row(0);
    if (l + 1 < params.layers.size())
      next = next.unaryExpr([](double v) { return v > 0.0 ? v : ad::kLeakySlope * v; });
    h = std::move(next);
  }
  if (params.output == OutputActivation::Tanh) h = h.array().tanh().matrix();
  return h;
}

std::vector<Var> BoundMlp::parameters() const {
  std::vector<Var> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l]);
    out.push_back(biases[l]);
  }
  return out;
}

namespace {

template <typename MakeLeaf>
BoundMlp bind_with(const MlpParams& params, MakeLeaf make) {
  BoundMlp net;
  net.output = params.output;
  for (const Layer& l : params.layers) {
    net.weights.push_back(make(l.weight));
    net.biases.push_back(make(l.bias));
  }
  return net;
}

}  // namespace

BoundMlp bind_parameters(ad::Tape& tape, const MlpParams& params) {
  return bind_with(params, [&](const Matrix& m) { return tape.parameter(m); });
}

BoundMlp bind_constants(ad::Tape& tape, const MlpParams& params) {
  return bind_with(params, [&](const Matrix& m) { return tape.constant(m); });
}

Var mlp_forward(const BoundMlp& net, Var x) {
  if (x.cols() != net.weights.front().rows())
    throw ad::ShapeError("mlp_forward: input width " + std::to_string(x.cols()) + " != " +
                         std::to_string(net.weights.front().rows()));
  Var h = x;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    h = ad::linear(h, net.weights[l], net.biases[l]);
    if (l + 1 < net.weights.size()) h = ad::leaky_relu(h);
  }
  if (net.output == OutputActivation::Tanh) h = ad::tanh(h);
  return h;
}

// ---------------------------------------------------------------------------

int DiscStructure::slots() const {
  switch (kind) {
    case StructureKind::Single: return 1;
    case StructureKind::PackConcat: return pack;
    default: return 2;
  }
}

Index DiscStructure::network_input_width(Index sample_width) const {
  switch (kind) {
    case StructureKind::PairConcat: return 2 * sample_width;
    case StructureKind::PackConcat: return pack * sample_width;
    default: return sample_width;
  }
}

bool DiscStructure::shares_phi() const {
  return kind == StructureKind::Single || kind == StructureKind::PairSubtract || kind == StructureKind::PairSum ||
         kind == StructureKind::MultiComparativeMean;
}

std::string to_string(const DiscStructure& s) {
  switch (s.kind) {
    case StructureKind::Single: return "single";
    case StructureKind::PairConcat: return "pair_concat";
    case StructureKind::PairSubtract: return "pair_subtract";
    case StructureKind::PairSum: return "pair_sum";
    case StructureKind::PackConcat: return "pack_concat(" + std::to_string(s.pack) + ")";
    case StructureKind::MultiComparativeMean: return "multi_comparative_mean";
  }
  return "?";
}

Var disc_logit(const DiscStructure& s, const BoundMlp& net, Var x) {
  if (s.kind != StructureKind::Single) throw StructureError(to_string(s) + " needs more than one input");
  return mlp_forward(net, x);
}

Var disc_logit(const DiscStructure& s, const BoundMlp& net, Var x, Var y) {
  switch (s.kind) {
    case StructureKind::Single: throw StructureError("single structure takes one input");
    case StructureKind::PairSubtract:
    case StructureKind::PairSum: {
      if (x.rows() != y.rows()) throw ad::ShapeError("pair inputs differ in batch size");
      const Var px = mlp_forward(net, x);
      const Var py = mlp_forward(net, y);
      return s.kind == StructureKind::PairSubtract ? px - py : px + py;
    }
    case StructureKind::PairConcat: return mlp_forward(net, ad::concat_cols(x, y));
    case StructureKind::PackConcat: {
      const Var slots[] = {x, y};
      return disc_logit(s, net, slots);
    }
    case StructureKind::MultiComparativeMean: {
      const Var px = mlp_forward(net, x);
      const Var comparative_mean = ad::mean(mlp_forward(net, y));
      return px - ad::broadcast(comparative_mean, px.rows(), 1);
    }
  }
  throw StructureError("unknown structure");
}

Var disc_logit(const DiscStructure& s, const BoundMlp& net, std::span<const Var> slots) {
  if (s.kind == StructureKind::PackConcat) {
    if (static_cast<int>(slots.size()) != s.pack)
      throw StructureError("pack_concat(" + std::to_string(s.pack) + ") given " + std::to_string(slots.size()) +
                           " inputs");
    return mlp_forward(net, ad::concat_cols(slots));
  }
  if (s.kind == StructureKind::PairSum) {
    if (slots.empty()) throw StructureError("pair_sum given no inputs");
    Var total = mlp_forward(net, slots.front());
    for (std::size_t k = 1; k < slots.size(); ++k) total = total + mlp_forward(net, slots[k]);
    return total;
  }
  if (slots.size() == 1) return disc_logit(s, net, slots.front());
  if (slots.size() == 2) return disc_logit(s, net, slots[0], slots[1]);
  throw StructureError(to_string(s) + " takes at most two inputs");
}

Matrix GenPrior::sample(Index n, std::mt19937_64& rng) const {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix z(n, dimension);
  for (Index i = 0; i < z.size(); ++i) z.data()[i] = dist(rng);
  return z;
}

}  // namespace comgan
