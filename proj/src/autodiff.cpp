#include "comgan/autodiff.hpp"

#include <cmath>
#include <sstream>

namespace comgan::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::Input: return "input";
    case Op::Parameter: return "parameter";
    case Op::Constant: return "constant";
    case Op::ScaleShift: return "scale_shift";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::LeakyMask: return "leaky_mask";
    case Op::Relu: return "relu";
    case Op::ReluMask: return "relu_mask";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softplus: return "softplus";
    case Op::Log: return "log";
    case Op::Exp: return "exp";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Reciprocal: return "reciprocal";
    case Op::Detach: return "detach";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::AddRow: return "add_row";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SumRows: return "sum_rows";
    case Op::SumCols: return "sum_cols";
    case Op::Broadcast: return "broadcast";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::BroadcastCols: return "broadcast_cols";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::PadCols: return "pad_cols";
    case Op::GatherRows: return "gather_rows";
    case Op::ScatterRows: return "scatter_rows";
  }
  return "?";
}

namespace {

bool is_leaf(Op op) { return op == Op::Input || op == Op::Parameter || op == Op::Constant; }

// Ops whose output carries no gradient back to their argument.
bool blocks_gradient(Op op) {
  return op == Op::Detach || op == Op::LeakyMask || op == Op::ReluMask;
}

[[noreturn]] void shape_fail(const char* what, const Node& a, const Node& b) {
  std::ostringstream os;
  os << what << ": shape mismatch (" << a.rows << "x" << a.cols << ") vs (" << b.rows << "x" << b.cols
     << ")";
  throw ShapeError(os.str());
}

double softplus_scalar(double x) {
  // log(1 + e^x) without overflow
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var same_tape_check(Var a, Var b) {
  if (a.data() != b.data()) throw std::invalid_argument("operands live on different tapes");
  return a;
}

}  // namespace

Var make_var(detail::TapeData* data, int id) { return Var(data, id); }

const Matrix& Var::value() const {
  const Node& n = node();
  if (!n.bound) throw UnboundInputError("value of unbound node " + std::to_string(id_));
  return n.value;
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar() on non-scalar node");
  return v(0, 0);
}

// ---------------------------------------------------------------------------

namespace detail {

void evaluate(TapeData& data, int id) {
  Node& n = data.nodes[static_cast<std::size_t>(id)];
  if (is_leaf(n.op)) return;
  for (int a : n.args) {
    if (!data.nodes[static_cast<std::size_t>(a)].bound) {
      n.bound = false;
      return;
    }
  }
  auto arg = [&](std::size_t k) -> const Matrix& {
    return data.nodes[static_cast<std::size_t>(n.args[k])].value;
  };
  Matrix& out = n.value;
  switch (n.op) {
    case Op::ScaleShift: out = (n.p0 * arg(0).array() + n.p1).matrix(); break;
    case Op::LeakyRelu: {
      const double s = n.p0;
      out = arg(0).unaryExpr([s](double v) { return v > 0.0 ? v : s * v; });
      break;
    }
    case Op::LeakyMask: {
      const double s = n.p0;
      out = arg(0).unaryExpr([s](double v) { return v > 0.0 ? 1.0 : s; });
      break;
    }
    case Op::Relu: out = arg(0).cwiseMax(0.0); break;
    case Op::ReluMask: out = arg(0).unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }); break;
    case Op::Tanh: out = arg(0).array().tanh().matrix(); break;
    case Op::Sigmoid: out = arg(0).unaryExpr(&sigmoid_scalar); break;
    case Op::Softplus: out = arg(0).unaryExpr(&softplus_scalar); break;
    case Op::Log: out = (arg(0).array() + kLogFloor).log().matrix(); break;
    case Op::Exp: out = arg(0).array().exp().matrix(); break;
    case Op::Square: out = arg(0).array().square().matrix(); break;
    case Op::Sqrt: out = (arg(0).array() + kSqrtFloor).sqrt().matrix(); break;
    case Op::Reciprocal: out = arg(0).array().inverse().matrix(); break;
    case Op::Detach: out = arg(0); break;
    case Op::Add: out = arg(0) + arg(1); break;
    case Op::Sub: out = arg(0) - arg(1); break;
    case Op::Mul: out = arg(0).cwiseProduct(arg(1)); break;
    case Op::MatMul:
      out.resize(n.rows, n.cols);
      out.noalias() = arg(0) * arg(1);
      break;
    case Op::Transpose: out = arg(0).transpose(); break;
    case Op::AddRow: out = arg(0).rowwise() + arg(1).row(0); break;
    case Op::Sum: out = Matrix::Constant(1, 1, arg(0).sum()); break;
    case Op::Mean: out = Matrix::Constant(1, 1, arg(0).mean()); break;
    case Op::SumRows: out = arg(0).colwise().sum(); break;
    case Op::SumCols: out = arg(0).rowwise().sum(); break;
    case Op::Broadcast: out = Matrix::Constant(n.rows, n.cols, arg(0)(0, 0)); break;
    case Op::BroadcastRows: out = arg(0).replicate(n.rows, 1); break;
    case Op::BroadcastCols: out = arg(0).replicate(1, n.cols); break;
    case Op::ConcatCols: {
      out.resize(n.rows, n.cols);
      Index offset = 0;
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        const Matrix& part = arg(k);
        out.middleCols(offset, part.cols()) = part;
        offset += part.cols();
      }
      break;
    }
    case Op::SliceCols: out = arg(0).middleCols(static_cast<Index>(n.p0), n.cols); break;
    case Op::PadCols:
      out = Matrix::Zero(n.rows, n.cols);
      out.middleCols(static_cast<Index>(n.p0), arg(0).cols()) = arg(0);
      break;
    case Op::GatherRows:
      out.resize(n.rows, n.cols);
      for (Index i = 0; i < n.rows; ++i) out.row(i) = arg(0).row(n.index[static_cast<std::size_t>(i)]);
      break;
    case Op::ScatterRows:
      out = Matrix::Zero(n.rows, n.cols);
      for (Index i = 0; i < arg(0).rows(); ++i)
        out.row(n.index[static_cast<std::size_t>(i)]) += arg(0).row(i);
      break;
    case Op::Input:
    case Op::Parameter:
    case Op::Constant: break;
  }
  if (!out.allFinite()) {
    std::ostringstream os;
    os << "non-finite value produced by " << op_name(n.op) << " (node " << id << ")";
    throw NonFiniteError(os.str());
  }
  n.bound = true;
}

int push(TapeData& data, Op op, std::vector<int> args, Index rows, Index cols, double p0, double p1,
         std::vector<Index> index) {
  Node n;
  n.op = op;
  n.args = std::move(args);
  n.rows = rows;
  n.cols = cols;
  n.p0 = p0;
  n.p1 = p1;
  n.index = std::move(index);
  data.nodes.push_back(std::move(n));
  const int id = static_cast<int>(data.nodes.size()) - 1;
  evaluate(data, id);
  return id;
}

}  // namespace detail

// ---------------------------------------------------------------------------

Tape::Tape() : data_(std::make_unique<detail::TapeData>()) {}

static Var push_leaf(detail::TapeData& data, Op op, Matrix value) {
  if (!value.allFinite()) throw NonFiniteError(std::string("non-finite ") + op_name(op) + " value");
  Node n;
  n.op = op;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  n.bound = true;
  data.nodes.push_back(std::move(n));
  return make_var(&data, static_cast<int>(data.nodes.size()) - 1);
}

Var input_on(Var like, Matrix value) { return push_leaf(*like.data(), Op::Input, std::move(value)); }
Var constant_on(Var like, Matrix value) { return push_leaf(*like.data(), Op::Constant, std::move(value)); }

Var Tape::input(Index rows, Index cols) {
  if (rows <= 0 || cols <= 0) throw ShapeError("input with empty shape");
  Node n;
  n.op = Op::Input;
  n.rows = rows;
  n.cols = cols;
  data_->nodes.push_back(std::move(n));
  return Var(data_.get(), static_cast<int>(size()) - 1);
}

Var Tape::input(Matrix value) { return push_leaf(*data_, Op::Input, std::move(value)); }
Var Tape::parameter(Matrix value) { return push_leaf(*data_, Op::Parameter, std::move(value)); }
Var Tape::constant(Matrix value) { return push_leaf(*data_, Op::Constant, std::move(value)); }
Var Tape::scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }

void Tape::bind(Var input, Matrix value) {
  Node& n = data_->nodes[static_cast<std::size_t>(input.id())];
  if (n.op != Op::Input) throw std::invalid_argument("bind() target is not an input");
  if (value.rows() != n.rows || value.cols() != n.cols) throw ShapeError("bind(): shape mismatch");
  if (!value.allFinite()) throw NonFiniteError("bind(): non-finite input value");
  n.value = std::move(value);
  n.bound = true;
}

Var Tape::push(Op op, std::vector<int> args, Index rows, Index cols, double p0, double p1,
               std::vector<Index> index) {
  return Var(data_.get(), detail::push(*data_, op, std::move(args), rows, cols, p0, p1, std::move(index)));
}

Var Tape::var(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= size()) throw std::out_of_range("node id");
  return Var(data_.get(), id);
}

// ---------------------------------------------------------------------------

namespace {

Var push_on(Var like, Op op, std::vector<int> args, Index rows, Index cols, double p0 = 0.0,
            double p1 = 0.0, std::vector<Index> index = {}) {
  return make_var(like.data(),
                  detail::push(*like.data(), op, std::move(args), rows, cols, p0, p1, std::move(index)));
}

Var unary(Var x, Op op, double p0 = 0.0) { return push_on(x, op, {x.id()}, x.rows(), x.cols(), p0); }

Var elementwise(Var a, Var b, Op op) {
  same_tape_check(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail(op_name(op), a.node(), b.node());
  return push_on(a, op, {a.id(), b.id()}, a.rows(), a.cols());
}

}  // namespace

Var scale_shift(Var x, double scale, double shift) {
  return push_on(x, Op::ScaleShift, {x.id()}, x.rows(), x.cols(), scale, shift);
}
Var leaky_relu(Var x, double slope) { return unary(x, Op::LeakyRelu, slope); }
Var relu(Var x) { return unary(x, Op::Relu); }
Var tanh(Var x) { return unary(x, Op::Tanh); }
Var sigmoid(Var x) { return unary(x, Op::Sigmoid); }
Var softplus(Var x) { return unary(x, Op::Softplus); }
Var log(Var x) { return unary(x, Op::Log); }
Var exp(Var x) { return unary(x, Op::Exp); }
Var square(Var x) { return unary(x, Op::Square); }
Var sqrt(Var x) { return unary(x, Op::Sqrt); }
Var reciprocal(Var x) { return unary(x, Op::Reciprocal); }
Var detach(Var x) { return unary(x, Op::Detach); }

Var add(Var a, Var b) { return elementwise(a, b, Op::Add); }
Var sub(Var a, Var b) { return elementwise(a, b, Op::Sub); }
Var mul(Var a, Var b) { return elementwise(a, b, Op::Mul); }

Var matmul(Var a, Var b) {
  same_tape_check(a, b);
  if (a.cols() != b.rows()) shape_fail("matmul", a.node(), b.node());
  return push_on(a, Op::MatMul, {a.id(), b.id()}, a.rows(), b.cols());
}

Var transpose(Var x) { return push_on(x, Op::Transpose, {x.id()}, x.cols(), x.rows()); }

Var add_row(Var x, Var row) {
  same_tape_check(x, row);
  if (row.rows() != 1 || row.cols() != x.cols()) shape_fail("add_row", x.node(), row.node());
  return push_on(x, Op::AddRow, {x.id(), row.id()}, x.rows(), x.cols());
}

Var sum(Var x) { return push_on(x, Op::Sum, {x.id()}, 1, 1); }
Var mean(Var x) { return push_on(x, Op::Mean, {x.id()}, 1, 1); }
Var sum_rows(Var x) { return push_on(x, Op::SumRows, {x.id()}, 1, x.cols()); }
Var sum_cols(Var x) { return push_on(x, Op::SumCols, {x.id()}, x.rows(), 1); }

Var broadcast(Var scalar, Index rows, Index cols) {
  if (scalar.rows() != 1 || scalar.cols() != 1) throw ShapeError("broadcast: argument is not 1x1");
  return push_on(scalar, Op::Broadcast, {scalar.id()}, rows, cols);
}

Var broadcast_rows(Var row, Index rows) {
  if (row.rows() != 1) throw ShapeError("broadcast_rows: argument is not a row");
  return push_on(row, Op::BroadcastRows, {row.id()}, rows, row.cols());
}

Var broadcast_cols(Var col, Index cols) {
  if (col.cols() != 1) throw ShapeError("broadcast_cols: argument is not a column");
  return push_on(col, Op::BroadcastCols, {col.id()}, col.rows(), cols);
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  std::vector<int> args;
  Index cols = 0;
  for (const Var& p : parts) {
    same_tape_check(parts.front(), p);
    if (p.rows() != parts.front().rows()) shape_fail("concat_cols", parts.front().node(), p.node());
    args.push_back(p.id());
    cols += p.cols();
  }
  return push_on(parts.front(), Op::ConcatCols, std::move(args), parts.front().rows(), cols);
}

Var concat_cols(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat_cols(parts);
}

Var slice_cols(Var x, Index start, Index width) {
  if (start < 0 || width <= 0 || start + width > x.cols()) throw ShapeError("slice_cols: out of range");
  return push_on(x, Op::SliceCols, {x.id()}, x.rows(), width, static_cast<double>(start));
}

Var pad_cols(Var x, Index start, Index total_cols) {
  if (start < 0 || start + x.cols() > total_cols) throw ShapeError("pad_cols: out of range");
  return push_on(x, Op::PadCols, {x.id()}, x.rows(), total_cols, static_cast<double>(start));
}

Var gather_rows(Var x, std::vector<Index> index) {
  for (Index i : index)
    if (i < 0 || i >= x.rows()) throw ShapeError("gather_rows: index out of range");
  const auto rows = static_cast<Index>(index.size());
  return push_on(x, Op::GatherRows, {x.id()}, rows, x.cols(), 0.0, 0.0, std::move(index));
}

Var scatter_rows(Var x, std::vector<Index> index, Index out_rows) {
  if (static_cast<Index>(index.size()) != x.rows()) throw ShapeError("scatter_rows: index length");
  for (Index i : index)
    if (i < 0 || i >= out_rows) throw ShapeError("scatter_rows: index out of range");
  return push_on(x, Op::ScatterRows, {x.id()}, out_rows, x.cols(), static_cast<double>(out_rows), 0.0,
                 std::move(index));
}

Var linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

// ---------------------------------------------------------------------------

Matrix forward(Tape& tape, std::span<const std::pair<Var, Matrix>> bindings) {
  for (const auto& [v, m] : bindings) tape.bind(v, m);
  detail::TapeData& data = *tape.data();
  for (std::size_t i = 0; i < data.nodes.size(); ++i) {
    const Node& n = data.nodes[i];
    if (n.op == Op::Input && !n.bound) throw UnboundInputError("input node " + std::to_string(i) + " unbound");
    detail::evaluate(data, static_cast<int>(i));
  }
  if (data.nodes.empty()) throw std::invalid_argument("forward on empty tape");
  return data.nodes.back().value;
}

Gradients::Gradients(const detail::TapeData* data) : data_(data), grads_(data->nodes.size()) {}

bool Gradients::has(Var v) const {
  return v.data() == data_ && static_cast<std::size_t>(v.id()) < grads_.size() &&
         grads_[static_cast<std::size_t>(v.id())].size() > 0;
}

Matrix Gradients::operator[](Var v) const {
  if (has(v)) return grads_[static_cast<std::size_t>(v.id())];
  return Matrix::Zero(v.rows(), v.cols());
}

namespace {

void accumulate(Matrix& slot, const Matrix& g) {
  if (slot.size() == 0)
    slot = g;
  else
    slot += g;
}

template <typename Expr>
void accumulate_expr(Matrix& slot, const Expr& g) {
  if (slot.size() == 0)
    slot = g;
  else
    slot += g;
}

void check_scalar_output(Var output) {
  if (!output.valid()) throw GradientError("invalid output handle");
  if (output.rows() != 1 || output.cols() != 1) throw GradientError("gradient of non-scalar output");
  if (!output.node().bound) throw UnboundInputError("gradient of an output with unbound inputs");
}

}  // namespace

Gradients backward(Var output) {
  check_scalar_output(output);
  const detail::TapeData& data = *output.data();
  Gradients result(&data);
  result.raw(output.id()) = Matrix::Ones(1, 1);

  for (int id = output.id(); id >= 0; --id) {
    const Node& n = data.nodes[static_cast<std::size_t>(id)];
    Matrix& gslot = result.raw(id);
    if (gslot.size() == 0 || is_leaf(n.op) || blocks_gradient(n.op)) continue;
    const Matrix g = gslot;
    auto in = [&](std::size_t k) -> const Node& { return data.nodes[static_cast<std::size_t>(n.args[k])]; };
    auto slot = [&](std::size_t k) -> Matrix& { return result.raw(n.args[k]); };
    const Matrix& y = n.value;

    switch (n.op) {
      case Op::ScaleShift: accumulate_expr(slot(0), n.p0 * g); break;
      case Op::LeakyRelu: {
        const double s = n.p0;
        accumulate_expr(slot(0), g.cwiseProduct(in(0).value.unaryExpr(
                                     [s](double v) { return v > 0.0 ? 1.0 : s; })));
        break;
      }
      case Op::Relu:
        accumulate_expr(slot(0),
                        g.cwiseProduct(in(0).value.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; })));
        break;
      case Op::Tanh: accumulate_expr(slot(0), (g.array() * (1.0 - y.array().square())).matrix()); break;
      case Op::Sigmoid: accumulate_expr(slot(0), (g.array() * y.array() * (1.0 - y.array())).matrix()); break;
      case Op::Softplus:
        accumulate_expr(slot(0), g.cwiseProduct(in(0).value.unaryExpr(&sigmoid_scalar)));
        break;
      case Op::Log: accumulate_expr(slot(0), (g.array() / (in(0).value.array() + kLogFloor)).matrix()); break;
      case Op::Exp: accumulate_expr(slot(0), g.cwiseProduct(y)); break;
      case Op::Square: accumulate_expr(slot(0), (2.0 * g.array() * in(0).value.array()).matrix()); break;
      case Op::Sqrt: accumulate_expr(slot(0), (0.5 * g.array() / y.array()).matrix()); break;
      case Op::Reciprocal: accumulate_expr(slot(0), (-g.array() * y.array().square()).matrix()); break;
      case Op::Add:
        accumulate(slot(0), g);
        accumulate(slot(1), g);
        break;
      case Op::Sub:
        accumulate(slot(0), g);
        accumulate_expr(slot(1), -g);
        break;
      case Op::Mul:
        accumulate_expr(slot(0), g.cwiseProduct(in(1).value));
        accumulate_expr(slot(1), g.cwiseProduct(in(0).value));
        break;
      case Op::MatMul:
        accumulate_expr(slot(0), g * in(1).value.transpose());
        accumulate_expr(slot(1), in(0).value.transpose() * g);
        break;
      case Op::Transpose: accumulate_expr(slot(0), g.transpose()); break;
      case Op::AddRow:
        accumulate(slot(0), g);
        accumulate_expr(slot(1), g.colwise().sum());
        break;
      case Op::Sum: accumulate_expr(slot(0), Matrix::Constant(in(0).rows, in(0).cols, g(0, 0))); break;
      case Op::Mean:
        accumulate_expr(slot(0), Matrix::Constant(in(0).rows, in(0).cols,
                                                  g(0, 0) / static_cast<double>(in(0).rows * in(0).cols)));
        break;
      case Op::SumRows: accumulate_expr(slot(0), g.replicate(in(0).rows, 1)); break;
      case Op::SumCols: accumulate_expr(slot(0), g.replicate(1, in(0).cols)); break;
      case Op::Broadcast: accumulate_expr(slot(0), Matrix::Constant(1, 1, g.sum())); break;
      case Op::BroadcastRows: accumulate_expr(slot(0), g.colwise().sum()); break;
      case Op::BroadcastCols: accumulate_expr(slot(0), g.rowwise().sum()); break;
      case Op::ConcatCols: {
        Index offset = 0;
        for (std::size_t k = 0; k < n.args.size(); ++k) {
          const Index w = in(k).cols;
          accumulate_expr(slot(k), g.middleCols(offset, w));
          offset += w;
        }
        break;
      }
      case Op::SliceCols: {
        Matrix& s = slot(0);
        if (s.size() == 0) s = Matrix::Zero(in(0).rows, in(0).cols);
        s.middleCols(static_cast<Index>(n.p0), n.cols) += g;
        break;
      }
      case Op::PadCols: accumulate_expr(slot(0), g.middleCols(static_cast<Index>(n.p0), in(0).cols)); break;
      case Op::GatherRows: {
        Matrix& s = slot(0);
        if (s.size() == 0) s = Matrix::Zero(in(0).rows, in(0).cols);
        for (Index i = 0; i < n.rows; ++i) s.row(n.index[static_cast<std::size_t>(i)]) += g.row(i);
        break;
      }
      case Op::ScatterRows: {
        Matrix gi(in(0).rows, in(0).cols);
        for (Index i = 0; i < in(0).rows; ++i) gi.row(i) = g.row(n.index[static_cast<std::size_t>(i)]);
        accumulate(slot(0), gi);
        break;
      }
      case Op::Input:
      case Op::Parameter:
      case Op::Constant:
      case Op::LeakyMask:
      case Op::ReluMask:
      case Op::Detach: break;
    }
  }
  return result;
}

std::vector<Var> gradient(Var output, std::span<const Var> wrt) {
  check_scalar_output(output);
  detail::TapeData& data = *output.data();
  for (const Var& w : wrt)
    if (w.data() != &data) throw GradientError("gradient(): wrt node on another tape");

  const int top = output.id();
  std::vector<Var> grad(static_cast<std::size_t>(top) + 1);
  auto acc = [&](int id, Var g) {
    Var& slot = grad[static_cast<std::size_t>(id)];
    slot = slot.valid() ? add(slot, g) : g;
  };
  // Nodes that can reach `output`; the sweep skips the rest.
  std::vector<char> live(static_cast<std::size_t>(top) + 1, 0);
  live[static_cast<std::size_t>(top)] = 1;
  for (int id = top; id >= 0; --id) {
    if (!live[static_cast<std::size_t>(id)]) continue;
    const Node& n = data.nodes[static_cast<std::size_t>(id)];
    if (blocks_gradient(n.op)) continue;
    for (int a : n.args) live[static_cast<std::size_t>(a)] = 1;
  }

  grad[static_cast<std::size_t>(top)] = push_leaf(data, Op::Constant, Matrix::Ones(1, 1));

  for (int id = top; id >= 0; --id) {
    const Var g = grad[static_cast<std::size_t>(id)];
    if (!g.valid() || !live[static_cast<std::size_t>(id)]) continue;
    // Copy: pushing new nodes may reallocate the node vector.
    const Node n = data.nodes[static_cast<std::size_t>(id)];
    if (is_leaf(n.op) || blocks_gradient(n.op)) continue;
    auto in = [&](std::size_t k) { return make_var(&data, n.args[k]); };
    const Var y = make_var(&data, id);

    switch (n.op) {
      case Op::ScaleShift: acc(n.args[0], scale_shift(g, n.p0, 0.0)); break;
      case Op::LeakyRelu: acc(n.args[0], mul(g, push_on(y, Op::LeakyMask, {n.args[0]}, n.rows, n.cols, n.p0))); break;
      case Op::Relu: acc(n.args[0], mul(g, push_on(y, Op::ReluMask, {n.args[0]}, n.rows, n.cols))); break;
      case Op::Tanh: acc(n.args[0], mul(g, scale_shift(square(y), -1.0, 1.0))); break;
      case Op::Sigmoid: acc(n.args[0], mul(g, mul(y, scale_shift(y, -1.0, 1.0)))); break;
      case Op::Softplus: acc(n.args[0], mul(g, sigmoid(in(0)))); break;
      case Op::Log: acc(n.args[0], mul(g, reciprocal(scale_shift(in(0), 1.0, kLogFloor)))); break;
      case Op::Exp: acc(n.args[0], mul(g, y)); break;
      case Op::Square: acc(n.args[0], mul(g, scale_shift(in(0), 2.0, 0.0))); break;
      case Op::Sqrt: acc(n.args[0], mul(g, scale_shift(reciprocal(y), 0.5, 0.0))); break;
      case Op::Reciprocal: acc(n.args[0], mul(g, scale_shift(square(y), -1.0, 0.0))); break;
      case Op::Add:
        acc(n.args[0], g);
        acc(n.args[1], g);
        break;
      case Op::Sub:
        acc(n.args[0], g);
        acc(n.args[1], scale_shift(g, -1.0, 0.0));
        break;
      case Op::Mul:
        acc(n.args[0], mul(g, in(1)));
        acc(n.args[1], mul(g, in(0)));
        break;
      case Op::MatMul:
        acc(n.args[0], matmul(g, transpose(in(1))));
        acc(n.args[1], matmul(transpose(in(0)), g));
        break;
      case Op::Transpose: acc(n.args[0], transpose(g)); break;
      case Op::AddRow:
        acc(n.args[0], g);
        acc(n.args[1], sum_rows(g));
        break;
      case Op::Sum: acc(n.args[0], broadcast(g, in(0).rows(), in(0).cols())); break;
      case Op::Mean: {
        const double count = static_cast<double>(in(0).rows() * in(0).cols());
        acc(n.args[0], broadcast(scale_shift(g, 1.0 / count, 0.0), in(0).rows(), in(0).cols()));
        break;
      }
      case Op::SumRows: acc(n.args[0], broadcast_rows(g, in(0).rows())); break;
      case Op::SumCols: acc(n.args[0], broadcast_cols(g, in(0).cols())); break;
      case Op::Broadcast: acc(n.args[0], sum(g)); break;
      case Op::BroadcastRows: acc(n.args[0], sum_rows(g)); break;
      case Op::BroadcastCols: acc(n.args[0], sum_cols(g)); break;
      case Op::ConcatCols: {
        Index offset = 0;
        for (std::size_t k = 0; k < n.args.size(); ++k) {
          const Index w = in(k).cols();
          acc(n.args[k], slice_cols(g, offset, w));
          offset += w;
        }
        break;
      }
      case Op::SliceCols: acc(n.args[0], pad_cols(g, static_cast<Index>(n.p0), in(0).cols())); break;
      case Op::PadCols: acc(n.args[0], slice_cols(g, static_cast<Index>(n.p0), in(0).cols())); break;
      case Op::GatherRows: acc(n.args[0], scatter_rows(g, n.index, in(0).rows())); break;
      case Op::ScatterRows: acc(n.args[0], gather_rows(g, n.index)); break;
      default: throw GradientError(std::string("no symbolic rule for ") + op_name(n.op));
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    const Var g = w.id() <= top ? grad[static_cast<std::size_t>(w.id())] : Var{};
    out.push_back(g.valid() ? g : push_leaf(data, Op::Constant, Matrix::Zero(w.rows(), w.cols())));
  }
  return out;
}

Var input_gradient(Var output, Var input) {
  const Var wrt[] = {input};
  return gradient(output, wrt).front();
}

Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f, const Matrix& point, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_gradient: step must be positive");
  Matrix grad(point.rows(), point.cols());
  Matrix probe = point;
  for (Index i = 0; i < point.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + step;
    const double up = f(probe);
    probe.data()[i] = orig - step;
    const double down = f(probe);
    probe.data()[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NonFiniteError("finite_diff_gradient: non-finite function value at probe point");
    grad.data()[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace comgan::ad
