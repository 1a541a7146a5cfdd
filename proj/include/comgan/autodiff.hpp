#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape records primitive operations eagerly: every node's value is computed
// when it is pushed (provided its inputs are bound). Two gradient routes are
// provided:
//   * backward()  - numeric reverse sweep, returns plain matrices.
//   * gradient()  - symbolic reverse sweep that appends the gradient
//                   computation to the same tape, so the result can itself be
//                   differentiated (double backprop, gradient penalties).

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace comgan::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

inline constexpr double kLogFloor = 1e-12;
inline constexpr double kSqrtFloor = 1e-12;
inline constexpr double kLeakySlope = 0.2;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnboundInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GradientError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Op : std::uint8_t {
  // leaves
  Input,
  Parameter,
  Constant,
  // elementwise unary
  ScaleShift,   // a*x + b
  LeakyRelu,    // slope in p0
  LeakyMask,    // d/dx LeakyRelu; carries no gradient
  Relu,
  ReluMask,     // d/dx Relu; carries no gradient
  Tanh,
  Sigmoid,
  Softplus,     // log(1 + e^x)
  Log,          // log(x + kLogFloor)
  Exp,
  Square,
  Sqrt,         // sqrt(x + kSqrtFloor)
  Reciprocal,
  Detach,
  // elementwise binary, equal shapes
  Add,
  Sub,
  Mul,
  // linear algebra
  MatMul,
  Transpose,
  AddRow,       // (r x c) + broadcast (1 x c)
  // reductions
  Sum,          // -> 1 x 1
  Mean,         // -> 1 x 1
  SumRows,      // (r x c) -> (1 x c)
  SumCols,      // (r x c) -> (r x 1)
  // broadcasts
  Broadcast,     // (1 x 1) -> (r x c)
  BroadcastRows, // (1 x c) -> (r x c)
  BroadcastCols, // (r x 1) -> (r x c)
  // structural
  ConcatCols,
  SliceCols,     // columns [p0, p0 + cols)
  PadCols,       // inverse of SliceCols: embed into zero (r x total) at p0
  GatherRows,    // out.row(i) = x.row(index[i])
  ScatterRows,   // out.row(index[i]) += x.row(i), out has p0 rows
};

const char* op_name(Op op);

struct Node {
  Op op = Op::Constant;
  std::vector<int> args;
  Index rows = 0;
  Index cols = 0;
  double p0 = 0.0;
  double p1 = 0.0;
  std::vector<Index> index;
  Matrix value;
  bool bound = false;
};

namespace detail {
struct TapeData {
  std::vector<Node> nodes;
};
int push(TapeData& data, Op op, std::vector<int> args, Index rows, Index cols, double p0 = 0.0,
         double p1 = 0.0, std::vector<Index> index = {});
void evaluate(TapeData& data, int id);
}  // namespace detail

class Tape;
class Var;
Var make_var(detail::TapeData* data, int id);

// Handle to a node. Refers to the tape's storage, which stays put when the
// owning Tape object is moved.
class Var {
 public:
  Var() = default;

  int id() const { return id_; }
  bool valid() const { return data_ != nullptr && id_ >= 0; }
  Index rows() const { return node().rows; }
  Index cols() const { return node().cols; }
  const Matrix& value() const;
  // Value of a 1x1 node.
  double scalar() const;

  const Node& node() const { return data_->nodes[static_cast<std::size_t>(id_)]; }
  detail::TapeData* data() const { return data_; }

  friend bool operator==(const Var& a, const Var& b) { return a.data_ == b.data_ && a.id_ == b.id_; }

 private:
  friend class Tape;
  friend Var make_var(detail::TapeData* data, int id);
  Var(detail::TapeData* data, int id) : data_(data), id_(id) {}

  detail::TapeData* data_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape();
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Unbound placeholder; bind() or forward() supplies its value later.
  Var input(Index rows, Index cols);
  Var input(Matrix value);
  Var parameter(Matrix value);
  Var constant(Matrix value);
  Var scalar_constant(double v);

  void bind(Var input, Matrix value);

  // Low-level node construction; computes the value when all args are bound.
  Var push(Op op, std::vector<int> args, Index rows, Index cols, double p0 = 0.0, double p1 = 0.0,
           std::vector<Index> index = {});

  std::size_t size() const { return data_->nodes.size(); }
  const Node& node(int id) const { return data_->nodes[static_cast<std::size_t>(id)]; }
  Var var(int id) const;
  Var last() const { return var(static_cast<int>(size()) - 1); }
  detail::TapeData* data() const { return data_.get(); }

 private:
  std::unique_ptr<detail::TapeData> data_;
};

// New leaves on the tape that owns `like`.
Var input_on(Var like, Matrix value);
Var constant_on(Var like, Matrix value);

// ---------------------------------------------------------------------------
// Primitive builders. All arguments must live on the same tape.

Var scale_shift(Var x, double scale, double shift);
Var leaky_relu(Var x, double slope = kLeakySlope);
Var relu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var softplus(Var x);
Var log(Var x);
Var exp(Var x);
Var square(Var x);
Var sqrt(Var x);
Var reciprocal(Var x);
Var detach(Var x);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var matmul(Var a, Var b);
Var transpose(Var x);
Var add_row(Var x, Var row);

Var sum(Var x);
Var mean(Var x);
Var sum_rows(Var x);
Var sum_cols(Var x);

Var broadcast(Var scalar, Index rows, Index cols);
Var broadcast_rows(Var row, Index rows);
Var broadcast_cols(Var col, Index cols);

Var concat_cols(std::span<const Var> parts);
Var concat_cols(Var a, Var b);
Var slice_cols(Var x, Index start, Index width);
Var pad_cols(Var x, Index start, Index total_cols);
Var gather_rows(Var x, std::vector<Index> index);
Var scatter_rows(Var x, std::vector<Index> index, Index out_rows);

// x W + b with b broadcast over rows.
Var linear(Var x, Var weight, Var bias);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return scale_shift(a, -1.0, 0.0); }
inline Var operator+(Var a, double s) { return scale_shift(a, 1.0, s); }
inline Var operator+(double s, Var a) { return scale_shift(a, 1.0, s); }
inline Var operator-(Var a, double s) { return scale_shift(a, 1.0, -s); }
inline Var operator-(double s, Var a) { return scale_shift(a, -1.0, s); }
inline Var operator*(Var a, double s) { return scale_shift(a, s, 0.0); }
inline Var operator*(double s, Var a) { return scale_shift(a, s, 0.0); }

// ---------------------------------------------------------------------------
// Evaluation and differentiation.

// Binds the given inputs, re-evaluates every node in tape order and returns
// the value of the final node.
Matrix forward(Tape& tape, std::span<const std::pair<Var, Matrix>> bindings);

// Node-index -> gradient map produced by backward().
class Gradients {
 public:
  explicit Gradients(const detail::TapeData* data);
  bool has(Var v) const;
  // Zero matrix of the node's shape when the node is off the gradient path.
  Matrix operator[](Var v) const;
  Matrix& raw(int id) { return grads_[static_cast<std::size_t>(id)]; }

 private:
  const detail::TapeData* data_;
  std::vector<Matrix> grads_;
};

// Numeric reverse sweep from a 1x1 output.
Gradients backward(Var output);

// Symbolic reverse sweep: appends nodes computing d output / d wrt[i] and
// returns them. The returned Vars are differentiable.
std::vector<Var> gradient(Var output, std::span<const Var> wrt);

// Gradient of a scalar output with respect to one input leaf, as a node.
Var input_gradient(Var output, Var input);

// Central differences, coordinate by coordinate.
Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f, const Matrix& point,
                            double step);

}  // namespace comgan::ad
