#pragma once

// Define-by-run reverse-mode automatic differentiation.
//
// A Tape records primitive applications in topological order. Values are
// real scalars or small dense arrays (vectors and row-major matrices) stored
// in one arena per tape, so recording does not allocate per node once the
// arena has grown to its working size.
//
// Two reverse sweeps are provided:
//   gradient()        accumulates numeric adjoints; the tape is not touched.
//   gradient_graph()  records the adjoint computation itself on the tape so
//                     that the result can be differentiated again. Forces
//                     derived from potentials use this so that a whole
//                     simulation stays differentiable with respect to the
//                     potential parameters.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace socialforce::ad {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Smoothing width of abs_smooth(x) = sqrt(x^2 + eps^2).
inline constexpr double kAbsSmoothEps = 1e-6;

enum class Op : std::uint8_t {
  Leaf,
  Identity,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Scale,
  Shift,
  Exp,
  Log,
  Sqrt,
  Sin,
  Cos,
  AbsSmooth,
  Softplus,
  Sigmoid,
  MatVec,
  MatTVec,
  Outer,
  Concat,
  Slice,
  Embed,
  Sum,
};

const char* op_name(Op op) noexcept;

class Tape;

/// Handle to one node of a tape. Cheap to copy; only valid while the tape
/// (and the recorded prefix containing the node) is alive.
class Var {
 public:
  Var() = default;

  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }
  [[nodiscard]] std::uint32_t index() const noexcept { return index_; }

  /// Value of a scalar node. Throws ShapeError for arrays.
  [[nodiscard]] double value() const;
  [[nodiscard]] std::span<const double> values() const;
  [[nodiscard]] std::size_t rows() const;
  [[nodiscard]] std::size_t cols() const;
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] bool is_scalar() const { return size() == 1; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
};

/// Result of a numeric reverse sweep: one entry per requested variable, in
/// request order, each with the shape of that variable. Variables the
/// output does not depend on get zeros.
class GradientVector {
 public:
  GradientVector() = default;

  [[nodiscard]] std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  [[nodiscard]] std::span<const double> operator[](std::size_t i) const;
  /// Entry i, which must be a scalar variable.
  [[nodiscard]] double scalar(std::size_t i) const;
  [[nodiscard]] std::span<const double> flat() const noexcept { return data_; }
  [[nodiscard]] std::vector<double>& mutable_flat() noexcept { return data_; }

 private:
  friend class Tape;
  std::vector<double> data_;
  std::vector<std::size_t> offsets_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  /// Leaves that take part in differentiation.
  Var variable(double value);
  Var variable(std::span<const double> values);
  Var variable(std::size_t rows, std::size_t cols, std::span<const double> values);

  /// Leaves that never receive adjoints.
  Var constant(double value);
  Var constant(std::span<const double> values);
  Var constant(std::size_t rows, std::size_t cols, std::span<const double> values);

  /// Appends one primitive application. `param` carries the constant of
  /// Scale/Shift; Slice/Embed go through their dedicated functions.
  Var record(Op op, std::span<const Var> inputs, double param = 0.0);
  Var record_slice(Var x, std::size_t offset, std::size_t length);
  Var record_embed(Var x, std::size_t offset, std::size_t total);

  /// Gradient of a scalar output with respect to `wrt`, by one reverse sweep
  /// over the nodes between the earliest requested variable and the output.
  [[nodiscard]] GradientVector gradient(Var output, std::span<const Var> wrt) const;

  /// Same sweep, with every adjoint recorded as new tape nodes. Returns one
  /// Var per entry of `wrt`. Dependence-free entries come back as zero
  /// constants.
  std::vector<Var> gradient_graph(Var output, std::span<const Var> wrt);

  struct Mark {
    std::size_t nodes = 0;
    std::size_t values = 0;
    std::size_t args = 0;
  };
  [[nodiscard]] Mark mark() const noexcept { return {nodes_.size(), values_.size(), args_.size()}; }
  /// Drops every node recorded after `m`. Vars pointing past it dangle.
  void rewind(const Mark& m);
  void clear();

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::size_t value_storage() const noexcept { return values_.size(); }
  /// Nodes processed by the most recent reverse sweep.
  [[nodiscard]] std::size_t last_visit_count() const noexcept { return last_visits_; }

  // Node inspection, used by Var.
  [[nodiscard]] Op op(std::uint32_t i) const { return nodes_.at(i).op; }
  [[nodiscard]] std::size_t rows(std::uint32_t i) const { return nodes_.at(i).rows; }
  [[nodiscard]] std::size_t cols(std::uint32_t i) const { return nodes_.at(i).cols; }
  [[nodiscard]] std::span<const double> values(std::uint32_t i) const;
  [[nodiscard]] bool needs_grad(std::uint32_t i) const { return nodes_.at(i).needs_grad; }

 private:
  struct Node {
    Op op = Op::Leaf;
    bool needs_grad = false;
    std::uint32_t rows = 1;
    std::uint32_t cols = 1;
    std::size_t value = 0;   // offset into values_
    std::size_t aux = 0;     // offset into values_ of cached local partials
    std::uint32_t arg0 = 0;  // first input, or offset into args_ for Concat
    std::uint32_t arg1 = 0;  // second input, or input count for Concat
    std::uint32_t ipar = 0;  // Slice/Embed offset
    double param = 0.0;      // Scale/Shift constant
    [[nodiscard]] std::size_t size() const { return std::size_t{rows} * cols; }
  };

  Var make_leaf(std::size_t rows, std::size_t cols, std::span<const double> values, bool needs_grad);
  std::uint32_t push_node(Node node);
  std::size_t allocate(std::size_t n);
  void check_owned(Var v, const char* what) const;
  [[nodiscard]] const double* ptr(std::size_t offset) const { return values_.data() + offset; }
  double* ptr(std::size_t offset) { return values_.data() + offset; }

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<std::uint32_t> args_;

  // Reverse-sweep scratch, reused across calls.
  mutable std::vector<double> adjoint_;
  mutable std::vector<std::size_t> adjoint_offset_;
  mutable std::vector<char> touched_;
  mutable std::size_t last_visits_ = 0;
};

// ---------------------------------------------------------------------------
// Primitive wrappers. All inputs must live on the same tape.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
Var shift(Var a, double c);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var sin(Var a);
Var cos(Var a);
Var abs_smooth(Var a);
/// ln(1 + e^x), overflow-safe.
Var softplus(Var a);
Var sigmoid(Var a);
/// y = W x for W rows x cols, x of length cols.
Var matvec(Var w, Var x);
/// y = W^T u for W rows x cols, u of length rows.
Var matvec_transposed(Var w, Var u);
Var outer(Var a, Var b);
Var concat(std::span<const Var> parts);
Var slice(Var x, std::size_t offset, std::size_t length);
Var embed(Var x, std::size_t offset, std::size_t total);
Var sum(Var a);
/// Watch point: an identity node that always takes part in differentiation,
/// even if its input is a constant.
Var watch(Var a);

inline Var square(Var a) { return mul(a, a); }
/// (x + abs_smooth(x)) / 2, a smooth max(x, 0).
Var max_smooth_zero(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator+(Var a, double c) { return shift(a, c); }
inline Var operator+(double c, Var a) { return shift(a, c); }
inline Var operator-(Var a, double c) { return shift(a, -c); }
inline Var operator-(double c, Var a) { return shift(neg(a), c); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator/(Var a, double c) { return scale(a, 1.0 / c); }
Var operator/(double c, Var a);

// ---------------------------------------------------------------------------
// Scalar helpers shared with out-of-tape reference code.

double softplus_value(double x) noexcept;
double sigmoid_value(double x) noexcept;

}  // namespace socialforce::ad
