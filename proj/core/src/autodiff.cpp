#include "socialforce/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace socialforce::ad {

namespace {

bool is_elementwise_binary(Op op) {
  return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

bool is_unary(Op op) {
  switch (op) {
    case Op::Identity:
    case Op::Neg:
    case Op::Scale:
    case Op::Shift:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Sin:
    case Op::Cos:
    case Op::AbsSmooth:
    case Op::Softplus:
    case Op::Sigmoid:
    case Op::Sum:
      return true;
    default:
      return false;
  }
}

bool caches_partials(Op op) {
  switch (op) {
    case Op::Log:
    case Op::Sqrt:
    case Op::Sin:
    case Op::Cos:
    case Op::AbsSmooth:
    case Op::Softplus:
    case Op::Sigmoid:
      return true;
    default:
      return false;
  }
}

[[noreturn]] void shape_error(Op op, const std::string& detail) {
  throw ShapeError(std::string("ad::") + op_name(op) + ": " + detail);
}

[[noreturn]] void domain_error(Op op, const std::string& detail) {
  throw DomainError(std::string("ad::") + op_name(op) + ": " + detail);
}

}  // namespace

const char* op_name(Op op) noexcept {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Identity: return "identity";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Scale: return "scale";
    case Op::Shift: return "shift";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::AbsSmooth: return "abs_smooth";
    case Op::Softplus: return "softplus";
    case Op::Sigmoid: return "sigmoid";
    case Op::MatVec: return "matvec";
    case Op::MatTVec: return "matvec_transposed";
    case Op::Outer: return "outer";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::Embed: return "embed";
    case Op::Sum: return "sum";
  }
  return "?";
}

double softplus_value(double x) noexcept {
  if (x > 30.0) return x + std::exp(-x);
  return std::log1p(std::exp(x));
}

double sigmoid_value(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Var

double Var::value() const {
  if (!tape_) throw std::logic_error("ad::Var: empty handle");
  if (tape_->rows(index_) * tape_->cols(index_) != 1) {
    throw ShapeError("ad::Var::value: node is not a scalar");
  }
  return tape_->values(index_)[0];
}

std::span<const double> Var::values() const {
  if (!tape_) throw std::logic_error("ad::Var: empty handle");
  return tape_->values(index_);
}

std::size_t Var::rows() const { return tape_->rows(index_); }
std::size_t Var::cols() const { return tape_->cols(index_); }
std::size_t Var::size() const { return rows() * cols(); }

// ---------------------------------------------------------------------------
// GradientVector

std::span<const double> GradientVector::operator[](std::size_t i) const {
  if (i + 1 >= offsets_.size()) throw std::out_of_range("GradientVector: index out of range");
  return std::span<const double>(data_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

double GradientVector::scalar(std::size_t i) const {
  auto s = (*this)[i];
  if (s.size() != 1) throw ShapeError("GradientVector::scalar: entry is not a scalar");
  return s[0];
}

// ---------------------------------------------------------------------------
// Tape: recording

std::span<const double> Tape::values(std::uint32_t i) const {
  const Node& n = nodes_.at(i);
  return {values_.data() + n.value, n.size()};
}

std::size_t Tape::allocate(std::size_t n) {
  const std::size_t offset = values_.size();
  values_.resize(offset + n);
  return offset;
}

std::uint32_t Tape::push_node(Node node) {
  if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw std::length_error("ad::Tape: node index overflow");
  }
  nodes_.push_back(node);
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

void Tape::check_owned(Var v, const char* what) const {
  if (v.tape() != this) {
    throw std::invalid_argument(std::string("ad::Tape: ") + what + " belongs to a different tape");
  }
  if (v.index() >= nodes_.size()) {
    throw std::invalid_argument(std::string("ad::Tape: ") + what + " refers to a rewound node");
  }
}

Var Tape::make_leaf(std::size_t rows, std::size_t cols, std::span<const double> values, bool needs_grad) {
  if (rows * cols != values.size() || values.empty()) {
    throw ShapeError("ad::Tape: leaf shape does not match value count");
  }
  Node n;
  n.op = Op::Leaf;
  n.needs_grad = needs_grad;
  n.rows = static_cast<std::uint32_t>(rows);
  n.cols = static_cast<std::uint32_t>(cols);
  n.value = allocate(values.size());
  std::copy(values.begin(), values.end(), values_.begin() + static_cast<std::ptrdiff_t>(n.value));
  return Var(this, push_node(n));
}

Var Tape::variable(double value) { return make_leaf(1, 1, std::span<const double>(&value, 1), true); }
Var Tape::variable(std::span<const double> values) { return make_leaf(values.size(), 1, values, true); }
Var Tape::variable(std::size_t rows, std::size_t cols, std::span<const double> values) {
  return make_leaf(rows, cols, values, true);
}
Var Tape::constant(double value) { return make_leaf(1, 1, std::span<const double>(&value, 1), false); }
Var Tape::constant(std::span<const double> values) { return make_leaf(values.size(), 1, values, false); }
Var Tape::constant(std::size_t rows, std::size_t cols, std::span<const double> values) {
  return make_leaf(rows, cols, values, false);
}

Var Tape::record(Op op, std::span<const Var> inputs, double param) {
  if (op == Op::Leaf) throw std::invalid_argument("ad::Tape::record: use variable()/constant() for leaves");
  if (op == Op::Slice || op == Op::Embed) {
    throw std::invalid_argument("ad::Tape::record: use record_slice()/record_embed()");
  }
  for (const Var& v : inputs) check_owned(v, "input");

  Node n;
  n.op = op;
  n.param = param;

  if (op == Op::Concat) {
    if (inputs.empty()) shape_error(op, "needs at least one input");
    std::size_t total = 0;
    n.arg0 = static_cast<std::uint32_t>(args_.size());
    n.arg1 = static_cast<std::uint32_t>(inputs.size());
    for (const Var& v : inputs) {
      const Node& in = nodes_[v.index()];
      if (in.cols != 1) shape_error(op, "inputs must be column vectors");
      total += in.rows;
      n.needs_grad = n.needs_grad || in.needs_grad;
      args_.push_back(v.index());
    }
    n.rows = static_cast<std::uint32_t>(total);
    n.cols = 1;
    n.value = allocate(total);
    double* out = ptr(n.value);
    for (const Var& v : inputs) {
      const Node& in = nodes_[v.index()];
      std::copy_n(ptr(in.value), in.size(), out);
      out += in.size();
    }
    return Var(this, push_node(n));
  }

  const std::size_t arity = is_unary(op) ? 1 : 2;
  if (inputs.size() != arity) {
    std::ostringstream msg;
    msg << "expected " << arity << " inputs, got " << inputs.size();
    shape_error(op, msg.str());
  }
  const std::uint32_t ia = inputs[0].index();
  const std::uint32_t ib = arity == 2 ? inputs[1].index() : ia;
  n.arg0 = ia;
  n.arg1 = ib;
  // Copies: allocate() may reallocate nodes_ indirectly through values_ only,
  // but keep the input headers by value to stay clear of aliasing.
  const Node a = nodes_[ia];
  const Node b = nodes_[ib];
  n.needs_grad = op == Op::Identity || a.needs_grad || (arity == 2 && b.needs_grad);

  if (is_elementwise_binary(op)) {
    if (a.size() == b.size() && a.rows == b.rows) {
      n.rows = a.rows;
      n.cols = a.cols;
    } else if (a.size() == 1) {
      n.rows = b.rows;
      n.cols = b.cols;
    } else if (b.size() == 1) {
      n.rows = a.rows;
      n.cols = a.cols;
    } else {
      shape_error(op, "operand shapes are incompatible");
    }
    const std::size_t len = n.size();
    n.value = allocate(len);
    double* y = ptr(n.value);
    const double* x0 = ptr(a.value);
    const double* x1 = ptr(b.value);
    const std::size_t sa = a.size() == 1 ? 0 : 1;
    const std::size_t sb = b.size() == 1 ? 0 : 1;
    switch (op) {
      case Op::Add:
        for (std::size_t k = 0; k < len; ++k) y[k] = x0[k * sa] + x1[k * sb];
        break;
      case Op::Sub:
        for (std::size_t k = 0; k < len; ++k) y[k] = x0[k * sa] - x1[k * sb];
        break;
      case Op::Mul:
        for (std::size_t k = 0; k < len; ++k) y[k] = x0[k * sa] * x1[k * sb];
        break;
      case Op::Div:
        for (std::size_t k = 0; k < len; ++k) {
          if (x1[k * sb] == 0.0) domain_error(op, "division by zero");
          y[k] = x0[k * sa] / x1[k * sb];
        }
        break;
      default:
        break;
    }
  } else if (op == Op::MatVec || op == Op::MatTVec) {
    const std::size_t r = a.rows;
    const std::size_t c = a.cols;
    if (b.cols != 1) shape_error(op, "second operand must be a column vector");
    if (op == Op::MatVec && b.rows != c) shape_error(op, "matrix columns do not match vector length");
    if (op == Op::MatTVec && b.rows != r) shape_error(op, "matrix rows do not match vector length");
    n.rows = static_cast<std::uint32_t>(op == Op::MatVec ? r : c);
    n.cols = 1;
    n.value = allocate(n.rows);
    double* y = ptr(n.value);
    const double* w = ptr(a.value);
    const double* x = ptr(b.value);
    if (op == Op::MatVec) {
      for (std::size_t i = 0; i < r; ++i) {
        const double* row = w + i * c;
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += row[j] * x[j];
        y[i] = acc;
      }
    } else {
      std::fill_n(y, c, 0.0);
      for (std::size_t i = 0; i < r; ++i) {
        const double* row = w + i * c;
        const double xi = x[i];
        for (std::size_t j = 0; j < c; ++j) y[j] += row[j] * xi;
      }
    }
  } else if (op == Op::Outer) {
    if (a.cols != 1 || b.cols != 1) shape_error(op, "operands must be column vectors");
    n.rows = a.rows;
    n.cols = b.rows;
    n.value = allocate(n.size());
    double* y = ptr(n.value);
    const double* x0 = ptr(a.value);
    const double* x1 = ptr(b.value);
    for (std::size_t i = 0; i < a.rows; ++i) {
      for (std::size_t j = 0; j < b.rows; ++j) y[i * b.rows + j] = x0[i] * x1[j];
    }
  } else if (op == Op::Sum) {
    n.rows = 1;
    n.cols = 1;
    n.value = allocate(1);
    const double* x = ptr(a.value);
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += x[k];
    *ptr(n.value) = acc;
  } else {
    // Elementwise unary.
    n.rows = a.rows;
    n.cols = a.cols;
    const std::size_t len = n.size();
    const bool want_aux = caches_partials(op) && n.needs_grad;
    n.value = allocate(want_aux ? 2 * len : len);
    n.aux = want_aux ? n.value + len : 0;
    double* y = ptr(n.value);
    double* d = want_aux ? ptr(n.aux) : nullptr;
    const double* x = ptr(a.value);
    for (std::size_t k = 0; k < len; ++k) {
      const double xk = x[k];
      switch (op) {
        case Op::Identity: y[k] = xk; break;
        case Op::Neg: y[k] = -xk; break;
        case Op::Scale: y[k] = param * xk; break;
        case Op::Shift: y[k] = xk + param; break;
        case Op::Exp: y[k] = std::exp(xk); break;
        case Op::Log:
          if (!(xk > 0.0)) domain_error(op, "argument must be positive");
          y[k] = std::log(xk);
          if (d) d[k] = 1.0 / xk;
          break;
        case Op::Sqrt:
          if (!(xk > 0.0)) domain_error(op, "argument must be positive");
          y[k] = std::sqrt(xk);
          if (d) d[k] = 0.5 / y[k];
          break;
        case Op::Sin:
          y[k] = std::sin(xk);
          if (d) d[k] = std::cos(xk);
          break;
        case Op::Cos:
          y[k] = std::cos(xk);
          if (d) d[k] = -std::sin(xk);
          break;
        case Op::AbsSmooth:
          y[k] = std::sqrt(xk * xk + kAbsSmoothEps * kAbsSmoothEps);
          if (d) d[k] = xk / y[k];
          break;
        case Op::Softplus:
          y[k] = softplus_value(xk);
          if (d) d[k] = sigmoid_value(xk);
          break;
        case Op::Sigmoid:
          y[k] = sigmoid_value(xk);
          if (d) d[k] = y[k] * (1.0 - y[k]);
          break;
        default:
          shape_error(op, "not an elementwise unary primitive");
      }
    }
  }

  const double* y = ptr(n.value);
  for (std::size_t k = 0; k < n.size(); ++k) {
    if (!std::isfinite(y[k])) domain_error(op, "non-finite result");
  }
  return Var(this, push_node(n));
}

Var Tape::record_slice(Var x, std::size_t offset, std::size_t length) {
  check_owned(x, "input");
  const Node a = nodes_[x.index()];
  if (a.cols != 1) shape_error(Op::Slice, "input must be a column vector");
  if (length == 0 || offset + length > a.rows) shape_error(Op::Slice, "range out of bounds");
  Node n;
  n.op = Op::Slice;
  n.needs_grad = a.needs_grad;
  n.rows = static_cast<std::uint32_t>(length);
  n.cols = 1;
  n.arg0 = x.index();
  n.ipar = static_cast<std::uint32_t>(offset);
  n.value = allocate(length);
  std::copy_n(ptr(a.value) + offset, length, ptr(n.value));
  return Var(this, push_node(n));
}

Var Tape::record_embed(Var x, std::size_t offset, std::size_t total) {
  check_owned(x, "input");
  const Node a = nodes_[x.index()];
  if (a.cols != 1) shape_error(Op::Embed, "input must be a column vector");
  if (offset + a.rows > total) shape_error(Op::Embed, "range out of bounds");
  Node n;
  n.op = Op::Embed;
  n.needs_grad = a.needs_grad;
  n.rows = static_cast<std::uint32_t>(total);
  n.cols = 1;
  n.arg0 = x.index();
  n.ipar = static_cast<std::uint32_t>(offset);
  n.value = allocate(total);
  double* y = ptr(n.value);
  std::fill_n(y, total, 0.0);
  std::copy_n(ptr(a.value), a.rows, y + offset);
  return Var(this, push_node(n));
}

void Tape::rewind(const Mark& m) {
  if (m.nodes > nodes_.size() || m.values > values_.size() || m.args > args_.size()) {
    throw std::invalid_argument("ad::Tape::rewind: mark is ahead of the tape");
  }
  nodes_.resize(m.nodes);
  values_.resize(m.values);
  args_.resize(m.args);
}

void Tape::clear() {
  nodes_.clear();
  values_.clear();
  args_.clear();
}

// ---------------------------------------------------------------------------
// Tape: numeric reverse sweep

GradientVector Tape::gradient(Var output, std::span<const Var> wrt) const {
  check_owned(output, "output");
  if (nodes_[output.index()].size() != 1) throw ShapeError("ad::Tape::gradient: output must be a scalar");
  for (const Var& w : wrt) check_owned(w, "wrt variable");

  GradientVector result;
  result.offsets_.reserve(wrt.size() + 1);
  result.offsets_.push_back(0);
  for (const Var& w : wrt) result.offsets_.push_back(result.offsets_.back() + nodes_[w.index()].size());
  result.data_.assign(result.offsets_.back(), 0.0);
  last_visits_ = 0;
  if (wrt.empty()) return result;

  std::uint32_t lo = output.index();
  for (const Var& w : wrt) lo = std::min(lo, w.index());
  const std::uint32_t hi = output.index();
  const std::size_t span_nodes = hi - lo + 1;
  const std::size_t base = nodes_[lo].value;
  const std::size_t extent = nodes_[hi].value + nodes_[hi].size() - base;

  adjoint_.assign(extent, 0.0);
  touched_.assign(span_nodes, 0);
  double* adj = adjoint_.data();
  auto adj_of = [&](std::uint32_t i) { return adj + (nodes_[i].value - base); };
  auto wants = [&](std::uint32_t j) { return j >= lo && nodes_[j].needs_grad; };
  // Adds `c` (length len, or broadcast into a scalar target) into node j.
  auto accumulate = [&](std::uint32_t j, auto&& contribution, std::size_t len) {
    double* t = adj_of(j);
    touched_[j - lo] = 1;
    if (nodes_[j].size() == 1 && len > 1) {
      double s = 0.0;
      for (std::size_t k = 0; k < len; ++k) s += contribution(k);
      t[0] += s;
    } else {
      for (std::size_t k = 0; k < len; ++k) t[k] += contribution(k);
    }
  };

  adj_of(hi)[0] = 1.0;
  touched_[hi - lo] = 1;

  for (std::uint32_t i = hi + 1; i-- > lo;) {
    if (!touched_[i - lo]) continue;
    ++last_visits_;
    const Node& n = nodes_[i];
    const double* g = adj_of(i);
    const std::size_t len = n.size();
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Identity:
      case Op::Shift:
        if (wants(n.arg0)) accumulate(n.arg0, [&](std::size_t k) { return g[k]; }, len);
        break;
      case Op::Neg:
        if (wants(n.arg0)) accumulate(n.arg0, [&](std::size_t k) { return -g[k]; }, len);
        break;
      case Op::Scale:
        if (wants(n.arg0)) accumulate(n.arg0, [&](std::size_t k) { return n.param * g[k]; }, len);
        break;
      case Op::Exp: {
        const double* y = ptr(n.value);
        if (wants(n.arg0)) accumulate(n.arg0, [&](std::size_t k) { return g[k] * y[k]; }, len);
        break;
      }
      case Op::Log:
      case Op::Sqrt:
      case Op::Sin:
      case Op::Cos:
      case Op::AbsSmooth:
      case Op::Softplus:
      case Op::Sigmoid: {
        const double* d = ptr(n.aux);
        if (wants(n.arg0)) accumulate(n.arg0, [&](std::size_t k) { return g[k] * d[k]; }, len);
        break;
      }
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        const Node& a = nodes_[n.arg0];
        const Node& b = nodes_[n.arg1];
        const double* xa = ptr(a.value);
        const double* xb = ptr(b.value);
        const std::size_t sa = a.size() == 1 ? 0 : 1;
        const std::size_t sb = b.size() == 1 ? 0 : 1;
        if (wants(n.arg0)) {
          switch (n.op) {
            case Op::Add:
            case Op::Sub: accumulate(n.arg0, [&](std::size_t k) { return g[k]; }, len); break;
            case Op::Mul: accumulate(n.arg0, [&](std::size_t k) { return g[k] * xb[k * sb]; }, len); break;
            default: accumulate(n.arg0, [&](std::size_t k) { return g[k] / xb[k * sb]; }, len); break;
          }
        }
        if (wants(n.arg1)) {
          const double* y = ptr(n.value);
          switch (n.op) {
            case Op::Add: accumulate(n.arg1, [&](std::size_t k) { return g[k]; }, len); break;
            case Op::Sub: accumulate(n.arg1, [&](std::size_t k) { return -g[k]; }, len); break;
            case Op::Mul: accumulate(n.arg1, [&](std::size_t k) { return g[k] * xa[k * sa]; }, len); break;
            default: accumulate(n.arg1, [&](std::size_t k) { return -g[k] * y[k] / xb[k * sb]; }, len); break;
          }
        }
        break;
      }
      case Op::MatVec: {
        // y_i = sum_j W_ij x_j
        const Node& wn = nodes_[n.arg0];
        const std::size_t r = wn.rows;
        const std::size_t c = wn.cols;
        const double* w = ptr(wn.value);
        const double* x = ptr(nodes_[n.arg1].value);
        if (wants(n.arg0)) {
          double* gw = adj_of(n.arg0);
          touched_[n.arg0 - lo] = 1;
          for (std::size_t a = 0; a < r; ++a) {
            const double ga = g[a];
            double* row = gw + a * c;
            for (std::size_t j = 0; j < c; ++j) row[j] += ga * x[j];
          }
        }
        if (wants(n.arg1)) {
          double* gx = adj_of(n.arg1);
          touched_[n.arg1 - lo] = 1;
          for (std::size_t a = 0; a < r; ++a) {
            const double ga = g[a];
            const double* row = w + a * c;
            for (std::size_t j = 0; j < c; ++j) gx[j] += row[j] * ga;
          }
        }
        break;
      }
      case Op::MatTVec: {
        // y_j = sum_i W_ij u_i
        const Node& wn = nodes_[n.arg0];
        const std::size_t r = wn.rows;
        const std::size_t c = wn.cols;
        const double* w = ptr(wn.value);
        const double* u = ptr(nodes_[n.arg1].value);
        if (wants(n.arg0)) {
          double* gw = adj_of(n.arg0);
          touched_[n.arg0 - lo] = 1;
          for (std::size_t a = 0; a < r; ++a) {
            const double ua = u[a];
            double* row = gw + a * c;
            for (std::size_t j = 0; j < c; ++j) row[j] += ua * g[j];
          }
        }
        if (wants(n.arg1)) {
          double* gu = adj_of(n.arg1);
          touched_[n.arg1 - lo] = 1;
          for (std::size_t a = 0; a < r; ++a) {
            const double* row = w + a * c;
            double acc = 0.0;
            for (std::size_t j = 0; j < c; ++j) acc += row[j] * g[j];
            gu[a] += acc;
          }
        }
        break;
      }
      case Op::Outer: {
        const std::size_t r = n.rows;
        const std::size_t c = n.cols;
        const double* xa = ptr(nodes_[n.arg0].value);
        const double* xb = ptr(nodes_[n.arg1].value);
        if (wants(n.arg0)) {
          double* ga = adj_of(n.arg0);
          touched_[n.arg0 - lo] = 1;
          for (std::size_t a = 0; a < r; ++a) {
            double acc = 0.0;
            for (std::size_t j = 0; j < c; ++j) acc += g[a * c + j] * xb[j];
            ga[a] += acc;
          }
        }
        if (wants(n.arg1)) {
          double* gb = adj_of(n.arg1);
          touched_[n.arg1 - lo] = 1;
          for (std::size_t a = 0; a < r; ++a) {
            for (std::size_t j = 0; j < c; ++j) gb[j] += g[a * c + j] * xa[a];
          }
        }
        break;
      }
      case Op::Concat: {
        std::size_t offset = 0;
        for (std::uint32_t k = 0; k < n.arg1; ++k) {
          const std::uint32_t j = args_[n.arg0 + k];
          const std::size_t part = nodes_[j].size();
          if (wants(j)) {
            const double* gp = g + offset;
            accumulate(j, [&](std::size_t q) { return gp[q]; }, part);
          }
          offset += part;
        }
        break;
      }
      case Op::Slice:
        if (wants(n.arg0)) {
          double* t = adj_of(n.arg0) + n.ipar;
          touched_[n.arg0 - lo] = 1;
          for (std::size_t k = 0; k < len; ++k) t[k] += g[k];
        }
        break;
      case Op::Embed:
        if (wants(n.arg0)) {
          const double* gp = g + n.ipar;
          accumulate(n.arg0, [&](std::size_t k) { return gp[k]; }, nodes_[n.arg0].size());
        }
        break;
      case Op::Sum:
        if (wants(n.arg0)) {
          const double g0 = g[0];
          accumulate(n.arg0, [&](std::size_t) { return g0; }, nodes_[n.arg0].size());
        }
        break;
    }
  }

  for (std::size_t k = 0; k < wrt.size(); ++k) {
    const std::uint32_t j = wrt[k].index();
    if (j > hi || !touched_[j - lo]) continue;
    const double* src = adj_of(j);
    std::copy_n(src, nodes_[j].size(), result.data_.begin() + static_cast<std::ptrdiff_t>(result.offsets_[k]));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Tape: recorded reverse sweep

std::vector<Var> Tape::gradient_graph(Var output, std::span<const Var> wrt) {
  check_owned(output, "output");
  if (nodes_[output.index()].size() != 1) throw ShapeError("ad::Tape::gradient_graph: output must be a scalar");
  for (const Var& w : wrt) check_owned(w, "wrt variable");

  std::vector<Var> result;
  result.reserve(wrt.size());
  last_visits_ = 0;
  auto zeros_like = [&](std::uint32_t j) {
    const Node n = nodes_[j];
    std::vector<double> z(n.size(), 0.0);
    return constant(n.rows, n.cols, z);
  };
  if (wrt.empty()) return result;

  std::uint32_t lo = output.index();
  for (const Var& w : wrt) lo = std::min(lo, w.index());
  const std::uint32_t hi = output.index();
  std::vector<Var> adj(hi - lo + 1);

  auto wants = [&](std::uint32_t j) { return j >= lo && nodes_[j].needs_grad; };
  auto node_var = [&](std::uint32_t j) { return Var(this, j); };
  auto accumulate = [&](std::uint32_t j, Var c) {
    const Node target = nodes_[j];
    if (target.size() == 1 && c.size() > 1) {
      c = sum(c);
    } else if (target.size() > 1 && c.size() == 1) {
      std::vector<double> ones(target.size(), 1.0);
      c = mul(constant(target.rows, target.cols, ones), c);
    }
    Var& slot = adj[j - lo];
    slot = slot.valid() ? add(slot, c) : c;
  };

  adj[hi - lo] = constant(1.0);

  for (std::uint32_t i = hi + 1; i-- > lo;) {
    if (!adj[i - lo].valid()) continue;
    ++last_visits_;
    const Node n = nodes_[i];  // copy: recording below may reallocate nodes_
    const Var g = adj[i - lo];
    const Var y = node_var(i);
    const Var x = node_var(n.arg0);
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Identity:
      case Op::Shift:
        if (wants(n.arg0)) accumulate(n.arg0, g);
        break;
      case Op::Neg:
        if (wants(n.arg0)) accumulate(n.arg0, neg(g));
        break;
      case Op::Scale:
        if (wants(n.arg0)) accumulate(n.arg0, scale(g, n.param));
        break;
      case Op::Exp:
        if (wants(n.arg0)) accumulate(n.arg0, mul(g, y));
        break;
      case Op::Log:
        if (wants(n.arg0)) accumulate(n.arg0, div(g, x));
        break;
      case Op::Sqrt:
        if (wants(n.arg0)) accumulate(n.arg0, div(scale(g, 0.5), y));
        break;
      case Op::Sin:
        if (wants(n.arg0)) accumulate(n.arg0, mul(g, cos(x)));
        break;
      case Op::Cos:
        if (wants(n.arg0)) accumulate(n.arg0, neg(mul(g, sin(x))));
        break;
      case Op::AbsSmooth:
        if (wants(n.arg0)) accumulate(n.arg0, mul(g, div(x, y)));
        break;
      case Op::Softplus:
        if (wants(n.arg0)) accumulate(n.arg0, mul(g, sigmoid(x)));
        break;
      case Op::Sigmoid:
        if (wants(n.arg0)) accumulate(n.arg0, mul(g, mul(y, shift(neg(y), 1.0))));
        break;
      case Op::Add:
        if (wants(n.arg0)) accumulate(n.arg0, g);
        if (wants(n.arg1)) accumulate(n.arg1, g);
        break;
      case Op::Sub:
        if (wants(n.arg0)) accumulate(n.arg0, g);
        if (wants(n.arg1)) accumulate(n.arg1, neg(g));
        break;
      case Op::Mul:
        if (wants(n.arg0)) accumulate(n.arg0, mul(g, node_var(n.arg1)));
        if (wants(n.arg1)) accumulate(n.arg1, mul(g, x));
        break;
      case Op::Div: {
        const Var b = node_var(n.arg1);
        if (wants(n.arg0)) accumulate(n.arg0, div(g, b));
        if (wants(n.arg1)) accumulate(n.arg1, neg(div(mul(g, y), b)));
        break;
      }
      case Op::MatVec: {
        const Var v = node_var(n.arg1);
        if (wants(n.arg0)) accumulate(n.arg0, outer(g, v));
        if (wants(n.arg1)) accumulate(n.arg1, matvec_transposed(x, g));
        break;
      }
      case Op::MatTVec: {
        const Var u = node_var(n.arg1);
        if (wants(n.arg0)) accumulate(n.arg0, outer(u, g));
        if (wants(n.arg1)) accumulate(n.arg1, matvec(x, g));
        break;
      }
      case Op::Outer: {
        const Var b = node_var(n.arg1);
        if (wants(n.arg0)) accumulate(n.arg0, matvec(g, b));
        if (wants(n.arg1)) accumulate(n.arg1, matvec_transposed(g, x));
        break;
      }
      case Op::Concat: {
        std::size_t offset = 0;
        for (std::uint32_t k = 0; k < n.arg1; ++k) {
          const std::uint32_t j = args_[n.arg0 + k];
          const std::size_t part = nodes_[j].size();
          if (wants(j)) accumulate(j, slice(g, offset, part));
          offset += part;
        }
        break;
      }
      case Op::Slice:
        if (wants(n.arg0)) accumulate(n.arg0, embed(g, n.ipar, nodes_[n.arg0].size()));
        break;
      case Op::Embed:
        if (wants(n.arg0)) accumulate(n.arg0, slice(g, n.ipar, nodes_[n.arg0].size()));
        break;
      case Op::Sum:
        if (wants(n.arg0)) accumulate(n.arg0, g);
        break;
    }
  }

  for (const Var& w : wrt) {
    const std::uint32_t j = w.index();
    if (j <= hi && adj[j - lo].valid()) {
      result.push_back(adj[j - lo]);
    } else {
      result.push_back(zeros_like(j));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Free functions

namespace {
Tape& tape_of(Var a) {
  if (!a.valid()) throw std::logic_error("ad: empty Var handle");
  return *a.tape();
}
Var unary(Op op, Var a, double param = 0.0) {
  const Var in[1] = {a};
  return tape_of(a).record(op, in, param);
}
Var binary(Op op, Var a, Var b) {
  const Var in[2] = {a, b};
  return tape_of(a).record(op, in);
}
}  // namespace

Var add(Var a, Var b) { return binary(Op::Add, a, b); }
Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }
Var mul(Var a, Var b) { return binary(Op::Mul, a, b); }
Var div(Var a, Var b) { return binary(Op::Div, a, b); }
Var neg(Var a) { return unary(Op::Neg, a); }
Var scale(Var a, double c) { return unary(Op::Scale, a, c); }
Var shift(Var a, double c) { return unary(Op::Shift, a, c); }
Var exp(Var a) { return unary(Op::Exp, a); }
Var log(Var a) { return unary(Op::Log, a); }
Var sqrt(Var a) { return unary(Op::Sqrt, a); }
Var sin(Var a) { return unary(Op::Sin, a); }
Var cos(Var a) { return unary(Op::Cos, a); }
Var abs_smooth(Var a) { return unary(Op::AbsSmooth, a); }
Var softplus(Var a) { return unary(Op::Softplus, a); }
Var sigmoid(Var a) { return unary(Op::Sigmoid, a); }
Var matvec(Var w, Var x) { return binary(Op::MatVec, w, x); }
Var matvec_transposed(Var w, Var u) { return binary(Op::MatTVec, w, u); }
Var outer(Var a, Var b) { return binary(Op::Outer, a, b); }
Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("ad::concat: no inputs");
  return tape_of(parts[0]).record(Op::Concat, parts);
}
Var slice(Var x, std::size_t offset, std::size_t length) { return tape_of(x).record_slice(x, offset, length); }
Var embed(Var x, std::size_t offset, std::size_t total) { return tape_of(x).record_embed(x, offset, total); }
Var sum(Var a) { return unary(Op::Sum, a); }
Var watch(Var a) { return unary(Op::Identity, a); }
Var max_smooth_zero(Var a) { return scale(add(a, abs_smooth(a)), 0.5); }

Var operator/(double c, Var a) { return div(tape_of(a).constant(c), a); }

}  // namespace socialforce::ad
