#include "socialforce/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace socialforce {

namespace {

double checked_eval(const ScalarFunction& f, std::span<const double> x, std::size_t coordinate) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "finite_difference_gradient: non-finite value while probing coordinate " << coordinate;
    throw NonFiniteError(msg.str(), coordinate);
  }
  return v;
}

}  // namespace

std::vector<double> finite_difference_gradient(const ScalarFunction& f, std::span<const double> params, double eps,
                                               std::span<const std::size_t> coordinates) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_difference_gradient: eps must be positive");
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(params.size(), 0.0);
  auto probe = [&](std::size_t i) {
    if (i >= x.size()) throw std::out_of_range("finite_difference_gradient: coordinate out of range");
    const double x0 = x[i];
    x[i] = x0 + eps;
    const double fp = checked_eval(f, x, i);
    x[i] = x0 - eps;
    const double fm = checked_eval(f, x, i);
    x[i] = x0;
    grad[i] = (fp - fm) / (2.0 * eps);
  };
  if (coordinates.empty()) {
    for (std::size_t i = 0; i < x.size(); ++i) probe(i);
  } else {
    for (std::size_t i : coordinates) probe(i);
  }
  return grad;
}

double relative_error(double a, double b) noexcept {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

double evaluate(const TapeFunction& f, const ParameterSet& params) {
  ad::Tape tape;
  const auto vars = params.bind(tape, false);
  return f(tape, vars).value();
}

GradCheckReport grad_check(const TapeFunction& f, const ParameterSet& params, const GradCheckOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("grad_check: tol must be positive");
  GradCheckReport report;
  const std::size_t dim = params.size();
  if (dim == 0) return report;

  {
    ad::Tape tape;
    const auto vars = params.bind(tape, true);
    const ad::Var out = f(tape, vars);
    const auto g = tape.gradient(out, vars);
    report.analytic.assign(g.flat().begin(), g.flat().end());
  }

  ParameterSet probe = params;
  const ScalarFunction value = [&](std::span<const double> theta) {
    probe.assign_flat(theta);
    return evaluate(f, probe);
  };
  const std::vector<double> theta = params.flat();

  std::vector<std::size_t> coords(dim);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);
  if (options.sample > 0 && options.sample < dim) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.sample);
    std::sort(coords.begin(), coords.end());
  }

  const auto numeric = finite_difference_gradient(value, theta, options.eps, coords);
  report.numeric.assign(dim, std::numeric_limits<double>::quiet_NaN());
  report.n_evaluations = 2 * coords.size();
  for (std::size_t i : coords) {
    report.numeric[i] = numeric[i];
    const double err = relative_error(report.analytic[i], numeric[i]);
    if (err > report.max_rel_err || report.n_checked == 0) {
      report.max_rel_err = err;
      report.worst_coordinate = i;
    }
    ++report.n_checked;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(dim);
  for (std::size_t k = 0; k < options.directions; ++k) {
    std::vector<double> u(dim);
    double norm = 0.0;
    for (double& ui : u) {
      ui = normal(rng);
      norm += ui * ui;
    }
    norm = std::sqrt(norm);
    double slope = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      u[i] /= norm;
      slope += u[i] * report.analytic[i];
    }
    for (std::size_t i = 0; i < dim; ++i) x[i] = theta[i] + options.eps * u[i];
    const double fp = checked_eval(value, x, dim + k);
    for (std::size_t i = 0; i < dim; ++i) x[i] = theta[i] - options.eps * u[i];
    const double fm = checked_eval(value, x, dim + k);
    report.n_evaluations += 2;
    const double err = relative_error(slope, (fp - fm) / (2.0 * options.eps));
    report.max_directional_rel_err = std::max(report.max_directional_rel_err, err);
  }

  report.pass = report.max_rel_err <= options.tol && report.max_directional_rel_err <= options.tol;
  return report;
}

}  // namespace socialforce
