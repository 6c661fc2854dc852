#pragma once

// Central-difference oracle and the backward-vs-oracle comparison.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "socialforce/autodiff.hpp"
#include "socialforce/parameters.hpp"

namespace socialforce {

/// Raised when the oracle probes a point where f is not finite.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, std::size_t coordinate)
      : std::runtime_error(what), coordinate_(coordinate) {}
  [[nodiscard]] std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// (f(θ+εe_i) − f(θ−εe_i)) / 2ε for every i in `coordinates`, or for every
/// coordinate when none are given. Exactly two evaluations per coordinate.
std::vector<double> finite_difference_gradient(const ScalarFunction& f, std::span<const double> params, double eps,
                                               std::span<const std::size_t> coordinates = {});

/// Builds a scalar output from parameter blocks recorded on the given tape.
using TapeFunction = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

struct GradCheckOptions {
  double eps = 1e-6;
  double tol = 1e-4;
  /// Check only this many coordinates, drawn without replacement; 0 means all.
  std::size_t sample = 0;
  /// Extra checks of the directional derivative along random unit directions.
  std::size_t directions = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = true;
  std::size_t worst_coordinate = 0;
  std::size_t n_checked = 0;
  std::size_t n_evaluations = 0;
  double max_directional_rel_err = 0.0;
  std::vector<double> analytic;  // full backward gradient
  std::vector<double> numeric;   // finite differences at checked coordinates (NaN elsewhere)
};

/// |a − b| / max(|a|, |b|, 1e-8).
double relative_error(double a, double b) noexcept;

/// Compares backward() against central differences of the same function.
GradCheckReport grad_check(const TapeFunction& f, const ParameterSet& params, const GradCheckOptions& options = {});

/// Plain value of f at `params`, evaluated on a scratch tape.
double evaluate(const TapeFunction& f, const ParameterSet& params);

}  // namespace socialforce
