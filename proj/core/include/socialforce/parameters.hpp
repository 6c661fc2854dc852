#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "socialforce/autodiff.hpp"

namespace socialforce {

/// One named, row-major parameter array.
struct ParamBlock {
  std::string name;
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  bool operator==(const ParamBlock&) const = default;
};

/// Ordered list of parameter blocks. The flat view concatenates blocks in order.
struct ParameterSet {
  std::vector<ParamBlock> blocks;

  [[nodiscard]] std::size_t size() const noexcept;
  [[nodiscard]] std::vector<double> flat() const;
  void assign_flat(std::span<const double> values);
  [[nodiscard]] const ParamBlock& block(const std::string& name) const;
  [[nodiscard]] ParamBlock& block(const std::string& name);
  [[nodiscard]] bool all_finite() const noexcept;

  /// Records every block on `tape`, as variables or as constants.
  [[nodiscard]] std::vector<ad::Var> bind(ad::Tape& tape, bool trainable) const;

  bool operator==(const ParameterSet&) const = default;
};

}  // namespace socialforce
