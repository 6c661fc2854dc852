#include "socialforce/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace socialforce {

std::size_t ParameterSet::size() const noexcept {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

std::vector<double> ParameterSet::flat() const {
  std::vector<double> out;
  out.reserve(size());
  for (const auto& b : blocks) out.insert(out.end(), b.values.begin(), b.values.end());
  return out;
}

void ParameterSet::assign_flat(std::span<const double> values) {
  if (values.size() != size()) throw std::invalid_argument("ParameterSet::assign_flat: size mismatch");
  std::size_t k = 0;
  for (auto& b : blocks) {
    for (double& v : b.values) v = values[k++];
  }
}

const ParamBlock& ParameterSet::block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw std::out_of_range("ParameterSet: no block named '" + name + "'");
}

ParamBlock& ParameterSet::block(const std::string& name) {
  return const_cast<ParamBlock&>(static_cast<const ParameterSet&>(*this).block(name));
}

bool ParameterSet::all_finite() const noexcept {
  for (const auto& b : blocks) {
    for (double v : b.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::vector<ad::Var> ParameterSet::bind(ad::Tape& tape, bool trainable) const {
  std::vector<ad::Var> vars;
  vars.reserve(blocks.size());
  for (const auto& b : blocks) {
    vars.push_back(trainable ? tape.variable(b.rows, b.cols, b.values) : tape.constant(b.rows, b.cols, b.values));
  }
  return vars;
}

}  // namespace socialforce
