#pragma once

// Interaction potentials V evaluated on the tape.
//
//   exp      V = v0 exp(-b / sigma)
//   mlp1d    V = softplus(w_out softplus(w_in b)),           5 hidden units
//   ffmlp    V = softplus(w_out softplus(W3 ... softplus(W0 FF(b, d_perp, d_par))))
//   diamond  V = v0 exp(-(|d_par|/a_par + |d_perp + skew max(d_par, 0)|/a_perp))
//
// d_par > 0 means the other pedestrian is ahead, d_perp > 0 that it is to the
// left. A positive diamond skew puts the ridge ahead-right, so the force on
// the observer pushes it to its right in head-on encounters.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "socialforce/autodiff.hpp"
#include "socialforce/parameters.hpp"

namespace socialforce {

enum class ModelType { Exponential, Mlp1d, FourierMlp2d, Diamond };

std::string to_string(ModelType type);
/// Accepts exp|exponential, mlp1d, ffmlp, diamond.
ModelType parse_model_type(const std::string& name);

inline constexpr std::size_t kMlp1dHidden = 5;
inline constexpr std::size_t kFourierBank = 32;
inline constexpr std::size_t kFourierFeatures = 6 * kFourierBank;  // 192
inline constexpr std::size_t kFfHidden = 64;
inline constexpr std::size_t kFfHiddenLayers = 3;

struct InteractionInputs {
  double b = 0.0;
  double d_perp = 0.0;
  double d_par = 0.0;
};

struct InteractionVars {
  ad::Var b;
  ad::Var d_perp;
  ad::Var d_par;
};

struct DiamondShape {
  double v0 = 2.0;
  double a_par = 1.5;
  double a_perp = 0.5;
  double skew = 0.4;
};

class PotentialModel;

/// A model's parameters recorded on one tape.
class BoundPotential {
 public:
  [[nodiscard]] ad::Var evaluate(const InteractionVars& in) const;
  /// The 192 Fourier features; ffmlp only.
  [[nodiscard]] ad::Var fourier_features(const InteractionVars& in) const;
  [[nodiscard]] const std::vector<ad::Var>& params() const noexcept { return params_; }
  [[nodiscard]] const PotentialModel& model() const noexcept { return *model_; }

 private:
  friend class PotentialModel;
  const PotentialModel* model_ = nullptr;
  std::vector<ad::Var> params_;
  std::array<ad::Var, 3> freqs_;  // 2π f per bank, ffmlp only
};

class PotentialModel {
 public:
  static PotentialModel exponential(double v0 = 2.1, double sigma = 0.3);
  /// Gaussian weights with standard deviation sqrt(2 / fan_in).
  static PotentialModel mlp1d(std::uint64_t seed);
  /// Same initialization; `zero_output` starts from the flat potential ln 2.
  static PotentialModel ffmlp(std::uint64_t seed, std::uint64_t ff_seed, bool zero_output = false);
  static PotentialModel diamond(const DiamondShape& shape = {});
  /// Validates block names, shapes and positivity constraints.
  static PotentialModel from_parts(ModelType type, ParameterSet params, std::uint64_t ff_seed = 0,
                                   std::vector<double> ff_freqs = {});

  [[nodiscard]] ModelType type() const noexcept { return type_; }
  [[nodiscard]] bool two_dimensional() const noexcept {
    return type_ == ModelType::FourierMlp2d || type_ == ModelType::Diamond;
  }
  [[nodiscard]] const ParameterSet& params() const noexcept { return params_; }
  /// Replaces the trainable values; shapes must match.
  void set_params(const ParameterSet& params);
  void set_flat_params(std::span<const double> values);
  [[nodiscard]] std::size_t parameter_count() const noexcept { return params_.size(); }
  [[nodiscard]] std::uint64_t ff_seed() const noexcept { return ff_seed_; }
  /// 3 banks of 32 frequencies (1/m), in input order b, d_perp, d_par.
  [[nodiscard]] const std::vector<double>& ff_freqs() const noexcept { return ff_freqs_; }

  [[nodiscard]] BoundPotential bind(ad::Tape& tape, bool trainable) const;
  /// Uses already-recorded parameter nodes, one per block, in block order.
  [[nodiscard]] BoundPotential bind_vars(ad::Tape& tape, std::span<const ad::Var> params) const;
  [[nodiscard]] double value(const InteractionInputs& in) const;
  [[nodiscard]] std::vector<double> fourier_features(const InteractionInputs& in) const;

  bool operator==(const PotentialModel&) const = default;

 private:
  PotentialModel() = default;
  ModelType type_ = ModelType::Exponential;
  ParameterSet params_;
  std::uint64_t ff_seed_ = 0;
  std::vector<double> ff_freqs_;
};

/// Expected block layout: (name, rows, cols) per block.
struct BlockShape {
  const char* name;
  std::size_t rows;
  std::size_t cols;
};
std::vector<BlockShape> expected_blocks(ModelType type);

}  // namespace socialforce
