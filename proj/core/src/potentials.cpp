#include "socialforce/potentials.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace socialforce {

namespace {

ParamBlock gaussian_block(const char* name, std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(cols)));
  ParamBlock b{name, rows, cols, std::vector<double>(rows * cols)};
  for (double& v : b.values) v = normal(rng);
  return b;
}

ParamBlock scalar_block(const char* name, double v) { return ParamBlock{name, 1, 1, {v}}; }

std::vector<double> sample_frequencies(std::uint64_t ff_seed) {
  std::mt19937_64 rng(ff_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> f(3 * kFourierBank);
  for (double& v : f) v = normal(rng);
  return f;
}

void require_positive(const ParameterSet& p, const char* name) {
  const double v = p.block(name).values[0];
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("potential parameter '") + name + "' must be positive");
  }
}

}  // namespace

std::string to_string(ModelType type) {
  switch (type) {
    case ModelType::Exponential: return "exp";
    case ModelType::Mlp1d: return "mlp1d";
    case ModelType::FourierMlp2d: return "ffmlp";
    case ModelType::Diamond: return "diamond";
  }
  return "?";
}

ModelType parse_model_type(const std::string& name) {
  if (name == "exp" || name == "exponential") return ModelType::Exponential;
  if (name == "mlp1d") return ModelType::Mlp1d;
  if (name == "ffmlp") return ModelType::FourierMlp2d;
  if (name == "diamond") return ModelType::Diamond;
  throw std::invalid_argument("unknown model type '" + name + "'");
}

std::vector<BlockShape> expected_blocks(ModelType type) {
  switch (type) {
    case ModelType::Exponential:
      return {{"v0", 1, 1}, {"sigma", 1, 1}};
    case ModelType::Mlp1d:
      return {{"w_in", kMlp1dHidden, 1}, {"w_out", 1, kMlp1dHidden}};
    case ModelType::FourierMlp2d:
      return {{"w0", kFfHidden, kFourierFeatures},
              {"w1", kFfHidden, kFfHidden},
              {"w2", kFfHidden, kFfHidden},
              {"w3", kFfHidden, kFfHidden},
              {"w_out", 1, kFfHidden}};
    case ModelType::Diamond:
      return {{"v0", 1, 1}, {"a_par", 1, 1}, {"a_perp", 1, 1}, {"skew", 1, 1}};
  }
  return {};
}

PotentialModel PotentialModel::exponential(double v0, double sigma) {
  return from_parts(ModelType::Exponential, ParameterSet{{scalar_block("v0", v0), scalar_block("sigma", sigma)}});
}

PotentialModel PotentialModel::mlp1d(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParameterSet p;
  p.blocks.push_back(gaussian_block("w_in", kMlp1dHidden, 1, rng));
  p.blocks.push_back(gaussian_block("w_out", 1, kMlp1dHidden, rng));
  return from_parts(ModelType::Mlp1d, std::move(p));
}

PotentialModel PotentialModel::ffmlp(std::uint64_t seed, std::uint64_t ff_seed, bool zero_output) {
  std::mt19937_64 rng(seed);
  ParameterSet p;
  for (const auto& s : expected_blocks(ModelType::FourierMlp2d)) {
    p.blocks.push_back(gaussian_block(s.name, s.rows, s.cols, rng));
  }
  if (zero_output) {
    for (double& v : p.block("w_out").values) v = 0.0;
  }
  return from_parts(ModelType::FourierMlp2d, std::move(p), ff_seed, sample_frequencies(ff_seed));
}

PotentialModel PotentialModel::diamond(const DiamondShape& shape) {
  return from_parts(ModelType::Diamond,
                    ParameterSet{{scalar_block("v0", shape.v0), scalar_block("a_par", shape.a_par),
                                  scalar_block("a_perp", shape.a_perp), scalar_block("skew", shape.skew)}});
}

PotentialModel PotentialModel::from_parts(ModelType type, ParameterSet params, std::uint64_t ff_seed,
                                          std::vector<double> ff_freqs) {
  const auto shapes = expected_blocks(type);
  if (params.blocks.size() != shapes.size()) {
    throw std::invalid_argument("potential '" + to_string(type) + "': wrong number of parameter blocks");
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& b = params.blocks[i];
    if (b.name != shapes[i].name || b.rows != shapes[i].rows || b.cols != shapes[i].cols ||
        b.values.size() != b.rows * b.cols) {
      throw std::invalid_argument("potential '" + to_string(type) + "': block " + std::to_string(i) +
                                  " must be '" + shapes[i].name + "' of shape " + std::to_string(shapes[i].rows) +
                                  "x" + std::to_string(shapes[i].cols));
    }
  }
  if (!params.all_finite()) throw std::invalid_argument("potential parameters must be finite");
  if (type == ModelType::Exponential) {
    require_positive(params, "v0");
    require_positive(params, "sigma");
  } else if (type == ModelType::Diamond) {
    require_positive(params, "v0");
    require_positive(params, "a_par");
    require_positive(params, "a_perp");
  }
  PotentialModel m;
  m.type_ = type;
  m.params_ = std::move(params);
  if (type == ModelType::FourierMlp2d) {
    if (ff_freqs.empty()) ff_freqs = sample_frequencies(ff_seed);
    if (ff_freqs.size() != 3 * kFourierBank) {
      throw std::invalid_argument("ffmlp: expected " + std::to_string(3 * kFourierBank) + " frequencies");
    }
    m.ff_seed_ = ff_seed;
    m.ff_freqs_ = std::move(ff_freqs);
  } else if (!ff_freqs.empty()) {
    throw std::invalid_argument("only ffmlp models carry Fourier frequencies");
  }
  return m;
}

void PotentialModel::set_params(const ParameterSet& params) {
  *this = from_parts(type_, params, ff_seed_, ff_freqs_);
}

void PotentialModel::set_flat_params(std::span<const double> values) {
  ParameterSet p = params_;
  p.assign_flat(values);
  set_params(p);
}

BoundPotential PotentialModel::bind(ad::Tape& tape, bool trainable) const {
  const auto vars = params_.bind(tape, trainable);
  return bind_vars(tape, vars);
}

BoundPotential PotentialModel::bind_vars(ad::Tape& tape, std::span<const ad::Var> params) const {
  if (params.size() != params_.blocks.size()) throw std::invalid_argument("bind_vars: one Var per block required");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].tape() != &tape || params[i].rows() != params_.blocks[i].rows ||
        params[i].cols() != params_.blocks[i].cols) {
      throw std::invalid_argument("bind_vars: block " + std::to_string(i) + " has the wrong shape or tape");
    }
  }
  BoundPotential bp;
  bp.model_ = this;
  bp.params_.assign(params.begin(), params.end());
  if (type_ == ModelType::FourierMlp2d) {
    std::vector<double> scaled(kFourierBank);
    for (std::size_t bank = 0; bank < 3; ++bank) {
      for (std::size_t i = 0; i < kFourierBank; ++i) {
        scaled[i] = 2.0 * std::numbers::pi * ff_freqs_[bank * kFourierBank + i];
      }
      bp.freqs_[bank] = tape.constant(scaled);
    }
  }
  return bp;
}

ad::Var BoundPotential::fourier_features(const InteractionVars& in) const {
  if (model_->type() != ModelType::FourierMlp2d) throw std::logic_error("fourier_features: not an ffmlp model");
  const std::array<ad::Var, 3> coords = {in.b, in.d_perp, in.d_par};
  std::array<ad::Var, 6> parts;
  for (std::size_t k = 0; k < 3; ++k) {
    const ad::Var arg = ad::mul(freqs_[k], coords[k]);
    parts[2 * k] = ad::cos(arg);
    parts[2 * k + 1] = ad::sin(arg);
  }
  return ad::concat(parts);
}

ad::Var BoundPotential::evaluate(const InteractionVars& in) const {
  const auto& p = params_;
  switch (model_->type()) {
    case ModelType::Exponential:
      return p[0] * ad::exp(ad::neg(in.b / p[1]));
    case ModelType::Mlp1d:
      return ad::softplus(ad::matvec(p[1], ad::softplus(ad::matvec(p[0], in.b))));
    case ModelType::FourierMlp2d: {
      ad::Var h = ad::softplus(ad::matvec(p[0], fourier_features(in)));
      for (std::size_t layer = 1; layer <= kFfHiddenLayers; ++layer) h = ad::softplus(ad::matvec(p[layer], h));
      return ad::softplus(ad::matvec(p[4], h));
    }
    case ModelType::Diamond: {
      const ad::Var along = ad::abs_smooth(in.d_par) / p[1];
      const ad::Var lateral = ad::abs_smooth(in.d_perp + p[3] * ad::max_smooth_zero(in.d_par)) / p[2];
      return p[0] * ad::exp(ad::neg(along + lateral));
    }
  }
  throw std::logic_error("BoundPotential::evaluate: unknown model type");
}

double PotentialModel::value(const InteractionInputs& in) const {
  ad::Tape tape;
  const BoundPotential bp = bind(tape, false);
  const InteractionVars v{tape.constant(in.b), tape.constant(in.d_perp), tape.constant(in.d_par)};
  return bp.evaluate(v).value();
}

std::vector<double> PotentialModel::fourier_features(const InteractionInputs& in) const {
  ad::Tape tape;
  const BoundPotential bp = bind(tape, false);
  const InteractionVars v{tape.constant(in.b), tape.constant(in.d_perp), tape.constant(in.d_par)};
  const auto out = bp.fourier_features(v).values();
  return {out.begin(), out.end()};
}

}  // namespace socialforce
