#include "socialforce/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "socialforce/log.hpp"

namespace socialforce {

namespace {

// tanh(x) == 1 in double precision beyond this.
constexpr double kSlowingSaturation = 20.0;

constexpr double kNormEps = 1e-9;
constexpr double kMinRadicand = 1e-12;
constexpr double kArrivalDistance = 1e-9;

std::string describe_step(const std::string& what, std::size_t step, std::size_t ped) {
  std::ostringstream msg;
  msg << what << " (step " << step;
  if (ped != SimulationError::npos) msg << ", pedestrian " << ped;
  msg << ")";
  return msg.str();
}

bool finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

// Force assembly on a tape. Every quantity that depends on positions or
// velocities is a tape node, so in differentiable mode the whole step is
// part of the recorded graph; in value mode the caller rewinds after reading.
class Engine {
 public:
  Engine(ad::Tape& tape, const BoundPotential& potential, std::span<const PedestrianState> peds,
         std::span<const BoundarySegment> walls, const SimConfig& cfg, bool differentiable, RolloutStats& stats)
      : tape_(tape),
        potential_(potential),
        peds_(peds),
        walls_(walls),
        cfg_(cfg),
        differentiable_(differentiable),
        stats_(stats) {
    if (stats_.arrived.size() != peds_.size()) stats_.arrived.assign(peds_.size(), false);
  }

  /// Taped turn_heading(), see dynamics.hpp.
  VarVec2 turn(VarVec2 e, VarVec2 v) const {
    const double k = cfg_.dt / kHeadingTurnLength;
    const ad::Var along = e.x * v.x + e.y * v.y;
    const VarVec2 w{e.x + k * (v.x - along * e.x), e.y + k * (v.y - along * e.y)};
    const ad::Var n = ad::sqrt(ad::square(w.x) + ad::square(w.y));
    return {w.x / n, w.y / n};
  }

  VarVec2 goal_term(std::size_t i, VarVec2 x, VarVec2 v) {
    const PedestrianState& p = peds_[i];
    const Vec2 gap = p.goal - x.value();
    if (norm(gap) < kArrivalDistance) {
      stats_.arrived[i] = true;
      return constant(tape_, Vec2{});
    }
    const VarVec2 diff{ad::neg(ad::shift(x.x, -p.goal.x)), ad::neg(ad::shift(x.y, -p.goal.y))};
    const double inv_tau = 1.0 / p.tau;
    const double r = cfg_.goal_slowing_radius;
    const ad::Var dist = ad::sqrt(ad::square(diff.x) + ad::square(diff.y));
    ad::Var k = (p.preferred_speed * inv_tau) / dist;
    if (r > 0.0 && norm(gap) < kSlowingSaturation * r) {
      // tanh(dist / r) = 1 - 2 / (exp(2 dist / r) + 1)
      const ad::Var t = 1.0 - 2.0 / ad::shift(ad::exp((2.0 / r) * dist), 1.0);
      k = k * t;
    }
    return {k * diff.x - inv_tau * v.x, k * diff.y - inv_tau * v.y};
  }

  /// e: alpha's heading; view: alpha's unit walking direction (field of view
  /// only); sv: stride * v_beta.
  VarVec2 pair_term(std::size_t a, std::size_t b, VarVec2 xa, VarVec2 xb, VarVec2 e, Vec2 view, VarVec2 sv) {
    ad::Var dx = xa.x - xb.x;
    if (cfg_.periodic_x) {
      const double length = cfg_.x_max - cfg_.x_min;
      const double raw = dx.value();
      if (raw > 0.5 * length) dx = ad::shift(dx, -length);
      if (raw < -0.5 * length) dx = ad::shift(dx, length);
    }
    const ad::Var dy = xa.y - xb.y;
    const VarVec2 d{ad::watch(dx), ad::watch(dy)};

    InteractionVars in;
    const ad::Var n1 = smooth_norm(d, kNormEps);
    const ad::Var n2 = smooth_norm(d - sv, kNormEps);
    const ad::Var radicand = ad::square(n1 + n2) - (ad::square(sv.x) + ad::square(sv.y));
    if (radicand.value() <= kMinRadicand) {
      ++stats_.degenerate_ellipses;
      log::debug("reduced distance: degenerate ellipse clamped to b = 0");
      in.b = tape_.constant(0.0);
    } else {
      in.b = 0.5 * ad::sqrt(radicand);
    }
    if (potential_.model().two_dimensional()) {
      in.d_par = ad::neg(d.x * e.x + d.y * e.y);
      in.d_perp = ad::neg(d.y * e.x - d.x * e.y);
    }
    const ad::Var V = potential_.evaluate(in);
    const ad::Var wrt[2] = {d.x, d.y};
    VarVec2 f;
    if (differentiable_) {
      const auto g = tape_.gradient_graph(V, wrt);
      f = {ad::neg(g[0]), ad::neg(g[1])};
    } else {
      const auto g = tape_.gradient(V, wrt);
      f = constant(tape_, Vec2{-g.scalar(0), -g.scalar(1)});
    }

    const Vec2 fv = f.value();
    if (!finite(fv)) throw SimulationError(describe_step("non-finite repulsion", step_, a), step_, a);
    const double mag = norm(fv);
    if (mag > cfg_.force_cap) {
      ++stats_.force_caps;
      log::debug(describe_step("repulsion capped", step_, a) + " against pedestrian " + std::to_string(b));
      const ad::Var n = ad::sqrt(ad::square(f.x) + ad::square(f.y));
      const ad::Var k = cfg_.force_cap / n;
      f = {k * f.x, k * f.y};
    }
    if (cfg_.fov_enabled) {
      const double w = field_of_view_weight(view, f.value(), cfg_);
      if (w != 1.0) f = {w * f.x, w * f.y};
    }
    return f;
  }

  VarVec2 wall_term(std::size_t i, VarVec2 x) {
    const Vec2 p = x.value();
    const double k0 = cfg_.wall_u0 / cfg_.wall_r;
    VarVec2 total = constant(tape_, Vec2{});
    for (const auto& w : walls_) {
      const Vec2 ab = w.b - w.a;
      const double t = std::clamp(dot(p - w.a, ab) / dot(ab, ab), 0.0, 1.0);
      const Vec2 c = w.a + t * ab;
      const double r0 = norm(p - c);
      if (r0 < kArrivalDistance) {
        const Vec2 n = rot90(ab) / norm(ab);
        total = total + constant(tape_, std::min(k0, cfg_.force_cap) * n);
        ++stats_.force_caps;
        log::debug(describe_step("pedestrian on a wall", step_, i));
        continue;
      }
      const VarVec2 r{ad::shift(x.x, -c.x), ad::shift(x.y, -c.y)};
      const ad::Var dist = ad::sqrt(ad::square(r.x) + ad::square(r.y));
      ad::Var mag = k0 * ad::exp(ad::neg(dist / cfg_.wall_r));
      if (mag.value() > cfg_.force_cap) {
        ++stats_.force_caps;
        mag = tape_.constant(cfg_.force_cap);
      }
      const ad::Var k = mag / dist;
      total = total + VarVec2{k * r.x, k * r.y};
    }
    return total;
  }

  /// e: the heading states.
  std::vector<VarVec2> forces(std::span<const VarVec2> x, std::span<const VarVec2> v, std::span<const VarVec2> e,
                              std::size_t step) {
    step_ = step;
    const std::size_t n = peds_.size();
    std::vector<Vec2> view(n);
    std::vector<VarVec2> sv(n);
    for (std::size_t i = 0; i < n; ++i) {
      view[i] = walking_direction({x[i].value(), v[i].value(), peds_[i].goal});
      sv[i] = cfg_.b_stride * v[i];
    }
    std::vector<VarVec2> f(n);
    for (std::size_t a = 0; a < n; ++a) {
      VarVec2 total = goal_term(a, x[a], v[a]);
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        total = total + pair_term(a, b, x[a], x[b], e[a], view[a], sv[b]);
      }
      if (!walls_.empty()) total = total + wall_term(a, x[a]);
      if (!finite(total.value())) throw SimulationError(describe_step("non-finite force", step, a), step, a);
      f[a] = total;
    }
    return f;
  }

  /// One leapfrog step from (x, v, e) with forces f at (x, v, e); returns the
  /// new state and the forces at the new positions and half-step velocities.
  void step(std::vector<VarVec2>& x, std::vector<VarVec2>& v, std::vector<VarVec2>& e, std::vector<VarVec2>& f,
            std::size_t step_index) {
    const double h = 0.5 * cfg_.dt;
    const std::size_t n = peds_.size();
    std::vector<VarVec2> vh(n);
    for (std::size_t i = 0; i < n; ++i) {
      vh[i] = v[i] + h * f[i];
      x[i] = x[i] + cfg_.dt * vh[i];
      if (cfg_.periodic_x) {
        const double length = cfg_.x_max - cfg_.x_min;
        const double xv = x[i].x.value();
        if (xv >= cfg_.x_max) x[i].x = ad::shift(x[i].x, -length);
        if (xv < cfg_.x_min) x[i].x = ad::shift(x[i].x, length);
      }
    }
    f = forces(x, vh, e, step_index);
    for (std::size_t i = 0; i < n; ++i) {
      VarVec2 vn = vh[i] + h * f[i];
      const double v_max = cfg_.v_max_factor * peds_[i].preferred_speed;
      const double speed = norm(vn.value());
      if (speed > v_max) {
        ++stats_.speed_clamps;
        const ad::Var s = ad::sqrt(ad::square(vn.x) + ad::square(vn.y));
        const ad::Var k = v_max / s;
        vn = {k * vn.x, k * vn.y};
      }
      stats_.max_speed_ratio = std::max(stats_.max_speed_ratio, norm(vn.value()) / v_max);
      v[i] = vn;
      e[i] = turn(e[i], vn);
    }
  }

 private:
  ad::Tape& tape_;
  const BoundPotential& potential_;
  std::span<const PedestrianState> peds_;
  std::span<const BoundarySegment> walls_;
  const SimConfig& cfg_;
  bool differentiable_;
  RolloutStats& stats_;
  std::size_t step_ = 0;
};

std::vector<VarVec2> state_constants(ad::Tape& tape, std::span<const Vec2> values) {
  std::vector<VarVec2> out;
  out.reserve(values.size());
  for (Vec2 v : values) out.push_back(constant(tape, v));
  return out;
}

std::vector<Vec2> values_of(std::span<const VarVec2> vars) {
  std::vector<Vec2> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(v.value());
  return out;
}

void validate_initial(std::span<const PedestrianState> initial) {
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const auto& p = initial[i];
    if (!(p.preferred_speed > 0.0) || !(p.tau > 0.0)) {
      throw std::invalid_argument("pedestrian " + std::to_string(i) + ": preferred speed and tau must be positive");
    }
    if (!finite(p.position) || !finite(p.velocity) || !finite(p.goal)) {
      throw std::invalid_argument("pedestrian " + std::to_string(i) + ": non-finite state");
    }
  }
}

template <typename Fn>
auto with_step_context(std::size_t step, Fn&& fn) {
  try {
    return fn();
  } catch (const ad::DomainError& e) {
    throw SimulationError(describe_step(e.what(), step, SimulationError::npos), step);
  }
}

}  // namespace

SimulationError::SimulationError(const std::string& what, std::size_t step, std::size_t pedestrian)
    : std::runtime_error(what), step_(step), pedestrian_(pedestrian) {}

SimConfig SimConfig::inference() {
  SimConfig c;
  c.fov_enabled = false;
  c.goal_slowing_radius = 0.5;
  return c;
}

void SimConfig::validate() const {
  if (!(goal_slowing_radius >= 0.0)) throw std::invalid_argument("SimConfig: goal_slowing_radius must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be positive");
  if (oversampling < 1) throw std::invalid_argument("SimConfig: oversampling must be >= 1");
  if (!(v_max_factor > 0.0)) throw std::invalid_argument("SimConfig: v_max_factor must be positive");
  if (!(b_stride >= 0.0)) throw std::invalid_argument("SimConfig: b_stride must be >= 0");
  if (!(wall_r > 0.0)) throw std::invalid_argument("SimConfig: wall_r must be positive");
  if (!(force_cap > 0.0)) throw std::invalid_argument("SimConfig: force_cap must be positive");
  if (!(fov_degrees > 0.0 && fov_degrees <= 360.0)) throw std::invalid_argument("SimConfig: fov_degrees in (0, 360]");
  if (periodic_x && !(x_max > x_min)) throw std::invalid_argument("SimConfig: periodic range is empty");
}

double reduced_distance_b(Vec2 d, double speed_beta, Vec2 e_beta, double stride) {
  if (std::abs(norm(e_beta) - 1.0) > 1e-9) throw std::invalid_argument("reduced_distance_b: e_beta must be a unit vector");
  if (!(stride >= 0.0)) throw std::invalid_argument("reduced_distance_b: stride must be >= 0");
  const double s = speed_beta * stride;
  const double sum = norm(d) + norm(d - s * e_beta);
  const double radicand = sum * sum - s * s;
  if (radicand <= 0.0) {
    log::debug("reduced distance: negative radicand clamped at 0");
    return 0.0;
  }
  return 0.5 * std::sqrt(radicand);
}

FrameDistances decompose_distance(Vec2 d, Vec2 e) {
  if (std::abs(norm(e) - 1.0) > 1e-9) throw std::invalid_argument("decompose_distance: e must be a unit vector");
  return {dot(d, e), dot(d, rot90(e))};
}

Vec2 walking_direction(const PedestrianState& s) {
  const double speed = norm(s.velocity);
  if (speed >= kStationarySpeed) return s.velocity / speed;
  const Vec2 gap = s.goal - s.position;
  const double dist = norm(gap);
  if (dist < kArrivalDistance) return {1.0, 0.0};
  return gap / dist;
}

Vec2 turn_heading(Vec2 e, Vec2 v, double dt) {
  if (std::abs(norm(e) - 1.0) > 1e-9) throw std::invalid_argument("turn_heading: e must be a unit vector");
  const Vec2 w = e + (dt / kHeadingTurnLength) * (v - dot(v, e) * e);
  return w / norm(w);
}

InteractionInputs interaction_inputs(const PedestrianState& alpha, const PedestrianState& beta, double stride) {
  const Vec2 d = alpha.position - beta.position;
  const double speed = norm(beta.velocity);
  const Vec2 e_beta = speed > 0.0 ? beta.velocity / speed : Vec2{1.0, 0.0};
  const Vec2 e = walking_direction(alpha);
  const Vec2 rel = beta.position - alpha.position;
  return {reduced_distance_b(d, speed, e_beta, stride), dot(rel, rot90(e)), dot(rel, e)};
}

Vec2 goal_force(const PedestrianState& s, bool* arrived, double slowing_radius) {
  const Vec2 gap = s.goal - s.position;
  const double dist = norm(gap);
  if (dist < kArrivalDistance) {
    if (arrived) *arrived = true;
    return {};
  }
  if (arrived) *arrived = false;
  const double slow = slowing_radius > 0.0 && dist < kSlowingSaturation * slowing_radius
                          ? std::tanh(dist / slowing_radius)
                          : 1.0;
  return (s.preferred_speed * slow * gap / dist - s.velocity) / s.tau;
}

double field_of_view_weight(Vec2 e, Vec2 f, const SimConfig& cfg) {
  const double cos_half = std::cos(0.5 * cfg.fov_degrees * std::numbers::pi / 180.0);
  return dot(e, -f) > norm(f) * cos_half ? 1.0 : cfg.fov_out_weight;
}

Vec2 repulsion_force(const PedestrianState& alpha, const PedestrianState& beta, const PotentialModel& model,
                     const SimConfig& cfg) {
  ad::Tape tape;
  const BoundPotential bp = model.bind(tape, false);
  const PedestrianState peds[2] = {alpha, beta};
  RolloutStats stats;
  Engine engine(tape, bp, peds, {}, cfg, false, stats);
  const VarVec2 xa = constant(tape, alpha.position);
  const VarVec2 xb = constant(tape, beta.position);
  const Vec2 e = walking_direction(alpha);
  const VarVec2 sv = cfg.b_stride * constant(tape, beta.velocity);
  return engine.pair_term(0, 1, xa, xb, constant(tape, e), e, sv).value();
}

Vec2 boundary_force(const PedestrianState& s, std::span<const BoundarySegment> walls, const SimConfig& cfg) {
  if (walls.empty()) return {};
  ad::Tape tape;
  const PotentialModel dummy = PotentialModel::exponential();
  const BoundPotential bp = dummy.bind(tape, false);
  RolloutStats stats;
  Engine engine(tape, bp, std::span<const PedestrianState>(&s, 1), walls, cfg, false, stats);
  return engine.wall_term(0, constant(tape, s.position)).value();
}

void leapfrog_kick_drift(std::span<PedestrianState> states, std::span<const Vec2> forces, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("leapfrog: dt must be positive");
  if (states.size() != forces.size()) throw std::invalid_argument("leapfrog: one force per pedestrian");
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!finite(forces[i])) throw SimulationError("leapfrog: non-finite force on pedestrian " + std::to_string(i), 0, i);
    states[i].velocity += 0.5 * dt * forces[i];
    states[i].position += dt * states[i].velocity;
  }
}

void leapfrog_kick(std::span<PedestrianState> states, std::span<const Vec2> forces, double dt, double v_max_factor) {
  if (!(dt > 0.0)) throw std::invalid_argument("leapfrog: dt must be positive");
  if (states.size() != forces.size()) throw std::invalid_argument("leapfrog: one force per pedestrian");
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!finite(forces[i])) throw SimulationError("leapfrog: non-finite force on pedestrian " + std::to_string(i), 0, i);
    auto& s = states[i];
    s.velocity += 0.5 * dt * forces[i];
    const double v_max = v_max_factor * s.preferred_speed;
    const double speed = norm(s.velocity);
    if (speed > v_max) s.velocity = (v_max / speed) * s.velocity;
  }
}

RolloutResult rollout(std::span<const PedestrianState> initial, std::span<const BoundarySegment> walls,
                      const PotentialModel& model, const SimConfig& cfg, std::size_t n_obs) {
  cfg.validate();
  validate_initial(initial);
  if (n_obs < 1) throw std::invalid_argument("rollout: n_obs must be >= 1");
  const std::size_t n = initial.size();
  RolloutResult result;
  result.positions.assign(n, {});
  result.velocities.assign(n, {});

  std::vector<Vec2> x(n), v(n), e(n), f(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = initial[i].position;
    v[i] = initial[i].velocity;
    e[i] = walking_direction(initial[i]);
    result.positions[i].reserve(n_obs);
    result.velocities[i].reserve(n_obs);
    result.positions[i].push_back(x[i]);
    result.velocities[i].push_back(v[i]);
  }

  ad::Tape tape;
  const BoundPotential bp = model.bind(tape, false);
  const ad::Tape::Mark base = tape.mark();
  Engine engine(tape, bp, initial, walls, cfg, false, result.stats);

  with_step_context(0, [&] {
    const auto fx = engine.forces(state_constants(tape, x), state_constants(tape, v), state_constants(tape, e), 0);
    f = values_of(fx);
    return 0;
  });
  tape.rewind(base);

  const std::size_t n_steps = (n_obs - 1) * cfg.oversampling;
  for (std::size_t s = 1; s <= n_steps; ++s) {
    with_step_context(s, [&] {
      auto xs = state_constants(tape, x);
      auto vs = state_constants(tape, v);
      auto es = state_constants(tape, e);
      auto fs = state_constants(tape, f);
      engine.step(xs, vs, es, fs, s);
      x = values_of(xs);
      v = values_of(vs);
      e = values_of(es);
      f = values_of(fs);
      return 0;
    });
    tape.rewind(base);
    if (s % cfg.oversampling == 0) {
      for (std::size_t i = 0; i < n; ++i) {
        result.positions[i].push_back(x[i]);
        result.velocities[i].push_back(v[i]);
      }
    }
  }
  result.stats.steps = n_steps;
  result.final_states.assign(initial.begin(), initial.end());
  for (std::size_t i = 0; i < n; ++i) {
    result.final_states[i].position = x[i];
    result.final_states[i].velocity = v[i];
  }
  return result;
}

TapedRollout rollout_taped(ad::Tape& tape, const BoundPotential& potential, std::span<const PedestrianState> initial,
                           std::span<const BoundarySegment> walls, const SimConfig& cfg, std::size_t n_obs) {
  cfg.validate();
  validate_initial(initial);
  if (n_obs < 1) throw std::invalid_argument("rollout: n_obs must be >= 1");
  const std::size_t n = initial.size();
  TapedRollout result;
  result.positions.assign(n, {});

  std::vector<Vec2> x0(n), v0(n), e0(n);
  for (std::size_t i = 0; i < n; ++i) {
    x0[i] = initial[i].position;
    v0[i] = initial[i].velocity;
    e0[i] = walking_direction(initial[i]);
  }
  auto x = state_constants(tape, x0);
  auto v = state_constants(tape, v0);
  auto e = state_constants(tape, e0);
  for (std::size_t i = 0; i < n; ++i) result.positions[i].push_back(x[i]);

  Engine engine(tape, potential, initial, walls, cfg, true, result.stats);
  auto f = with_step_context(0, [&] { return engine.forces(x, v, e, 0); });
  const std::size_t n_steps = (n_obs - 1) * cfg.oversampling;
  for (std::size_t s = 1; s <= n_steps; ++s) {
    with_step_context(s, [&] {
      engine.step(x, v, e, f, s);
      return 0;
    });
    if (s % cfg.oversampling == 0) {
      for (std::size_t i = 0; i < n; ++i) result.positions[i].push_back(x[i]);
    }
  }
  result.stats.steps = n_steps;
  return result;
}

}  // namespace socialforce
