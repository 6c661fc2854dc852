#pragma once

#include <cmath>

#include "socialforce/autodiff.hpp"

namespace socialforce {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
inline Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
inline Vec2 operator*(Vec2 a, double c) { return {c * a.x, c * a.y}; }
inline Vec2 operator/(Vec2 a, double c) { return {a.x / c, a.y / c}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
/// Counter-clockwise quarter turn.
inline Vec2 rot90(Vec2 a) { return {-a.y, a.x}; }

/// A 2-vector of scalar tape nodes.
struct VarVec2 {
  ad::Var x;
  ad::Var y;

  [[nodiscard]] Vec2 value() const { return {x.value(), y.value()}; }
};

inline VarVec2 operator+(VarVec2 a, VarVec2 b) { return {a.x + b.x, a.y + b.y}; }
inline VarVec2 operator-(VarVec2 a, VarVec2 b) { return {a.x - b.x, a.y - b.y}; }
inline VarVec2 operator*(double c, VarVec2 a) { return {c * a.x, c * a.y}; }
inline VarVec2 operator*(ad::Var c, VarVec2 a) { return {c * a.x, c * a.y}; }
inline VarVec2 operator+(VarVec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline ad::Var dot(VarVec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline ad::Var dot(VarVec2 a, VarVec2 b) { return a.x * b.x + a.y * b.y; }

inline VarVec2 constant(ad::Tape& tape, Vec2 v) { return {tape.constant(v.x), tape.constant(v.y)}; }

/// sqrt(|a|² + eps²): a norm that stays differentiable at the origin.
inline ad::Var smooth_norm(VarVec2 a, double eps) {
  return ad::sqrt(ad::shift(ad::square(a.x) + ad::square(a.y), eps * eps));
}

}  // namespace socialforce
