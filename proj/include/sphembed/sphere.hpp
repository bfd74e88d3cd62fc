#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "sphembed/vec.hpp"

namespace sphembed {

// Geometry of the unit hypersphere S^{p-1}: tangent projection, exponential
// map, retraction, the angular step multiplier and the composed row update.
//
// Everything here is a pure function of its inputs and safe to call from any
// number of threads.

// Gradients with norm at or below this produce no update (the multiplier
// divides by the gradient norm).
inline constexpr double kZeroGradientTol = 1e-12;

// Tolerance on the unit-norm invariant of stored points.
inline constexpr double kUnitNormTol = 1e-6;

template <typename T = double>
struct UnitVector {
  std::vector<T> coords;

  std::size_t dim() const { return coords.size(); }
  std::span<const T> span() const { return {coords.data(), coords.size()}; }
  std::span<T> span() { return {coords.data(), coords.size()}; }

  // Build from an arbitrary vector by normalizing it.
  static UnitVector normalized(std::vector<T> v) {
    if (v.size() < 2) throw std::invalid_argument("UnitVector: dimension must be >= 2");
    if (!normalize<T>({v.data(), v.size()}))
      throw std::invalid_argument("UnitVector: cannot normalize a (near-)zero vector");
    return UnitVector{std::move(v)};
  }

  // Build from a vector that must already be unit-norm.
  static UnitVector from_unit(std::vector<T> v) {
    if (v.size() < 2) throw std::invalid_argument("UnitVector: dimension must be >= 2");
    const T n = norm<T>({v.data(), v.size()});
    if (std::abs(static_cast<double>(n) - 1.0) > kUnitNormTol)
      throw std::invalid_argument("UnitVector: input is not unit-norm");
    return UnitVector{std::move(v)};
  }
};

// A vector in the tangent hyperplane at `base`: base . delta == 0.
template <typename T = double>
struct TangentVector {
  UnitVector<T> base;
  std::vector<T> delta;

  std::span<const T> delta_span() const { return {delta.data(), delta.size()}; }
};

// Intrinsic (geodesic) distance, in [0, pi]. The dot product is clamped to
// [-1, 1] before arccos so float drift near collinearity cannot produce NaN.
template <typename T>
inline T geodesic_distance(const UnitVector<T>& x, const UnitVector<T>& y) {
  const T c = std::clamp(dot<T>(x.span(), y.span()), T(-1), T(1));
  return std::acos(c);
}

// delta = (I - x x^T) g, the tangent component of g at x.
template <typename T>
inline TangentVector<T> project_to_tangent(const UnitVector<T>& x, std::span<const T> g) {
  if (g.size() != x.dim()) throw std::invalid_argument("project_to_tangent: dimension mismatch");
  const T xg = dot<T>(x.span(), g);
  TangentVector<T> z{x, std::vector<T>(g.begin(), g.end())};
  axpy<T>(-xg, x.span(), {z.delta.data(), z.delta.size()});
  return z;
}

// Exact geodesic motion: cos(||z||) base + sin(||z||) z/||z||.
// ||delta|| below 1e-12 takes the zero branch and returns the base point.
template <typename T>
inline UnitVector<T> exp_map(const TangentVector<T>& z) {
  const T n = norm<T>(z.delta_span());
  if (n < T(kZeroGradientTol)) return z.base;
  UnitVector<T> out{std::vector<T>(z.base.coords)};
  scale<T>(out.span(), std::cos(n));
  axpy<T>(std::sin(n) / n, z.delta_span(), out.span());
  return out;
}

// First-order substitute for exp_map: add in the ambient space, project back
// onto the sphere. For tangent delta, ||base + delta||^2 = 1 + ||delta||^2,
// so the normalization is always well defined.
template <typename T>
inline UnitVector<T> retract(const TangentVector<T>& z) {
  UnitVector<T> out{std::vector<T>(z.base.coords)};
  axpy<T>(T(1), z.delta_span(), out.span());
  if (!normalize<T>(out.span()))
    throw std::domain_error("retract: degenerate point, ||base + delta|| ~ 0");
  return out;
}

// Scalar that rescales the Riemannian gradient by angular distance.
//   positive rows:   1 + x.g/||g||  (cosine distance between x and the
//                    descent direction -g; in [0, 2])
//   negative rows:   x.g/||g||      (negated cosine similarity between x and
//                    -g; zero once the row is orthogonal, so randomly drawn
//                    negatives are not driven to the antipode; in [-1, 1])
// ||g|| <= 1e-12 returns 0: no update.
template <typename T>
inline T angular_multiplier(std::span<const T> x, std::span<const T> g, bool negative_sample) {
  const T gn = norm<T>(g);
  if (gn <= T(kZeroGradientTol)) return T(0);
  const T c = dot<T>(x, g) / gn;
  return negative_sample ? c : T(1) + c;
}

template <typename T>
inline T angular_multiplier(const UnitVector<T>& x, std::span<const T> g, bool negative_sample) {
  return angular_multiplier<T>(x.span(), g, negative_sample);
}

// In-place single-row update used by the training hot loop:
//   x <- retract_x( -eta * multiplier * (I - x x^T) g )
// Expanding the projection, the new point before normalization is
//   a*x + b*g  with  b = -eta*multiplier  and  a = 1 - b*(x.g),
// and its squared norm is a^2 x.x + 2ab x.g + b^2 g.g, so the whole update is
// two passes over the row with no scratch buffer.
template <typename T>
inline void update_row(std::span<T> x, std::span<const T> g, T eta, bool negative_sample) {
  T xx = T(0), xg = T(0), gg = T(0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx += x[i] * x[i];
    xg += x[i] * g[i];
    gg += g[i] * g[i];
  }
  const T gn = std::sqrt(gg);
  if (gn <= T(kZeroGradientTol)) return;
  const T c = xg / gn;
  const T mult = negative_sample ? c : T(1) + c;
  if (mult == T(0)) return;
  const T b = -eta * mult;
  const T a = T(1) - b * xg;
  const T norm_sq = a * a * xx + T(2) * a * b * xg + b * b * gg;
  if (!(norm_sq > T(kZeroGradientTol) * T(kZeroGradientTol)))
    throw std::domain_error("update_row: degenerate retraction");
  const T inv = T(1) / std::sqrt(norm_sq);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (a * x[i] + b * g[i]) * inv;
}

// Value-typed composition of the three ops above.
template <typename T>
inline UnitVector<T> update_point(const UnitVector<T>& x, std::span<const T> g, T eta,
                                  bool negative_sample) {
  if (!(eta > T(0))) throw std::invalid_argument("update_point: eta must be > 0");
  UnitVector<T> out{std::vector<T>(x.coords)};
  update_row<T>(out.span(), g, eta, negative_sample);
  return out;
}

// Restores the unit-norm invariant of a parameter row after many float
// updates have accumulated drift.
template <typename T>
inline void renormalize_row(std::span<T> x) {
  normalize<T>(x);
}

}  // namespace sphembed
