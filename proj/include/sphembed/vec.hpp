#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace sphembed {

// Dense vector kernels shared by the geometry and the trainer. Plain loops;
// the compiler vectorizes them fine at -O2/-O3.

template <typename T>
inline T dot(std::span<const T> a, std::span<const T> b) {
  T s = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
inline T squared_norm(std::span<const T> a) {
  return dot<T>(a, a);
}

template <typename T>
inline T norm(std::span<const T> a) {
  return std::sqrt(squared_norm<T>(a));
}

// y += alpha * x
template <typename T>
inline void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

template <typename T>
inline void scale(std::span<T> a, T alpha) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= alpha;
}

// a /= ||a||; returns false (leaving a untouched) when ||a|| <= tiny
template <typename T>
inline bool normalize(std::span<T> a, T tiny = T(1e-12)) {
  const T n = norm<T>(a);
  if (n <= tiny) return false;
  scale<T>(a, T(1) / n);
  return true;
}

}  // namespace sphembed
