#pragma once

#include "cpinfer/error.hpp"

namespace cpinfer {

/// Polynomial of degree <= 2 in the test-statistic coordinate phi:
/// c0 + c1 * phi + c2 * phi^2.
struct Poly2 {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  constexpr Poly2() = default;
  constexpr Poly2(double constant) : c0(constant) {}  // NOLINT(google-explicit-constructor)
  constexpr Poly2(double a0, double a1, double a2 = 0.0) : c0(a0), c1(a1), c2(a2) {}

  constexpr double at(double phi) const { return c0 + phi * (c1 + phi * c2); }
  constexpr bool is_constant() const { return c1 == 0.0 && c2 == 0.0; }
  constexpr bool is_affine() const { return c2 == 0.0; }

  constexpr Poly2& operator+=(const Poly2& o) {
    c0 += o.c0;
    c1 += o.c1;
    c2 += o.c2;
    return *this;
  }
  constexpr Poly2& operator-=(const Poly2& o) {
    c0 -= o.c0;
    c1 -= o.c1;
    c2 -= o.c2;
    return *this;
  }
};

constexpr Poly2 operator+(Poly2 a, const Poly2& b) { return a += b; }
constexpr Poly2 operator-(Poly2 a, const Poly2& b) { return a -= b; }
constexpr Poly2 operator-(const Poly2& a) { return {-a.c0, -a.c1, -a.c2}; }
constexpr Poly2 operator*(double k, const Poly2& a) { return {k * a.c0, k * a.c1, k * a.c2}; }
constexpr Poly2 operator*(const Poly2& a, double k) { return k * a; }
constexpr Poly2 operator/(const Poly2& a, double k) { return {a.c0 / k, a.c1 / k, a.c2 / k}; }

inline Poly2 operator*(const Poly2& a, const Poly2& b) {
  if ((a.c2 != 0.0 && (b.c1 != 0.0 || b.c2 != 0.0)) || (b.c2 != 0.0 && a.c1 != 0.0)) {
    throw InternalError("polynomial product exceeds degree 2");
  }
  return {a.c0 * b.c0, a.c0 * b.c1 + a.c1 * b.c0, a.c0 * b.c2 + a.c1 * b.c1 + a.c2 * b.c0};
}

inline double square(double x) { return x * x; }
inline Poly2 square(const Poly2& a) { return a * a; }

}  // namespace cpinfer
