#pragma once

#include <cmath>

namespace sbarg {

// First-order forward-mode dual number. Only the operations the payoff
// kernels use are provided.
struct Dual {
    double v = 0.0;
    double d = 0.0;

    constexpr Dual() = default;
    constexpr Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}

    static constexpr Dual variable(double x) { return {x, 1.0}; }
};

constexpr Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
constexpr Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
constexpr Dual operator-(Dual a) { return {-a.v, -a.d}; }
constexpr Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
constexpr Dual operator/(Dual a, Dual b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

constexpr Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
constexpr Dual& operator-=(Dual& a, Dual b) { return a = a - b; }
constexpr Dual& operator*=(Dual& a, Dual b) { return a = a * b; }

constexpr bool operator<(Dual a, Dual b) { return a.v < b.v; }
constexpr bool operator>(Dual a, Dual b) { return a.v > b.v; }
constexpr bool operator<=(Dual a, Dual b) { return a.v <= b.v; }
constexpr bool operator>=(Dual a, Dual b) { return a.v >= b.v; }

inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }

inline Dual pow(Dual a, double k) {
    if (a.d == 0.0) return {std::pow(a.v, k), 0.0};
    return {std::pow(a.v, k), k * std::pow(a.v, k - 1.0) * a.d};
}

// Scalar helpers usable for both double and Dual.
inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

template <class T>
T smax(T a, T b) { return a < b ? b : a; }

template <class T>
T smin(T a, T b) { return b < a ? b : a; }

template <class T>
T spow(T x, double k) {
    using std::pow;
    return pow(x, k);
}

template <class T>
T slog(T x) {
    using std::log;
    return log(x);
}

} // namespace sbarg
