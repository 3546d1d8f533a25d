#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace sbarg {

struct ScalarOptimum {
    double x;
    double fx;
    double lo; // final bracket
    double hi;
};

// Golden-section search for a maximum of f on [a, b]. Stops when the bracket
// is narrower than xtol or after max_iter steps.
template <class F>
ScalarOptimum golden_section_max(F&& f, double a, double b, double xtol, int max_iter = 200) {
    constexpr double invphi = 0.6180339887498948482;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        if (fc >= fd) { // ties keep the left point
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? ScalarOptimum{c, fc, a, b} : ScalarOptimum{d, fd, a, b};
}

template <class F>
ScalarOptimum golden_section_min(F&& f, double a, double b, double xtol, int max_iter = 200) {
    auto r = golden_section_max([&](double x) { return -f(x); }, a, b, xtol, max_iter);
    r.fx = -r.fx;
    return r;
}

// Smallest x in [a, b] with pred(x) true, given pred(a) false, pred(b) true
// and pred monotone.
template <class P>
double bisect_first_true(P&& pred, double a, double b, int max_iter = 200) {
    for (int it = 0; it < max_iter; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        (pred(m) ? b : a) = m;
    }
    return b;
}

// Largest x in [a, b] with pred(x) true, given pred(a) true, pred(b) false.
template <class P>
double bisect_last_true(P&& pred, double a, double b, int max_iter = 200) {
    for (int it = 0; it < max_iter; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        (pred(m) ? a : b) = m;
    }
    return a;
}

// Root of a decreasing derivative inside [a, b] where df(a) > 0 > df(b).
template <class D>
double bisect_sign_change(D&& df, double a, double b, int max_iter = 200) {
    for (int it = 0; it < max_iter; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double g = df(m);
        if (g == 0.0) return m;
        (g > 0 ? a : b) = m;
    }
    return 0.5 * (a + b);
}

} // namespace sbarg
