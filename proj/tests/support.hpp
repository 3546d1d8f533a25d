#pragma once

// Shared generators and oracles for the test suite and the acceptance binary.

#include <cmath>
#include <random>
#include <vector>

#include "sbarg/closed_form.hpp"
#include "sbarg/core_types.hpp"

namespace sbarg::test {

inline double uniform(std::mt19937_64& rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

// Random parameters satisfying mu_alpha >= 2. Preferred keeps alpha_l = 1.
inline MarketParams random_params(std::mt19937_64& rng, Contract contract, double de_frac_max = 0.3) {
    const double p = uniform(rng, 0.05, 0.6);
    const double al = contract == Contract::Preferred ? 1.0 : uniform(rng, 0.3, 1.0);
    const double ah_min = (2.0 - (1.0 - p) * al) / p;
    const double ah = std::max(ah_min, 1.0 + 1e-9) + uniform(rng, 0.0, 15.0);
    const double e = uniform(rng, 50.0, 500.0);
    const double mu = p * ah + (1 - p) * al;
    const double de = uniform(rng, 0.0, de_frac_max) * (mu - 1) * e;
    return MarketParams(e, ah, al, p, de);
}

inline double random_theta(std::mt19937_64& rng) { return uniform(rng, 0.05, 0.95); }

// Experimental parameterization values.
inline MarketParams benchmark_params(Arm arm) {
    return make_paper_scenario(arm, Institution::SI, Contract::Common).params();
}

// Closed-form outcome with the same investments and shares within tol.
inline bool matches_any(const EquilibriumSet& set, const EquilibriumOutcome& o, double tol) {
    for (const auto& c : set.outcomes) {
        if (c.investments().size() != o.investments().size()) continue;
        bool ok = true;
        for (std::size_t j = 0; j < c.shares().size(); ++j) {
            if (std::abs(c.investments()[j] - o.investments()[j]) > tol * (1 + c.investments()[j]) ||
                std::abs(c.shares()[j] - o.shares()[j]) > tol)
                ok = false;
        }
        if (ok) return true;
    }
    return false;
}

// Continuum membership: shares follow the family formula at the numeric I1.
inline bool on_continuum(const EquilibriumSet& set, const EquilibriumOutcome& o, double tol) {
    if (!set.continuum || o.investments().size() != 2) return false;
    const double e = set.continuum->scenario().params().e();
    const double i1 = o.investments()[0];
    if (std::abs(o.total_investment() - e) > tol * e) return false;
    bool inside = false;
    for (const auto& iv : set.continuum->intervals())
        if (i1 >= iv.lo - tol * e && i1 <= iv.hi + tol * e) inside = true;
    if (!inside) return false;
    const auto s = TilContinuum::shares_at(set.continuum->scenario(), i1);
    return std::abs(s[0] - o.shares()[0]) <= tol && std::abs(s[1] - o.shares()[1]) <= tol;
}

// Definitional Pearson r: covariance over the product of standard deviations,
// each accumulated in long double from the raw means.
inline double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double cxy = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cxy += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    cxy /= (n - 1);
    vx /= (n - 1);
    vy /= (n - 1);
    return static_cast<double>(cxy / std::sqrt(vx * vy));
}

} // namespace sbarg::test
