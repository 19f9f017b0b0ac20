#pragma once

// Test-only oracles, independent of the solver code paths they check:
// closed-form lognormal expectations, an exact-transition Monte Carlo for
// the static strategy, and a brute-force deterministic dynamic program.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hybridva/contract.hpp"

namespace oracles {

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double bs_call(double spot, double strike, double r, double vol, double t) {
    const double sq = vol * std::sqrt(t);
    const double d1 = (std::log(spot / strike) + (r + 0.5 * vol * vol) * t) / sq;
    const double d2 = d1 - sq;
    return spot * norm_cdf(d1) - strike * std::exp(-r * t) * norm_cdf(d2);
}

// E[max(a*R, k)] where R is a gross lognormal return over dt under the
// risk-neutral drift.
inline double emax_lognormal(double a, double k, double r, double vol, double dt) {
    if (a <= 1e-300) return k;
    if (k <= 1e-300) return a * std::exp(r * dt);
    const double sq = vol * std::sqrt(dt);
    const double d1 = (std::log(a / k) + (r + 0.5 * vol * vol) * dt) / sq;
    const double d2 = d1 - sq;
    return a * std::exp(r * dt) * norm_cdf(d1) + k * norm_cdf(-d2);
}

// Static-strategy value by exact-transition Monte Carlo (forced w = g).
inline double static_value_mc(const hybridva::ContractSpec& c, const hybridva::MarketParams& m,
                              long n_paths, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const int n = c.periods();
    const double vol = m.effective_vol();
    const double drift = (m.risk_free - 0.5 * vol * vol) * c.period;
    const double diffusion = vol * std::sqrt(c.period);
    double acc = 0.0;
    for (long p = 0; p < n_paths; ++p) {
        double x = c.premium, base = c.premium, pv = 0.0;
        for (int k = 1; k <= n - 1; ++k) {
            x *= std::exp(drift + diffusion * normal(rng));
            const double fx = x * (1.0 - c.guarantee_fee * c.period);
            const double ghat = c.ratchet ? std::max(fx, base) : base;
            const double g = c.withdrawal_rate * ghat;
            pv += std::exp(-m.risk_free * c.event_time(k)) * (1.0 - c.tax_rate) * g;
            x = std::max(0.0, fx - g);
            base = ghat;
        }
        x *= std::exp(drift + diffusion * normal(rng));
        const double fx = x * (1.0 - c.guarantee_fee * c.period);
        const double ghat = c.ratchet ? std::max(fx, base) : base;
        pv += std::exp(-m.risk_free * c.maturity) * (1.0 - c.tax_rate) *
              std::max(fx, c.withdrawal_rate * ghat);
        acc += pv;
    }
    return acc / n_paths;
}

// Deterministic dynamic program (zero equity exposure): exhaustive search
// over the same style of withdrawal grid along the deterministic path.
inline double deterministic_optimum(const hybridva::ContractSpec& c,
                                    const hybridva::MarketParams& m, int k, double x,
                                    double base) {
    const int n = c.periods();
    const double growth = std::exp(m.risk_free * c.period);
    const double fx = x * (1.0 - c.guarantee_fee * c.period);
    const double ghat = c.ratchet ? std::max(fx, base) : base;
    const double g = c.withdrawal_rate * ghat;
    if (k == n) return (1.0 - c.tax_rate) * std::max(fx, g);
    const double wbar = std::max(fx, g);
    const double cf_factor =
        hybridva::cash_fund_pv_factor(c.maturity - c.event_time(k), c, m);
    double best = -1e300;
    for (int q = 0; q <= 81; ++q) {
        const double w = q == 81 ? g : wbar * q / 80.0;
        if (w > wbar) continue;
        double x2, g2;
        if (w <= g) {
            x2 = std::max(0.0, fx - g);
            g2 = ghat;
        } else {
            x2 = std::max(0.0, fx - w);
            g2 = ghat * (1.0 - (w - g) / (fx - g));
        }
        const double cash = (1.0 - c.tax_rate) * w + cf_factor * std::max(g - w, 0.0);
        const double cont = std::exp(-m.risk_free * c.period) *
                            deterministic_optimum(c, m, k + 1, x2 * growth, g2);
        best = std::max(best, cash + cont);
    }
    return best;
}

inline double deterministic_value(const hybridva::ContractSpec& c,
                                  const hybridva::MarketParams& m) {
    const double growth = std::exp(m.risk_free * c.period);
    return std::exp(-m.risk_free * c.period) *
           deterministic_optimum(c, m, 1, c.premium * growth, c.premium);
}

}  // namespace oracles
