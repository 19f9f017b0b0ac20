#pragma once

// Risk-neutral Monte Carlo replay of solved withdrawal policies: lognormal
// account paths, per-date policy lookup with the same interpolation the
// solver used, cash-fund accrual, and surrender/withdrawal statistics.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hybridva/contract.hpp"
#include "hybridva/dp.hpp"
#include "hybridva/grid.hpp"

namespace hybridva {

namespace detail {

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Xoshiro256pp {
    uint64_t s[4];

    explicit Xoshiro256pp(uint64_t seed) {
        uint64_t z = seed;
        for (auto& w : s) w = z = splitmix64(z);
    }

    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    uint64_t next() {
        const uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        const uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // uniform on (0, 1), never exactly 0 or 1
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
};

// Acklam's rational approximation to the standard normal quantile with one
// Halley refinement; accurate to full double precision and identical on
// every platform, unlike std::normal_distribution.
inline double inverse_normal_cdf(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

// order-independent compensated accumulator
struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }

    double total() const { return sum + comp; }
};

}  // namespace detail

/// Per-path, per-period gross returns of the mixed portfolio; bit-exactly
/// reproducible from (seed, n_paths, market, spec).
struct PathBatch {
    int n_paths = 0;
    uint64_t seed = 0;
    int periods = 0;
    std::vector<double> gross;  // row-major: path p, period k at [p*periods + k]

    double at(int path, int period) const {
        return gross[static_cast<size_t>(path) * periods + period];
    }
};

inline PathBatch simulate_paths(int n, uint64_t seed, const MarketParams& market,
                                const ContractSpec& spec) {
    if (n < 1) throw std::invalid_argument("need at least one path");
    market.validate();
    spec.validate();
    const int periods = spec.periods();
    const double vol = market.effective_vol();
    const double drift = (market.risk_free - 0.5 * vol * vol) * spec.period;
    const double diffusion = vol * std::sqrt(spec.period);

    PathBatch batch;
    batch.n_paths = n;
    batch.seed = seed;
    batch.periods = periods;
    batch.gross.resize(static_cast<size_t>(n) * periods);
    for (int p = 0; p < n; ++p) {
        // per-path substream: partitioning work across threads cannot change
        // the draws
        detail::Xoshiro256pp rng(detail::splitmix64(seed) ^ static_cast<uint64_t>(p));
        for (int k = 0; k < periods; ++k) {
            const double z = detail::inverse_normal_cdf(rng.uniform());
            batch.gross[static_cast<size_t>(p) * periods + k] = std::exp(drift + diffusion * z);
        }
    }
    return batch;
}

/// Monte Carlo aggregates of one policy replay. Withdrawal-type proportions
/// are over the withdrawal opportunities of paths that never surrender.
struct ScenarioStats {
    int n_paths = 0;
    uint64_t seed = 0;
    double surrender_rate = 0.0;
    bool any_surrender = false;
    double avg_surrender_time = 0.0;  // meaningful only when any_surrender
    double avg_duration = 0.0;
    double prop_no_withdrawal = 0.0;
    double prop_below_guarantee = 0.0;
    double prop_at_guarantee = 0.0;
    double prop_excess = 0.0;
    double mc_value = 0.0;
    double mc_std_error = 0.0;
    long lookups = 0;
    long clamped_lookups = 0;
};

/// Replay the solved policy over a path batch. Dynamic policies are looked
/// up by the same account-cubic/base-linear interpolation the solver used;
/// static replay forces w = g outright. Cash-fund deposits accrue at the
/// cash rate with interest taxed at maturity. Surrender stops the account
/// path; deposits already made keep accruing.
inline ScenarioStats run_policy(const PathBatch& batch, const SolveResult& solve,
                                const ContractSpec& spec, const MarketParams& market) {
    spec.validate();
    market.validate();
    const int n_dates = spec.periods();
    if (batch.periods != n_dates) throw std::invalid_argument("path batch horizon mismatch");
    const Grid& grid = solve.grid;
    const double theta = spec.tax_rate;
    const double r = market.risk_free;

    ScenarioStats st;
    st.n_paths = batch.n_paths;
    st.seed = batch.seed;

    detail::NeumaierSum pv_sum, pv_sq_sum, duration_sum, surrender_time_sum;
    long surrendered_paths = 0;
    long count_none = 0, count_below = 0, count_at = 0, count_excess = 0;
    InterpHint hint;

    for (int p = 0; p < batch.n_paths; ++p) {
        double x = spec.premium;
        double base = spec.premium;
        bool surrendered = false;
        double surrender_time = 0.0;
        double pv = 0.0;
        long my_none = 0, my_below = 0, my_at = 0, my_excess = 0;

        for (int k = 1; k <= n_dates - 1; ++k) {
            if (surrendered) break;
            x *= batch.at(p, k - 1);
            const ContractState state{x, base};
            const double fx = post_fee_account(state, spec);
            const double g = guaranteed_amount(state, spec);
            const double wbar = std::max(fx, g);

            double w;
            if (solve.mode == Mode::Static) {
                w = g;
            } else {
                ++st.lookups;
                const long before = hint.clamped;
                // an absorbed account is represented by the grid floor, same
                // convention as the solver; only genuine overflow counts as a clamp
                const double x_query = std::max(x, grid.account.front());
                w = interp_surface(grid, solve.layer(k).policy.optimal_w, x_query, base, hint);
                if (hint.clamped != before) ++st.clamped_lookups;
                w = std::clamp(w, 0.0, wbar);
            }

            const double tol_g = 1e-6 * (1.0 + g);
            const bool excess = w > g + tol_g;
            const bool surrender_now = excess && w >= fx - 1e-6 * (1.0 + fx);
            if (surrender_now) {
                w = fx;  // full surrender, taken exactly
                surrendered = true;
                surrender_time = spec.event_time(k);
            } else if (std::abs(w - g) <= tol_g) {
                w = g;  // snap to the guarantee so no phantom cash-fund deposits arise
                ++my_at;
            } else if (w <= tol_g) {
                ++my_none;
            } else if (excess) {
                ++my_excess;
            } else {
                ++my_below;
            }

            pv += std::exp(-r * spec.event_time(k)) * running_cashflow(k, state, w, spec, market);
            const double ghat = ratcheted_base(state, spec);
            base = detail::base_update(fx, ghat, g, w);
            x = detail::account_update(fx, g, w);
        }

        if (!surrendered) {
            x *= batch.at(p, n_dates - 1);
            pv += std::exp(-r * spec.maturity) * terminal_cashflow(ContractState{x, base}, spec);
            count_none += my_none;
            count_below += my_below;
            count_at += my_at;
            count_excess += my_excess;
        } else {
            ++surrendered_paths;
            surrender_time_sum.add(surrender_time);
        }
        duration_sum.add(surrendered ? surrender_time : spec.maturity);
        pv_sum.add(pv);
        pv_sq_sum.add(pv * pv);
    }

    const double n = batch.n_paths;
    st.surrender_rate = surrendered_paths / n;
    st.any_surrender = surrendered_paths > 0;
    st.avg_surrender_time =
        st.any_surrender ? surrender_time_sum.total() / surrendered_paths : 0.0;
    st.avg_duration = duration_sum.total() / n;
    const long opportunities = count_none + count_below + count_at + count_excess;
    if (opportunities > 0) {
        st.prop_no_withdrawal = static_cast<double>(count_none) / opportunities;
        st.prop_below_guarantee = static_cast<double>(count_below) / opportunities;
        st.prop_at_guarantee = static_cast<double>(count_at) / opportunities;
        st.prop_excess = static_cast<double>(count_excess) / opportunities;
    }
    st.mc_value = pv_sum.total() / n;
    const double var = std::max(0.0, pv_sq_sum.total() / n - st.mc_value * st.mc_value);
    st.mc_std_error = std::sqrt(var / n);

    if (st.lookups > 0 && st.clamped_lookups > 0.005 * st.lookups)
        throw numerical_error("policy lookups clamped beyond budget: " +
                              std::to_string(st.clamped_lookups) + " of " +
                              std::to_string(st.lookups));
    return st;
}

/// Ratio surfaces of one withdrawal date: optimal withdrawal over the
/// guaranteed amount and over the maximum withdrawal, with 0/0 read as 0.
struct RatioSurfaces {
    int date_index = 0;
    Surface guar_ratio;
    Surface max_ratio;
};

inline RatioSurfaces policy_ratio_export(const SolveResult& solve, const ContractSpec& spec,
                                         int k) {
    if (k < 1 || k > spec.periods() - 1)
        throw std::invalid_argument("not a withdrawal date: " + std::to_string(k));
    const Grid& grid = solve.grid;
    const Surface& w = solve.layer(k).policy.optimal_w;
    RatioSurfaces out;
    out.date_index = k;
    out.guar_ratio = Surface(grid.nx(), grid.ny());
    out.max_ratio = Surface(grid.nx(), grid.ny());
    for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
            const ContractState state{grid.account[i], grid.base[j]};
            const double g = guaranteed_amount(state, spec);
            const double wbar = max_withdrawal(state, spec);
            const double wij = w.at(i, j);
            out.guar_ratio.at(i, j) = g > 0.0 ? wij / g : 0.0;
            out.max_ratio.at(i, j) = wbar > 0.0 ? wij / wbar : 0.0;
        }
    }
    return out;
}

}  // namespace hybridva
