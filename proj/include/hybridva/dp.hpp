#pragma once

// Backward induction over withdrawal dates. Each date is handled in two
// stages: step_period carries the pre-withdrawal surface at t_{k+1} back to
// the post-withdrawal surface at t_k, and apply_jump resolves the
// withdrawal decision by maximizing running cash flow plus interpolated
// continuation value over a discrete withdrawal grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hybridva/contract.hpp"
#include "hybridva/grid.hpp"
#include "hybridva/pde.hpp"

namespace hybridva {

enum class Mode { Static, Dynamic };

inline const char* to_string(Mode m) { return m == Mode::Static ? "static" : "dynamic"; }

/// Optimal withdrawal amount per node for one withdrawal date.
struct PolicySurface {
    int date_index = 0;
    Surface optimal_w;
};

/// Everything produced at one withdrawal date t_k.
struct DateLayer {
    int date_index = 0;
    Surface pre_value;   // V at t_k^- (after the withdrawal maximization)
    Surface post_value;  // V at t_k^+ (continuation from the PDE solve)
    PolicySurface policy;
};

struct SolveResult {
    Mode mode = Mode::Dynamic;
    Grid grid;
    double value_at_inception = 0.0;
    Surface inception_value;          // continuation surface at t_0
    Surface terminal_value;           // payoff surface at t_N^-
    std::vector<DateLayer> dates;     // entry k-1 belongs to date t_k, k = 1..N-1
    long clamp_count = 0;             // base-axis interpolation clamps over all jumps

    const DateLayer& layer(int k) const { return dates.at(static_cast<size_t>(k) - 1); }
};

/// Terminal condition: the payoff surface at t_N^-.
inline Surface terminal_surface(const ContractSpec& spec, const Grid& grid) {
    Surface v(grid.nx(), grid.ny());
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i)
            v.at(i, j) = terminal_cashflow(ContractState{grid.account[i], grid.base[j]}, spec);
    return v;
}

namespace detail {

// Withdrawal candidates: uniformly spaced points on [0, wbar] plus the
// guaranteed amount, kept sorted and deduplicated.
constexpr int kWithdrawalPoints = 81;

struct WithdrawalGrid {
    std::vector<double> w;
    int count = 0;

    void build(double g, double wbar, int points = kWithdrawalPoints) {
        w.resize(static_cast<size_t>(points) + 1);
        count = 0;
        bool inserted = g <= 0.0 || g >= wbar;  // endpoints are already present
        for (int q = 0; q < points; ++q) {
            const double wq = wbar * static_cast<double>(q) / (points - 1);
            if (!inserted && g < wq) {
                w[count++] = g;
                inserted = true;
            } else if (!inserted && g == wq) {
                inserted = true;
            }
            w[count++] = wq;
        }
        if (!inserted) w[count++] = g;
    }
};

}  // namespace detail

struct JumpOutput {
    Surface pre_value;
    PolicySurface policy;
    long clamps = 0;
};

/// Withdrawal-date jump condition. Dynamic mode maximizes running cash flow
/// plus interpolated continuation over the withdrawal grid; ties within
/// 1e-9*(1+|V|) of the maximum resolve to the smallest withdrawal. Static
/// mode forces w = g. Post-withdrawal accounts below the grid floor are
/// looked up at the floor; base-axis clamps are counted.
inline JumpOutput apply_jump(const Surface& post_value, int k, const ContractSpec& spec,
                             const MarketParams& market, const Grid& grid, Mode mode,
                             int w_points = detail::kWithdrawalPoints) {
    if (!post_value.same_shape(grid)) throw std::invalid_argument("surface/grid shape mismatch");
    const int nx = grid.nx();
    const int ny = grid.ny();
    const double x_floor = grid.account.front();
    const double theta = spec.tax_rate;
    const double beta = spec.withdrawal_rate;
    const double cf_factor =
        cash_fund_pv_factor(spec.maturity - spec.event_time(k), spec, market);

    JumpOutput out;
    out.pre_value = Surface(nx, ny);
    out.policy.date_index = k;
    out.policy.optimal_w = Surface(nx, ny);

    InterpHint hint;
    detail::WithdrawalGrid wgrid;
    std::vector<double> val(static_cast<size_t>(w_points) + 1);

    for (int j = 0; j < ny; ++j) {
        const double gamma = grid.base[j];
        for (int i = 0; i < nx; ++i) {
            const double fx = fee_adjust(grid.account[i], spec.guarantee_fee, spec.period);
            const double ghat = spec.ratchet ? std::max(fx, gamma) : gamma;
            const double g = beta * ghat;
            const double wbar = std::max(fx, g);

            // withdrawing w <= g leaves the same post-withdrawal state, so the
            // continuation value is shared across that whole segment
            const double x_low = std::max(detail::account_update(fx, g, 0.0), x_floor);
            const double cont_low = interp_surface(grid, post_value, x_low, ghat, hint);

            if (mode == Mode::Static) {
                out.policy.optimal_w.at(i, j) = g;
                out.pre_value.at(i, j) = (1.0 - theta) * g + cont_low;
                continue;
            }

            wgrid.build(g, wbar, w_points);
            double vmax = -std::numeric_limits<double>::infinity();
            for (int q = 0; q < wgrid.count; ++q) {
                const double w = wgrid.w[q];
                double value;
                if (w <= g) {
                    value = (1.0 - theta) * w + cf_factor * (g - w) + cont_low;
                } else {
                    const double xq = std::max(fx - w, x_floor);
                    const double gq = ghat * (1.0 - (w - g) / (fx - g));
                    value = (1.0 - theta) * w + interp_surface(grid, post_value, xq, gq, hint);
                }
                val[q] = value;
                vmax = std::max(vmax, value);
            }
            const double tie_tol = 1e-9 * (1.0 + std::abs(vmax));
            int pick = 0;
            while (val[pick] < vmax - tie_tol) ++pick;
            out.policy.optimal_w.at(i, j) = wgrid.w[pick];
            out.pre_value.at(i, j) = val[pick];
        }
    }
    out.clamps = hint.clamped;
    return out;
}

/// Full backward induction: terminal condition, then per date a PDE solve
/// and a jump condition, and a final PDE solve from the first withdrawal
/// date down to inception (no fee or withdrawal occurs at t_0). The
/// inception value is read at (premium, premium), which build_grid keeps on
/// the mesh.
inline SolveResult value_contract(const ContractSpec& spec, const MarketParams& market,
                                  const Grid& grid, Mode mode,
                                  int w_points = detail::kWithdrawalPoints) {
    spec.validate();
    market.validate();
    const int n = spec.periods();

    SolveResult res;
    res.mode = mode;
    res.grid = grid;
    res.dates.resize(static_cast<size_t>(n) - 1);
    res.terminal_value = terminal_surface(spec, grid);

    Surface v = res.terminal_value;
    for (int k = n - 1; k >= 1; --k) {
        Surface post = step_period(v, spec, market, grid);
        JumpOutput jump = apply_jump(post, k, spec, market, grid, mode, w_points);
        res.clamp_count += jump.clamps;
        DateLayer& layer = res.dates[static_cast<size_t>(k) - 1];
        layer.date_index = k;
        layer.post_value = std::move(post);
        layer.pre_value = jump.pre_value;
        layer.policy = std::move(jump.policy);
        v = std::move(jump.pre_value);
    }
    res.inception_value = step_period(v, spec, market, grid);
    res.value_at_inception =
        interp_surface(grid, res.inception_value, spec.premium, spec.premium);
    return res;
}

}  // namespace hybridva
