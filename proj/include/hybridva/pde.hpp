#pragma once

// One-period continuation solver. Between event dates the contract value
// satisfies a Black-Scholes-type PDE in the account variable with the base
// frozen, so each base slice is integrated independently: the PDE is
// transformed to forward time-to-go tau and stepped with a two-level start
// followed by a three-level backward difference, each step solving the
// two-point boundary value problem
//     a(x) U'' + b(x) U' - c_n U = F_n
// with a(x) = max{(rho*sigma*x)^2/2, 1e-6} and b(x) = r x.
// Lower boundary: the account absorbs at zero, so the value is the
// discounted lower-edge entry of the input surface. Upper boundary:
// vanishing second derivative, imposed by linear extrapolation of the last
// interior nodes.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hybridva/contract.hpp"
#include "hybridva/grid.hpp"

namespace hybridva {

namespace detail {

struct SpatialOperator {
    std::vector<double> sub, ctr, sup;  // a U'' + b U' stencil at interior nodes
    double rho_top = 1.0;               // spacing ratio for the top extrapolation
};

inline SpatialOperator build_operator(const Grid& grid, const MarketParams& market) {
    const auto& x = grid.account;
    const int m = grid.nx();
    const double vol = market.effective_vol();
    SpatialOperator op;
    op.sub.assign(m, 0.0);
    op.ctr.assign(m, 0.0);
    op.sup.assign(m, 0.0);
    for (int i = 1; i + 1 < m; ++i) {
        const double hm = x[i] - x[i - 1];
        const double hp = x[i + 1] - x[i];
        const double a = std::max(0.5 * vol * vol * x[i] * x[i], 1e-6);
        const double b = market.risk_free * x[i];
        const double c2m = 2.0 / (hm * (hm + hp));
        const double c2p = 2.0 / (hp * (hm + hp));
        if (2.0 * a >= b * hp) {
            // central first derivative keeps second order and positive
            // off-diagonals here
            op.sub[i] = a * c2m - b * hp / (hm * (hm + hp));
            op.ctr[i] = -a * (c2m + c2p) + b * (hp - hm) / (hm * hp);
            op.sup[i] = a * c2p + b * hm / (hp * (hm + hp));
        } else {
            // convection dominates: one-sided first derivative (b >= 0)
            op.sub[i] = a * c2m;
            op.ctr[i] = -a * (c2m + c2p) - b / hp;
            op.sup[i] = a * c2p + b / hp;
        }
    }
    op.rho_top = (x[m - 1] - x[m - 2]) / (x[m - 2] - x[m - 3]);
    return op;
}

// Tridiagonal solve, overwriting rhs with the solution.
inline void thomas_solve(const std::vector<double>& sub, std::vector<double>& diag,
                         const std::vector<double>& sup, std::vector<double>& rhs, int n) {
    for (int i = 1; i < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// Replace a node value by the dual-cell average of the piecewise-linear
// interpolant, v_i + mu*((hm*v_{i+1} + hp*v_{i-1})/(hm+hp) - v_i) with
// mu = 1/4, at nodes where the sampled data has a slope discontinuity
// sitting exactly on the node (its secant jump dominates the neighbors').
// Pointwise sampling of such data costs the scheme an O(1) constant in its
// O(h^2) error at that node; the averaged value restores it. Kinks between
// nodes are left alone -- averaging there only biases the solution upward
// at convex creases. Constants and linears pass through untouched, and the
// averaging weights are positive, so monotone data stays monotone.
inline void project_initial_data(const std::vector<double>& x, const double* src, double* dst,
                                 int n, std::vector<double>& secant) {
    constexpr double mu = 0.25;
    secant.resize(n);
    double dmax = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        secant[i] = (src[i + 1] - src[i]) / (x[i + 1] - x[i]);
        dmax = std::max(dmax, std::abs(secant[i]));
    }
    const double floor = 1e-8 * (1.0 + dmax);
    auto jump = [&](int i) {
        return (i >= 1 && i + 1 < n) ? std::abs(secant[i] - secant[i - 1]) : 0.0;
    };
    dst[0] = src[0];
    dst[n - 1] = src[n - 1];
    for (int i = 1; i + 1 < n; ++i) {
        const double ji = jump(i);
        if (ji > floor && ji > 3.0 * std::max(jump(i - 1), jump(i + 1))) {
            const double hm = x[i] - x[i - 1];
            const double hp = x[i + 1] - x[i];
            const double blend = (hm * src[i + 1] + hp * src[i - 1]) / (hm + hp);
            dst[i] = src[i] + mu * (blend - src[i]);
        } else {
            dst[i] = src[i];
        }
    }
}

}  // namespace detail

/// Integrate the continuation PDE over one period: takes the value surface
/// at the next event date (pre-withdrawal) and returns the surface one
/// period earlier (post-withdrawal side).
inline Surface step_period(const Surface& v_next, const ContractSpec& spec,
                           const MarketParams& market, const Grid& grid) {
    if (!v_next.same_shape(grid)) throw std::invalid_argument("surface/grid shape mismatch");
    if (grid.nx() < 4) throw std::invalid_argument("step_period needs at least 4 account nodes");
    if (grid.num_time < 3) throw std::invalid_argument("step_period needs at least 3 time steps");
    double max_abs = 0.0;
    for (double v : v_next.values) {
        if (!std::isfinite(v)) throw numerical_error("non-finite entry in value surface");
        max_abs = std::max(max_abs, std::abs(v));
    }

    const int nx = grid.nx();
    const int ny = grid.ny();
    const int n_tau = grid.num_time;
    const double dtau = spec.period / n_tau;
    const double r = market.risk_free;
    const auto op = detail::build_operator(grid, market);

    Surface out(nx, ny);
    const int m = nx - 2;  // unknowns per step, boundaries handled separately
    std::vector<double> sub(m), diag(m), sup(m), rhs(m);
    std::vector<double> u_prev(nx), u_prev2(nx), u_new(nx), secant;

    for (int i = 0; i < m; ++i) {
        sub[i] = op.sub[i + 1];
        sup[i] = op.sup[i + 1];
    }
    const double rho = op.rho_top;

    for (int j = 0; j < ny; ++j) {
        const double* u0 = v_next.slice(j);
        detail::project_initial_data(grid.account, u0, u_prev.data(), nx, secant);
        const double edge0 = u0[0];

        for (int n = 1; n <= n_tau; ++n) {
            const bool startup = n <= 2;
            const double cn = r + (startup ? 1.0 / dtau : 1.5 / dtau);
            const double bc = std::exp(-r * (n * dtau)) * edge0;

            for (int i = 0; i < m; ++i) {
                const int node = i + 1;
                diag[i] = op.ctr[node] - cn;
                rhs[i] = startup ? -u_prev[node] / dtau
                                 : -(4.0 * u_prev[node] - u_prev2[node]) / (2.0 * dtau);
            }
            rhs[0] -= sub[0] * bc;
            // fold the U'' = 0 extrapolation row into the last interior row
            const double sup_save = sup[m - 1];
            diag[m - 1] += sup_save * (1.0 + rho);
            double sub_save = 0.0;
            if (m >= 2) {
                sub_save = sub[m - 1];
                sub[m - 1] = sub_save - sup_save * rho;
            }
            sup[m - 1] = 0.0;

            detail::thomas_solve(sub, diag, sup, rhs, m);

            sup[m - 1] = sup_save;
            if (m >= 2) sub[m - 1] = sub_save;

            u_new[0] = bc;
            for (int i = 0; i < m; ++i) u_new[i + 1] = rhs[i];
            u_new[nx - 1] = (1.0 + rho) * u_new[nx - 2] - rho * u_new[nx - 3];

            u_prev2.swap(u_prev);
            u_prev.swap(u_new);
        }

        double* dst = out.slice(j);
        const double tol = 1e-9 * (1.0 + max_abs);
        for (int i = 0; i < nx; ++i) {
            double v = u_prev[i];
            if (v < 0.0 && v > -tol) v = 0.0;  // payoffs are nonnegative; drop roundoff undershoot
            dst[i] = v;
        }
    }
    return out;
}

}  // namespace hybridva
