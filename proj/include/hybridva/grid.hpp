#pragma once

// State-space discretization: (account, base) node arrays, value surfaces,
// and the bilinear interpolation used for jump conditions and policy lookup.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hybridva/contract.hpp"

namespace hybridva {

enum class GridSpacing { uniform, geometric, stretched };

struct GridConfig {
    int num_account = 80;
    int num_base = 80;
    int num_time = 50;          // time steps per period in the PDE solve
    double account_min = 1e-6;  // strictly positive floor standing in for x = 0
    double account_max = 500.0;
    double base_max = 500.0;
    GridSpacing spacing = GridSpacing::uniform;

    void validate() const {
        if (num_account < 2 || num_base < 2)
            throw std::invalid_argument("grid needs at least 2 nodes per axis");
        if (num_time < 3)
            throw std::invalid_argument("num_time must be >= 3 (three-level time scheme)");
        if (!(account_min > 0.0 && account_min < account_max))
            throw std::invalid_argument("require 0 < account_min < account_max");
        if (!(base_max > 0.0)) throw std::invalid_argument("base_max must be > 0");
    }
};

/// Node coordinates for one (account, base) mesh.
struct Grid {
    std::vector<double> account;  // strictly increasing, account[0] = account_min
    std::vector<double> base;     // strictly increasing, base[0] = 0
    int num_time = 50;

    int nx() const { return static_cast<int>(account.size()); }
    int ny() const { return static_cast<int>(base.size()); }
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    v.front() = lo;
    v.back() = hi;
    return v;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        v[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / (n - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

// Geometric spacing varies slowly, so moving the nearest interior node onto
// the pinned value is enough there.
inline void snap_log_node(std::vector<double>& nodes, double value) {
    const int n = static_cast<int>(nodes.size());
    if (n < 3 || !(value > nodes.front() && value < nodes.back())) return;
    int best = 1;
    for (int i = 1; i + 1 < n; ++i)
        if (std::abs(nodes[i] - value) < std::abs(nodes[best] - value)) best = i;
    nodes[best] = value;
    for (int i = 1; i < n; ++i)
        if (!(nodes[i] > nodes[i - 1]))
            throw std::invalid_argument("grid too coarse to hold the premium as a node");
}

// Uniform nodes with one pinned interior value: two uniform segments meet
// exactly at `pin`, with the interval count split in proportion so the two
// spacings stay within a few percent of each other. An abrupt cell-size
// change next to the pinned node would cost finite-difference accuracy right
// where the inception value is read off.
inline std::vector<double> linspace_pinned(double lo, double hi, int n, double pin) {
    if (n < 3 || !(pin > lo && pin < hi)) return linspace(lo, hi, n);
    const double frac = (pin - lo) / (hi - lo);
    int k = static_cast<int>(std::lround(frac * (n - 1)));
    k = std::clamp(k, 1, n - 2);
    std::vector<double> v(n);
    for (int i = 0; i <= k; ++i) v[i] = lo + (pin - lo) * static_cast<double>(i) / k;
    for (int i = k; i < n; ++i)
        v[i] = pin + (hi - pin) * static_cast<double>(i - k) / (n - 1 - k);
    v.front() = lo;
    v[k] = pin;
    v.back() = hi;
    return v;
}

// Nodes concentrated toward the lower end through a sinh map, pinned so
// that `pin` is a node. Multiplicative account dynamics mix poorly with a
// uniform mesh: near x = 0 the one-period diffusion width vol*x*sqrt(dt) is
// far below a uniform cell, and the guarantee kinks of the value surfaces
// live exactly there. The sinh map keeps cells of roughly constant width
// relative to the local diffusion scale at the bottom while still reaching
// the far field. The pin is applied in transform space so spacing stays
// smooth through the pinned node.
inline std::vector<double> sinhspace_pinned(double lo, double hi, int n, double pin,
                                            double c = 4.0) {
    auto map = [&](double u) { return lo + (hi - lo) * std::sinh(c * u) / std::sinh(c); };
    std::vector<double> u(n);
    if (n >= 3 && pin > lo && pin < hi) {
        const double u_pin = std::asinh((pin - lo) / (hi - lo) * std::sinh(c)) / c;
        u = linspace_pinned(0.0, 1.0, n, u_pin);
    } else {
        u = linspace(0.0, 1.0, n);
    }
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = map(u[i]);
    v.front() = lo;
    v.back() = hi;
    if (pin > lo && pin < hi && n >= 3)
        for (int i = 1; i + 1 < n; ++i)
            if (std::abs(v[i] - pin) < 1e-9 * (1.0 + pin)) v[i] = pin;
    return v;
}

}  // namespace detail

/// Build node arrays. The premium is pinned onto both axes so the inception
/// state (P0, P0) is a mesh point.
inline Grid build_grid(const ContractSpec& spec, const GridConfig& cfg) {
    cfg.validate();
    Grid g;
    g.num_time = cfg.num_time;
    switch (cfg.spacing) {
        case GridSpacing::uniform:
            g.account = detail::linspace_pinned(cfg.account_min, cfg.account_max,
                                                cfg.num_account, spec.premium);
            g.base = detail::linspace_pinned(0.0, cfg.base_max, cfg.num_base, spec.premium);
            break;
        case GridSpacing::stretched:
            g.account = detail::sinhspace_pinned(cfg.account_min, cfg.account_max,
                                                 cfg.num_account, spec.premium);
            // value surfaces are close to linear in the base, so a uniform
            // base axis is already adequate
            g.base = detail::linspace_pinned(0.0, cfg.base_max, cfg.num_base, spec.premium);
            break;
        case GridSpacing::geometric:
            g.account = detail::logspace(cfg.account_min, cfg.account_max, cfg.num_account);
            // log spacing cannot reach 0; keep the origin and spread the rest.
            g.base = detail::logspace(cfg.base_max * 1e-4, cfg.base_max, cfg.num_base);
            g.base.front() = 0.0;
            detail::snap_log_node(g.account, spec.premium);
            detail::snap_log_node(g.base, spec.premium);
            break;
    }
    return g;
}

/// Dense nx-by-ny array of values over the mesh; one base slice (fixed j)
/// is contiguous in memory.
struct Surface {
    int nx = 0;
    int ny = 0;
    std::vector<double> values;

    Surface() = default;
    Surface(int nx_, int ny_, double fill = 0.0) : nx(nx_), ny(ny_), values(static_cast<size_t>(nx_) * ny_, fill) {}

    double& at(int i, int j) { return values[static_cast<size_t>(j) * nx + i]; }
    double at(int i, int j) const { return values[static_cast<size_t>(j) * nx + i]; }
    double* slice(int j) { return values.data() + static_cast<size_t>(j) * nx; }
    const double* slice(int j) const { return values.data() + static_cast<size_t>(j) * nx; }

    bool same_shape(const Grid& g) const { return nx == g.nx() && ny == g.ny(); }
};

/// Locate the cell index i with nodes[i] <= q <= nodes[i+1], starting the
/// scan from a caller-maintained hint (queries in the DP sweep move little
/// between consecutive calls).
inline int locate_cell(const std::vector<double>& nodes, double q, int hint) {
    const int last = static_cast<int>(nodes.size()) - 2;
    int i = std::clamp(hint, 0, last);
    while (i > 0 && q < nodes[i]) --i;
    while (i < last && q > nodes[i + 1]) ++i;
    return i;
}

struct InterpHint {
    int ix = 0;
    int iy = 0;
    long clamped = 0;  // queries outside the mesh box, clamped to its edge
};

/// Bilinear interpolation of a surface at (x, y); out-of-range queries are
/// clamped to the boundary and counted on the hint.
inline double interp_bilinear(const Grid& g, const Surface& s, double x, double y,
                              InterpHint& hint) {
    const auto& xs = g.account;
    const auto& ys = g.base;
    bool clamped = false;
    if (x < xs.front()) { x = xs.front(); clamped = true; }
    if (x > xs.back())  { x = xs.back();  clamped = true; }
    if (y < ys.front()) { y = ys.front(); clamped = true; }
    if (y > ys.back())  { y = ys.back();  clamped = true; }
    if (clamped) ++hint.clamped;

    const int i = hint.ix = locate_cell(xs, x, hint.ix);
    const int j = hint.iy = locate_cell(ys, y, hint.iy);
    const double tx = (x - xs[i]) / (xs[i + 1] - xs[i]);
    const double ty = (y - ys[j]) / (ys[j + 1] - ys[j]);
    const double v00 = s.at(i, j), v10 = s.at(i + 1, j);
    const double v01 = s.at(i, j + 1), v11 = s.at(i + 1, j + 1);
    return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11);
}

inline double interp_bilinear(const Grid& g, const Surface& s, double x, double y) {
    InterpHint hint;
    return interp_bilinear(g, s, x, y, hint);
}

namespace detail {

// Fritsch-Carlson slope at node i of one base slice: harmonic-mean weighting
// of adjacent secants, zero at local extrema. Monotone data stays monotone
// under the resulting Hermite interpolant and there is no overshoot.
inline double pchip_slope_raw(const double* x, const double* y, int n, int i) {
    auto secant = [&](int a) { return (y[a + 1] - y[a]) / (x[a + 1] - x[a]); };
    if (i == 0) {
        const double h0 = x[1] - x[0], h1 = x[2] - x[1];
        const double d0 = secant(0), d1 = secant(1);
        double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) return 0.0;
        if (d0 * d1 < 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return m;
    }
    if (i == n - 1) {
        const double h0 = x[n - 2] - x[n - 3], h1 = x[n - 1] - x[n - 2];
        const double d0 = secant(n - 3), d1 = secant(n - 2);
        double m = ((2.0 * h1 + h0) * d1 - h1 * d0) / (h0 + h1);
        if (m * d1 <= 0.0) return 0.0;
        if (d1 * d0 < 0.0 && std::abs(m) > 3.0 * std::abs(d1)) return 3.0 * d1;
        return m;
    }
    const double hm = x[i] - x[i - 1], hp = x[i + 1] - x[i];
    const double dm = secant(i - 1), dp = secant(i);
    if (dm * dp <= 0.0) return 0.0;
    const double w1 = 2.0 * hp + hm, w2 = hp + 2.0 * hm;
    return (w1 + w2) / (w1 / dm + w2 / dp);
}

inline double pchip_eval_raw(const double* x, const double* y, int n, int cell, double q) {
    const double h = x[cell + 1] - x[cell];
    const double t = (q - x[cell]) / h;
    const double m0 = pchip_slope_raw(x, y, n, cell);
    const double m1 = pchip_slope_raw(x, y, n, cell + 1);
    const double t2 = t * t, t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y[cell] + (t3 - 2.0 * t2 + t) * h * m0 +
           (-2.0 * t3 + 3.0 * t2) * y[cell + 1] + (t3 - t2) * h * m1;
}

inline double pchip_eval(const std::vector<double>& x, const double* y, int n, int cell,
                         double q) {
    return pchip_eval_raw(x.data(), y, n, cell, q);
}

}  // namespace detail

/// Continuation-value interpolation used by the jump condition and policy
/// replay: monotone cubic (Fritsch-Carlson) along the account axis blended
/// linearly along the base axis. Piecewise-linear interpolation along x
/// systematically overprices convex continuation values on a coarse mesh,
/// which inflates calibrated fees; the monotone cubic removes that bias
/// without overshooting at policy kinks. Falls back to bilinear when the
/// account axis is too short. Out-of-range queries clamp to the mesh edge
/// and are counted on the hint.
inline double interp_surface(const Grid& g, const Surface& s, double x, double y,
                             InterpHint& hint) {
    const auto& xs = g.account;
    const auto& ys = g.base;
    const int nx = g.nx();
    if (nx < 4) return interp_bilinear(g, s, x, y, hint);

    bool clamped = false;
    if (x < xs.front()) { x = xs.front(); clamped = true; }
    if (x > xs.back())  { x = xs.back();  clamped = true; }
    if (y < ys.front()) { y = ys.front(); clamped = true; }
    if (y > ys.back())  { y = ys.back();  clamped = true; }
    if (clamped) ++hint.clamped;

    const int i = hint.ix = locate_cell(xs, x, hint.ix);
    const int j = hint.iy = locate_cell(ys, y, hint.iy);
    const double ty = (y - ys[j]) / (ys[j + 1] - ys[j]);
    const double lo = detail::pchip_eval(xs, s.slice(j), nx, i, x);
    if (ty == 0.0) return lo;
    if (g.ny() >= 4) {
        // four-slice window for the monotone cubic across the base axis
        const int j0 = std::clamp(j - 1, 0, g.ny() - 4);
        double val[4];
        val[j - j0] = lo;
        for (int q = 0; q < 4; ++q)
            if (q != j - j0) val[q] = detail::pchip_eval(xs, s.slice(j0 + q), nx, i, x);
        return detail::pchip_eval_raw(ys.data() + j0, val, 4, j - j0, y);
    }
    const double hi = detail::pchip_eval(xs, s.slice(j + 1), nx, i, x);
    return (1.0 - ty) * lo + ty * hi;
}

inline double interp_surface(const Grid& g, const Surface& s, double x, double y) {
    InterpHint hint;
    return interp_surface(g, s, x, y, hint);
}

}  // namespace hybridva
