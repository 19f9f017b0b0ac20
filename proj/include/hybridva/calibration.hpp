#pragma once

// Fair guarantee fee search: value the contract on an equally spaced fee
// sweep, interpolate the premium gap with a natural cubic spline, and take
// its smallest root. A contract whose value stays below the premium even at
// the sweep floor is not viable; a gap that stays negative up to the cap
// means the cap is too low.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hybridva/dp.hpp"

namespace hybridva {

/// Natural cubic spline through strictly increasing knots.
class CubicSpline {
public:
    CubicSpline() = default;

    CubicSpline(std::vector<double> xs, std::vector<double> ys)
        : x_(std::move(xs)), y_(std::move(ys)) {
        const int n = static_cast<int>(x_.size());
        if (n < 3 || y_.size() != x_.size())
            throw std::invalid_argument("spline needs at least 3 knots");
        for (int i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw std::invalid_argument("spline knots must be strictly increasing");
        // second derivatives from the tridiagonal continuity system
        m_.assign(n, 0.0);
        std::vector<double> diag(n, 1.0), rhs(n, 0.0), sub(n, 0.0), sup(n, 0.0);
        for (int i = 1; i + 1 < n; ++i) {
            const double hm = x_[i] - x_[i - 1];
            const double hp = x_[i + 1] - x_[i];
            sub[i] = hm / 6.0;
            diag[i] = (hm + hp) / 3.0;
            sup[i] = hp / 6.0;
            rhs[i] = (y_[i + 1] - y_[i]) / hp - (y_[i] - y_[i - 1]) / hm;
        }
        for (int i = 1; i < n; ++i) {
            const double w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m_[n - 1] = rhs[n - 1] / diag[n - 1];
        for (int i = n - 2; i >= 0; --i) m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];
    }

    double operator()(double q) const {
        const int i = locate_cell(x_, std::clamp(q, x_.front(), x_.back()), 0);
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - q) / h;
        const double b = (q - x_[i]) / h;
        return a * y_[i] + b * y_[i + 1] +
               ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    }

    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }

private:
    std::vector<double> x_, y_, m_;
};

enum class FeeStatus { ok, not_viable, cap_too_low };

inline const char* to_string(FeeStatus s) {
    switch (s) {
        case FeeStatus::ok: return "ok";
        case FeeStatus::not_viable: return "not_viable";
        default: return "cap_too_low";
    }
}

struct SweepPoint {
    double fee_bps = 0.0;
    double value = 0.0;
    double gap = 0.0;  // premium - value, increasing in the fee
};

struct FeeSweepConfig {
    double lo_bps = 0.0;
    double hi_bps = 400.0;
    int count = 21;
};

struct FeeResult {
    FeeStatus status = FeeStatus::not_viable;
    double fee_bps = 0.0;
    double value_at_fee = 0.0;
    double gap_at_fee = 0.0;
    int sign_changes = 0;
    long evaluations = 0;
    std::vector<SweepPoint> sweep;    // coarse sweep over [lo, hi]
    std::vector<SweepPoint> refined;  // local re-sweep around the bracket
};

namespace detail {

inline double spline_root(const CubicSpline& s, double lo, double hi) {
    double flo = s(lo);
    if (flo == 0.0) return lo;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = s(mid);
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Locate the fee (in basis points) at which the contract value equals the
/// premium. `value_of_fee` maps a fee fraction to the inception value.
inline FeeResult fair_fee_search(const std::function<double(double)>& value_of_fee,
                                 double premium, const FeeSweepConfig& sweep) {
    if (sweep.count < 4) throw std::invalid_argument("fee sweep needs at least 4 points");
    if (!(sweep.lo_bps >= 0.0 && sweep.hi_bps > sweep.lo_bps))
        throw std::invalid_argument("bad fee sweep bounds");

    FeeResult res;
    auto eval = [&](double bps) {
        const double v = value_of_fee(bps * 1e-4);
        ++res.evaluations;
        return SweepPoint{bps, v, premium - v};
    };

    res.sweep.reserve(sweep.count);
    for (int i = 0; i < sweep.count; ++i) {
        const double bps =
            sweep.lo_bps + (sweep.hi_bps - sweep.lo_bps) * static_cast<double>(i) / (sweep.count - 1);
        res.sweep.push_back(eval(bps));
    }
    for (size_t i = 1; i < res.sweep.size(); ++i)
        if ((res.sweep[i - 1].gap < 0.0) != (res.sweep[i].gap < 0.0)) ++res.sign_changes;

    if (res.sweep.front().gap > 0.0) {
        res.status = FeeStatus::not_viable;
        return res;
    }
    if (res.sweep.back().gap < 0.0) {
        res.status = FeeStatus::cap_too_low;
        return res;
    }

    // first bracketing interval
    size_t b = 1;
    while (b < res.sweep.size() && res.sweep[b].gap < 0.0) ++b;
    const double blo = res.sweep[b - 1].fee_bps;
    const double bhi = res.sweep[b].fee_bps;

    // one local re-sweep before fitting the spline
    res.refined.reserve(sweep.count);
    for (int i = 0; i < sweep.count; ++i) {
        const double bps = blo + (bhi - blo) * static_cast<double>(i) / (sweep.count - 1);
        if (i == 0)
            res.refined.push_back(res.sweep[b - 1]);
        else if (i == sweep.count - 1)
            res.refined.push_back(res.sweep[b]);
        else
            res.refined.push_back(eval(bps));
    }

    std::vector<double> xs, ys;
    for (const auto& p : res.refined) {
        xs.push_back(p.fee_bps);
        ys.push_back(p.gap);
    }
    const CubicSpline spline(std::move(xs), std::move(ys));

    double root = bhi;
    for (size_t i = 1; i < res.refined.size(); ++i) {
        if ((res.refined[i - 1].gap <= 0.0) && (res.refined[i].gap >= 0.0)) {
            root = detail::spline_root(spline, res.refined[i - 1].fee_bps,
                                       res.refined[i].fee_bps);
            break;
        }
    }

    res.status = FeeStatus::ok;
    res.fee_bps = root;
    const SweepPoint at_root = eval(root);
    res.value_at_fee = at_root.value;
    res.gap_at_fee = at_root.gap;
    return res;
}

/// Convenience wrapper running the full valuation per sweep point.
inline FeeResult fair_fee(const ContractSpec& spec, const MarketParams& market,
                          const GridConfig& grid_cfg, Mode mode,
                          const FeeSweepConfig& sweep = {}) {
    auto value_of_fee = [&](double fee) {
        ContractSpec s = spec;
        s.guarantee_fee = fee;
        const Grid grid = build_grid(s, grid_cfg);
        return value_contract(s, market, grid, mode).value_at_inception;
    };
    return fair_fee_search(value_of_fee, spec.premium, sweep);
}

}  // namespace hybridva
