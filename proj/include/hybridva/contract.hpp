#pragma once

// Contract mechanics for a GMWB variable annuity with ratchet benefit-base
// updates, an optional provider-managed cash fund, and policyholder taxation.
// All functions are pure; amounts are continuous (no rounding to cents).

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hybridva {

struct contract_violation : std::domain_error {
    using std::domain_error::domain_error;
};

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Risk-neutral market inputs. The account portfolio mixes a lognormal
/// equity index (weight equity_exposure) with the risk-free asset, so the
/// effective account volatility is equity_exposure * volatility.
struct MarketParams {
    double risk_free = 0.03;
    double volatility = 0.20;
    double equity_exposure = 0.80;

    double effective_vol() const { return equity_exposure * volatility; }

    void validate() const {
        if (!(volatility > 0.0)) throw std::invalid_argument("volatility must be > 0");
        if (!(risk_free >= 0.0)) throw std::invalid_argument("risk_free must be >= 0");
        if (!(equity_exposure >= 0.0 && equity_exposure <= 1.0))
            throw std::invalid_argument("equity_exposure must be in [0,1]");
    }
};

/// Contractual parameters. Events (fee charge, withdrawal, base update)
/// occur at t_k = k*period for k = 1..N-1; maturity payout at t_N = maturity.
struct ContractSpec {
    double premium = 100.0;
    double maturity = 10.0;
    double period = 1.0;
    double withdrawal_rate = 0.10;  // beta, fraction of the base per event date
    double guarantee_fee = 0.0;     // phi, per annum fraction of the account
    bool ratchet = true;
    bool cash_fund = true;
    double cash_rate = 0.04;        // eta, continuously compounded
    double tax_rate = 0.0;          // theta, marginal rate on withdrawals/interest

    int periods() const {
        return static_cast<int>(std::lround(maturity / period));
    }

    double event_time(int k) const { return k * period; }

    void validate() const {
        if (!(premium > 0.0)) throw std::invalid_argument("premium must be > 0");
        if (!(period > 0.0)) throw std::invalid_argument("period must be > 0");
        const double n_real = maturity / period;
        const int n = static_cast<int>(std::lround(n_real));
        if (n < 2 || std::abs(n_real - n) > 1e-9 * std::max(1.0, n_real))
            throw std::invalid_argument("maturity must be an integer multiple (>= 2) of period");
        if (!(withdrawal_rate > 0.0 && withdrawal_rate <= 1.0))
            throw std::invalid_argument("withdrawal_rate must be in (0,1]");
        const double fee_dt = guarantee_fee * period;
        if (!(fee_dt >= 0.0 && fee_dt < 1.0))
            throw std::invalid_argument("guarantee_fee * period must be in [0,1)");
        if (!(tax_rate >= 0.0 && tax_rate < 1.0))
            throw std::invalid_argument("tax_rate must be in [0,1)");
        if (!(cash_rate >= 0.0)) throw std::invalid_argument("cash_rate must be >= 0");
    }
};

/// Pre-event state at t_k^-: account balance before the fee charge and the
/// prevailing benefit base.
struct ContractState {
    double account = 0.0;
    double base = 0.0;
};

/// Post-fee account value: x * (1 - phi*dt).
inline double fee_adjust(double account, double fee, double dt) {
    return account * (1.0 - fee * dt);
}

inline double post_fee_account(const ContractState& s, const ContractSpec& c) {
    return fee_adjust(s.account, c.guarantee_fee, c.period);
}

/// Benefit base after the update step but before any excess-withdrawal
/// reduction: max(post-fee account, base) under a ratchet, else the base.
inline double ratcheted_base(const ContractState& s, const ContractSpec& c) {
    return c.ratchet ? std::max(post_fee_account(s, c), s.base) : s.base;
}

/// Guaranteed withdrawal amount g = beta * (ratcheted base).
inline double guaranteed_amount(const ContractState& s, const ContractSpec& c) {
    return c.withdrawal_rate * ratcheted_base(s, c);
}

/// Upper end of the admissible withdrawal interval [0, wbar].
inline double max_withdrawal(const ContractState& s, const ContractSpec& c) {
    return std::max(post_fee_account(s, c), guaranteed_amount(s, c));
}

namespace detail {

// Unchecked update kernels shared by the checked operations and the DP/MC
// hot loops, which precompute fx/g once per node.
inline double account_update(double fx, double g, double w) {
    const double excess = std::max(w - g, 0.0);
    return std::max(0.0, fx - g - excess);
}

inline double base_update(double fx, double ghat, double g, double w) {
    if (w <= g) return ghat;
    return ghat * (1.0 - (w - g) / (fx - g));
}

}  // namespace detail

inline void require_admissible(const ContractState& s, double w, const ContractSpec& c) {
    const double wbar = max_withdrawal(s, c);
    if (!(w >= 0.0) || w > wbar * (1.0 + 1e-12) + 1e-12)
        throw contract_violation("withdrawal " + std::to_string(w) +
                                 " outside admissible [0, " + std::to_string(wbar) + "]");
}

/// Post-withdrawal account value. The account is reduced by the full
/// guaranteed amount even when w < g; the shortfall funds the cash-fund
/// transfer (or is forfeited when the contract has no cash fund).
inline double post_withdrawal_account(const ContractState& s, double w, const ContractSpec& c) {
    require_admissible(s, w, c);
    return detail::account_update(post_fee_account(s, c), guaranteed_amount(s, c), w);
}

/// Post-withdrawal benefit base; proportional reduction on excess withdrawal.
inline double post_withdrawal_base(const ContractState& s, double w, const ContractSpec& c) {
    require_admissible(s, w, c);
    const double fx = post_fee_account(s, c);
    const double g = guaranteed_amount(s, c);
    if (w > g && !(fx > g))
        throw contract_violation("excess withdrawal requires post-fee account above the guarantee");
    return detail::base_update(fx, ratcheted_base(s, c), g, w);
}

inline ContractState apply_withdrawal(const ContractState& s, double w, const ContractSpec& c) {
    return ContractState{post_withdrawal_account(s, w, c), post_withdrawal_base(s, w, c)};
}

/// Present-value factor applied to a cash-fund deposit made at t_k. The
/// deposit earns eta until maturity, its interest is taxed, and the payout is
/// discounted from t_N back to t_k.
inline double cash_fund_pv_factor(double time_to_maturity, const ContractSpec& c,
                                  const MarketParams& m) {
    if (!c.cash_fund) return 0.0;
    const double theta = c.tax_rate;
    return (1.0 - theta) * std::exp(-(m.risk_free - c.cash_rate) * time_to_maturity) +
           theta * std::exp(-m.risk_free * time_to_maturity);
}

/// Running cash flow C(t_k, x, gamma, w): post-tax withdrawal plus the
/// present value of the cash-fund deposit (g - w)^+.
inline double running_cashflow(int k, const ContractState& s, double w, const ContractSpec& c,
                               const MarketParams& m) {
    const double g = guaranteed_amount(s, c);
    const double time_to_maturity = c.maturity - c.event_time(k);
    double value = (1.0 - c.tax_rate) * w;
    if (c.cash_fund)
        value += cash_fund_pv_factor(time_to_maturity, c, m) * std::max(g - w, 0.0);
    return value;
}

/// Terminal cash flow D(x, gamma) at t_N: post-tax maximum of the post-fee
/// account and the guaranteed amount.
inline double terminal_cashflow(const ContractState& s, const ContractSpec& c) {
    return (1.0 - c.tax_rate) * std::max(post_fee_account(s, c), guaranteed_amount(s, c));
}

}  // namespace hybridva
