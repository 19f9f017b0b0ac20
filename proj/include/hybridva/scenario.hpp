#pragma once

// Batch front end: config file parsing, scenario-cell expansion, the four
// commands (price, fair-fee, policy export, simulate), and CSV emission.
// Every artifact embeds the hash of the fully resolved configuration, and
// nothing in the output depends on wall-clock time, so identical inputs
// reproduce identical bytes.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybridva/calibration.hpp"
#include "hybridva/contract.hpp"
#include "hybridva/dp.hpp"
#include "hybridva/grid.hpp"
#include "hybridva/simulate.hpp"

namespace hybridva {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimulationConfig {
    int n_paths = 10000;
    uint64_t seed = 20240601;
};

/// Cross-product axes for scenario batches; empty lists fall back to the
/// corresponding scalar from the base blocks.
struct SweepConfig {
    std::vector<double> cash_rate;
    std::vector<double> tax_rate;
    std::vector<int> ratchet;    // 0/1, kept as int to preserve listing order
    std::vector<int> cash_fund;
    std::vector<Mode> mode;

    bool empty() const {
        return cash_rate.empty() && tax_rate.empty() && ratchet.empty() && cash_fund.empty() &&
               mode.empty();
    }
};

struct RunConfig {
    ContractSpec contract;
    bool fee_given = false;  // fee_bps present in [contract]; otherwise calibrate
    MarketParams market;
    GridConfig grid;
    Mode mode = Mode::Dynamic;
    SweepConfig sweep;
    SimulationConfig sim;
    std::vector<int> policy_dates{1, 5, 9};
    FeeSweepConfig fee_search;
    std::string out_dir = "out";
    int threads = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& v, const std::string& key) {
    size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("invalid number for key '" + key + "': " + v);
    }
    if (pos != v.size()) throw ConfigError("invalid number for key '" + key + "': " + v);
    return x;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("invalid boolean for key '" + key + "': " + v);
}

inline Mode parse_mode(const std::string& v, const std::string& key) {
    if (v == "static") return Mode::Static;
    if (v == "dynamic") return Mode::Dynamic;
    throw ConfigError("invalid mode for key '" + key + "': " + v);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parse the sectioned key-value config format. Unknown sections or keys
/// are rejected with a message naming the offender.
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            if (section != "contract" && section != "market" && section != "grid" &&
                section != "run" && section != "sweep" && section != "simulation" &&
                section != "policy" && section != "fee_search")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        const std::string qual = section + "." + key;
        using detail::parse_bool;
        using detail::parse_mode;
        using detail::parse_number;

        if (section == "contract") {
            if (key == "premium") cfg.contract.premium = parse_number(val, qual);
            else if (key == "maturity") cfg.contract.maturity = parse_number(val, qual);
            else if (key == "period") cfg.contract.period = parse_number(val, qual);
            else if (key == "withdrawal_rate") cfg.contract.withdrawal_rate = parse_number(val, qual);
            else if (key == "fee_bps") { cfg.contract.guarantee_fee = parse_number(val, qual) * 1e-4; cfg.fee_given = true; }
            else if (key == "ratchet") cfg.contract.ratchet = parse_bool(val, qual);
            else if (key == "cash_fund") cfg.contract.cash_fund = parse_bool(val, qual);
            else if (key == "cash_rate") cfg.contract.cash_rate = parse_number(val, qual);
            else if (key == "tax_rate") cfg.contract.tax_rate = parse_number(val, qual);
            else throw ConfigError("unknown key '" + key + "' in section [contract]");
        } else if (section == "market") {
            if (key == "risk_free") cfg.market.risk_free = parse_number(val, qual);
            else if (key == "volatility") cfg.market.volatility = parse_number(val, qual);
            else if (key == "equity_exposure") cfg.market.equity_exposure = parse_number(val, qual);
            else throw ConfigError("unknown key '" + key + "' in section [market]");
        } else if (section == "grid") {
            if (key == "num_account") cfg.grid.num_account = static_cast<int>(parse_number(val, qual));
            else if (key == "num_base") cfg.grid.num_base = static_cast<int>(parse_number(val, qual));
            else if (key == "num_time") cfg.grid.num_time = static_cast<int>(parse_number(val, qual));
            else if (key == "account_min") cfg.grid.account_min = parse_number(val, qual);
            else if (key == "account_max") cfg.grid.account_max = parse_number(val, qual);
            else if (key == "base_max") cfg.grid.base_max = parse_number(val, qual);
            else if (key == "spacing") {
                if (val == "uniform") cfg.grid.spacing = GridSpacing::uniform;
                else if (val == "geometric") cfg.grid.spacing = GridSpacing::geometric;
                else if (val == "stretched") cfg.grid.spacing = GridSpacing::stretched;
                else throw ConfigError("invalid spacing: " + val);
            } else throw ConfigError("unknown key '" + key + "' in section [grid]");
        } else if (section == "run") {
            if (key == "mode") cfg.mode = parse_mode(val, qual);
            else if (key == "out") cfg.out_dir = val;
            else if (key == "threads") cfg.threads = std::max(1, static_cast<int>(parse_number(val, qual)));
            else throw ConfigError("unknown key '" + key + "' in section [run]");
        } else if (section == "fee_search") {
            if (key == "lo_bps") cfg.fee_search.lo_bps = parse_number(val, qual);
            else if (key == "hi_bps") cfg.fee_search.hi_bps = parse_number(val, qual);
            else if (key == "count") cfg.fee_search.count = static_cast<int>(parse_number(val, qual));
            else throw ConfigError("unknown key '" + key + "' in section [fee_search]");
        } else if (section == "sweep") {
            const auto items = detail::split_list(val);
            if (key == "cash_rate")
                for (const auto& s : items) cfg.sweep.cash_rate.push_back(parse_number(s, qual));
            else if (key == "tax_rate")
                for (const auto& s : items) cfg.sweep.tax_rate.push_back(parse_number(s, qual));
            else if (key == "ratchet")
                for (const auto& s : items) cfg.sweep.ratchet.push_back(parse_bool(s, qual) ? 1 : 0);
            else if (key == "cash_fund")
                for (const auto& s : items) cfg.sweep.cash_fund.push_back(parse_bool(s, qual) ? 1 : 0);
            else if (key == "mode")
                for (const auto& s : items) cfg.sweep.mode.push_back(parse_mode(s, qual));
            else throw ConfigError("unknown key '" + key + "' in section [sweep]");
        } else if (section == "simulation") {
            if (key == "n_paths") cfg.sim.n_paths = static_cast<int>(parse_number(val, qual));
            else if (key == "seed") cfg.sim.seed = static_cast<uint64_t>(std::stoull(val));
            else throw ConfigError("unknown key '" + key + "' in section [simulation]");
        } else if (section == "policy") {
            if (key == "dates") {
                cfg.policy_dates.clear();
                for (const auto& s : detail::split_list(val))
                    cfg.policy_dates.push_back(static_cast<int>(parse_number(s, qual)));
            } else throw ConfigError("unknown key '" + key + "' in section [policy]");
        } else {
            throw ConfigError("key '" + key + "' outside any section");
        }
    }
    cfg.contract.validate();
    cfg.market.validate();
    cfg.grid.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

/// Canonical text form of the resolved configuration (also the manifest).
inline std::string canonical_config(const RunConfig& c) {
    using detail::format_double;
    std::ostringstream os;
    os << "[contract]\n";
    os << "premium = " << format_double(c.contract.premium) << "\n";
    os << "maturity = " << format_double(c.contract.maturity) << "\n";
    os << "period = " << format_double(c.contract.period) << "\n";
    os << "withdrawal_rate = " << format_double(c.contract.withdrawal_rate) << "\n";
    if (c.fee_given) os << "fee_bps = " << format_double(c.contract.guarantee_fee * 1e4) << "\n";
    os << "ratchet = " << (c.contract.ratchet ? "true" : "false") << "\n";
    os << "cash_fund = " << (c.contract.cash_fund ? "true" : "false") << "\n";
    os << "cash_rate = " << format_double(c.contract.cash_rate) << "\n";
    os << "tax_rate = " << format_double(c.contract.tax_rate) << "\n";
    os << "[market]\n";
    os << "risk_free = " << format_double(c.market.risk_free) << "\n";
    os << "volatility = " << format_double(c.market.volatility) << "\n";
    os << "equity_exposure = " << format_double(c.market.equity_exposure) << "\n";
    os << "[grid]\n";
    os << "num_account = " << c.grid.num_account << "\n";
    os << "num_base = " << c.grid.num_base << "\n";
    os << "num_time = " << c.grid.num_time << "\n";
    os << "account_min = " << format_double(c.grid.account_min) << "\n";
    os << "account_max = " << format_double(c.grid.account_max) << "\n";
    os << "base_max = " << format_double(c.grid.base_max) << "\n";
    os << "spacing = "
       << (c.grid.spacing == GridSpacing::uniform
               ? "uniform"
               : c.grid.spacing == GridSpacing::geometric ? "geometric" : "stretched")
       << "\n";
    os << "[run]\n";
    os << "mode = " << to_string(c.mode) << "\n";
    os << "[fee_search]\n";
    os << "lo_bps = " << format_double(c.fee_search.lo_bps) << "\n";
    os << "hi_bps = " << format_double(c.fee_search.hi_bps) << "\n";
    os << "count = " << c.fee_search.count << "\n";
    os << "[sweep]\n";
    auto list_num = [&](const char* key, const std::vector<double>& v) {
        if (v.empty()) return;
        os << key << " = ";
        for (size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << format_double(v[i]);
        os << "\n";
    };
    list_num("cash_rate", c.sweep.cash_rate);
    list_num("tax_rate", c.sweep.tax_rate);
    auto list_flag = [&](const char* key, const std::vector<int>& v) {
        if (v.empty()) return;
        os << key << " = ";
        for (size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << (v[i] ? "true" : "false");
        os << "\n";
    };
    list_flag("ratchet", c.sweep.ratchet);
    list_flag("cash_fund", c.sweep.cash_fund);
    if (!c.sweep.mode.empty()) {
        os << "mode = ";
        for (size_t i = 0; i < c.sweep.mode.size(); ++i)
            os << (i ? ", " : "") << to_string(c.sweep.mode[i]);
        os << "\n";
    }
    os << "[simulation]\n";
    os << "n_paths = " << c.sim.n_paths << "\n";
    os << "seed = " << c.sim.seed << "\n";
    os << "[policy]\n";
    os << "dates = ";
    for (size_t i = 0; i < c.policy_dates.size(); ++i)
        os << (i ? ", " : "") << c.policy_dates[i];
    os << "\n";
    return os.str();
}

inline std::string config_hash(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a(canonical_config(c))));
    return buf;
}

/// One point of the scenario cross product, in deterministic output order.
struct ScenarioCell {
    Mode mode = Mode::Dynamic;
    bool ratchet = true;
    bool cash_fund = true;
    double cash_rate = 0.04;
    double tax_rate = 0.0;

    ContractSpec apply(ContractSpec base) const {
        base.ratchet = ratchet;
        base.cash_fund = cash_fund;
        base.cash_rate = cash_rate;
        base.tax_rate = tax_rate;
        return base;
    }
};

inline std::vector<ScenarioCell> expand_cells(const RunConfig& cfg) {
    const std::vector<Mode> modes =
        cfg.sweep.mode.empty() ? std::vector<Mode>{cfg.mode} : cfg.sweep.mode;
    const std::vector<int> ratchets =
        cfg.sweep.ratchet.empty() ? std::vector<int>{cfg.contract.ratchet ? 1 : 0}
                                  : cfg.sweep.ratchet;
    const std::vector<int> cfs = cfg.sweep.cash_fund.empty()
                                     ? std::vector<int>{cfg.contract.cash_fund ? 1 : 0}
                                     : cfg.sweep.cash_fund;
    const std::vector<double> etas = cfg.sweep.cash_rate.empty()
                                         ? std::vector<double>{cfg.contract.cash_rate}
                                         : cfg.sweep.cash_rate;
    const std::vector<double> thetas = cfg.sweep.tax_rate.empty()
                                           ? std::vector<double>{cfg.contract.tax_rate}
                                           : cfg.sweep.tax_rate;
    std::vector<ScenarioCell> cells;
    for (Mode m : modes)
        for (int rat : ratchets)
            for (int cf : cfs)
                for (double eta : etas)
                    for (double theta : thetas)
                        cells.push_back({m, rat != 0, cf != 0, eta, theta});
    return cells;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline std::string fmt(double v, const char* spec = "%.10g") {
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string fee_str(double bps) { return fmt(bps, "%.4f"); }

// run the per-cell jobs on a small pool, results kept in cell order
template <typename T>
std::vector<T> run_cells(int threads, int n, const std::function<T(int)>& job) {
    std::vector<T> results(static_cast<size_t>(n));
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) results[static_cast<size_t>(i)] = job(i);
        return results;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
            results[static_cast<size_t>(i)] = job(i);
    };
    std::vector<std::future<void>> pool;
    const int k = std::min(threads, n);
    pool.reserve(static_cast<size_t>(k));
    for (int t = 0; t < k; ++t) pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
    return results;
}

}  // namespace detail

inline void write_manifest(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::string text = canonical_config(cfg);
    text += "config_hash = " + config_hash(cfg) + "\n";
    detail::write_text_file(fs::path(cfg.out_dir) / "manifest.txt", text);
}

/// price: value the configured contract once and emit a one-row CSV.
inline void cmd_price(const RunConfig& cfg) {
    write_manifest(cfg);
    const Grid grid = build_grid(cfg.contract, cfg.grid);
    const SolveResult res = value_contract(cfg.contract, cfg.market, grid, cfg.mode);
    std::string csv = "mode,ratchet,cash_fund,cash_rate,tax_rate,fee_bps,value,premium,config_hash\n";
    csv += std::string(to_string(cfg.mode)) + "," + (cfg.contract.ratchet ? "true" : "false") +
           "," + (cfg.contract.cash_fund ? "true" : "false") + "," +
           detail::fmt(cfg.contract.cash_rate) + "," + detail::fmt(cfg.contract.tax_rate) + "," +
           detail::fee_str(cfg.contract.guarantee_fee * 1e4) + "," +
           detail::fmt(res.value_at_inception) + "," + detail::fmt(cfg.contract.premium) + "," +
           config_hash(cfg) + "\n";
    detail::write_text_file(std::filesystem::path(cfg.out_dir) / "price.csv", csv);
}

struct FeeRow {
    ScenarioCell cell;
    FeeResult fee;
};

inline std::vector<FeeRow> run_fee_rows(const RunConfig& cfg) {
    const auto cells = expand_cells(cfg);
    std::function<FeeRow(int)> job = [&](int i) {
        const ScenarioCell& cell = cells[static_cast<size_t>(i)];
        ContractSpec spec = cell.apply(cfg.contract);
        FeeRow row;
        row.cell = cell;
        row.fee = fair_fee(spec, cfg.market, cfg.grid, cell.mode, cfg.fee_search);
        return row;
    };
    return detail::run_cells<FeeRow>(cfg.threads, static_cast<int>(cells.size()), job);
}

inline std::string fee_rows_csv(const RunConfig& cfg, const std::vector<FeeRow>& rows) {
    std::string csv =
        "mode,ratchet,cash_fund,cash_rate,tax_rate,fee_bps,status,gap,value,"
        "num_account,num_base,num_time,account_max,base_max,config_hash\n";
    const std::string hash = config_hash(cfg);
    for (const auto& r : rows) {
        csv += std::string(to_string(r.cell.mode)) + "," + (r.cell.ratchet ? "true" : "false") +
               "," + (r.cell.cash_fund ? "true" : "false") + "," + detail::fmt(r.cell.cash_rate) +
               "," + detail::fmt(r.cell.tax_rate) + ",";
        if (r.fee.status == FeeStatus::ok)
            csv += detail::fee_str(r.fee.fee_bps) + ",ok," + detail::fmt(r.fee.gap_at_fee) + "," +
                   detail::fmt(r.fee.value_at_fee) + ",";
        else
            csv += std::string("NA,") + to_string(r.fee.status) + ",NA,NA,";
        csv += std::to_string(cfg.grid.num_account) + "," + std::to_string(cfg.grid.num_base) +
               "," + std::to_string(cfg.grid.num_time) + "," + detail::fmt(cfg.grid.account_max) +
               "," + detail::fmt(cfg.grid.base_max) + "," + hash + "\n";
    }
    return csv;
}

/// fair-fee: calibrate every scenario cell and emit one row per cell.
inline void cmd_fair_fee(const RunConfig& cfg) {
    write_manifest(cfg);
    const auto rows = run_fee_rows(cfg);
    detail::write_text_file(std::filesystem::path(cfg.out_dir) / "fair_fee.csv",
                            fee_rows_csv(cfg, rows));
}

/// policy: solve once and export the withdrawal-ratio surfaces per date.
inline void cmd_policy(const RunConfig& cfg) {
    write_manifest(cfg);
    const int n = cfg.contract.periods();
    for (int k : cfg.policy_dates)
        if (k < 1 || k > n - 1)
            throw ConfigError("policy date " + std::to_string(k) + " is not a withdrawal date");
    const Grid grid = build_grid(cfg.contract, cfg.grid);
    const SolveResult res = value_contract(cfg.contract, cfg.market, grid, cfg.mode);
    const std::string hash = config_hash(cfg);

    auto write_surface = [&](const Surface& s, const std::string& name) {
        std::string csv = "# config_hash=" + hash + "\n";
        csv += "x\\gamma";
        for (int j = 0; j < grid.ny(); ++j) csv += "," + detail::fmt(grid.base[j]);
        csv += "\n";
        for (int i = 0; i < grid.nx(); ++i) {
            csv += detail::fmt(grid.account[i]);
            for (int j = 0; j < grid.ny(); ++j) csv += "," + detail::fmt(s.at(i, j), "%.8g");
            csv += "\n";
        }
        detail::write_text_file(std::filesystem::path(cfg.out_dir) / name, csv);
    };

    for (int k : cfg.policy_dates) {
        const RatioSurfaces ratios = policy_ratio_export(res, cfg.contract, k);
        write_surface(ratios.guar_ratio, "wstar_guar_t" + std::to_string(k) + ".csv");
        write_surface(ratios.max_ratio, "wstar_max_t" + std::to_string(k) + ".csv");
    }
}

struct SimulateRow {
    ScenarioCell cell;
    FeeResult fee;
    bool has_stats = false;
    ScenarioStats stats;
};

inline std::vector<SimulateRow> run_simulate_rows(const RunConfig& cfg) {
    const auto cells = expand_cells(cfg);
    std::function<SimulateRow(int)> job = [&](int i) {
        const ScenarioCell& cell = cells[static_cast<size_t>(i)];
        ContractSpec spec = cell.apply(cfg.contract);
        SimulateRow row;
        row.cell = cell;
        if (cfg.fee_given) {
            row.fee.status = FeeStatus::ok;
            row.fee.fee_bps = cfg.contract.guarantee_fee * 1e4;
        } else {
            row.fee = fair_fee(spec, cfg.market, cfg.grid, cell.mode, cfg.fee_search);
        }
        if (row.fee.status != FeeStatus::ok) return row;  // emits an NA row
        spec.guarantee_fee = row.fee.fee_bps * 1e-4;
        const Grid grid = build_grid(spec, cfg.grid);
        const SolveResult res = value_contract(spec, cfg.market, grid, cell.mode);
        const PathBatch batch = simulate_paths(cfg.sim.n_paths, cfg.sim.seed, cfg.market, spec);
        row.stats = run_policy(batch, res, spec, cfg.market);
        row.has_stats = true;
        return row;
    };
    return detail::run_cells<SimulateRow>(cfg.threads, static_cast<int>(cells.size()), job);
}

inline std::string simulate_rows_csv(const RunConfig& cfg, const std::vector<SimulateRow>& rows) {
    std::string csv =
        "mode,ratchet,cash_fund,cash_rate,tax_rate,fee_bps,surrender_rate,avg_surrender_time,"
        "avg_duration,prop_no_withdrawal,prop_below_guarantee,prop_at_guarantee,prop_excess,"
        "mc_value,mc_std_error,n_paths,seed,config_hash\n";
    const std::string hash = config_hash(cfg);
    for (const auto& r : rows) {
        csv += std::string(to_string(r.cell.mode)) + "," + (r.cell.ratchet ? "true" : "false") +
               "," + (r.cell.cash_fund ? "true" : "false") + "," + detail::fmt(r.cell.cash_rate) +
               "," + detail::fmt(r.cell.tax_rate) + ",";
        if (!r.has_stats) {
            csv += "NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,";
        } else {
            const auto& st = r.stats;
            csv += detail::fee_str(r.fee.fee_bps) + "," + detail::fmt(st.surrender_rate, "%.6f") +
                   "," + (st.any_surrender ? detail::fmt(st.avg_surrender_time, "%.6f") : "NA") +
                   "," + detail::fmt(st.avg_duration, "%.6f") + "," +
                   detail::fmt(st.prop_no_withdrawal, "%.6f") + "," +
                   detail::fmt(st.prop_below_guarantee, "%.6f") + "," +
                   detail::fmt(st.prop_at_guarantee, "%.6f") + "," +
                   detail::fmt(st.prop_excess, "%.6f") + "," + detail::fmt(st.mc_value) + "," +
                   detail::fmt(st.mc_std_error) + ",";
        }
        csv += std::to_string(cfg.sim.n_paths) + "," + std::to_string(cfg.sim.seed) + "," + hash +
               "\n";
    }
    return csv;
}

/// simulate: calibrate (or take the configured fee), solve, replay, and emit
/// one row per scenario cell; non-viable cells become NA rows.
inline void cmd_simulate(const RunConfig& cfg) {
    write_manifest(cfg);
    const auto rows = run_simulate_rows(cfg);
    detail::write_text_file(std::filesystem::path(cfg.out_dir) / "simulate.csv",
                            simulate_rows_csv(cfg, rows));
}

}  // namespace hybridva
