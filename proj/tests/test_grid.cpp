#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hybridva/grid.hpp"

using namespace hybridva;
using Catch::Approx;

namespace {

ContractSpec spec100() {
    ContractSpec c;
    c.premium = 100.0;
    return c;
}

}  // namespace

TEST_CASE("uniform grid endpoints and midpoints") {
    GridConfig cfg;
    cfg.num_account = 3;
    cfg.num_base = 2;
    cfg.account_min = 1e-6;
    cfg.account_max = 2.0;
    cfg.base_max = 500.0;
    cfg.spacing = GridSpacing::uniform;
    const Grid g = build_grid(spec100(), cfg);  // premium outside [min, max]: plain uniform
    REQUIRE(g.nx() == 3);
    CHECK(g.account[0] == 1e-6);
    CHECK(g.account[1] == Approx(1.0000005).epsilon(1e-9));
    CHECK(g.account[2] == 2.0);
    REQUIRE(g.ny() == 2);
    CHECK(g.base[0] == 0.0);
    CHECK(g.base[1] == 500.0);
}

TEST_CASE("premium is a node on both axes") {
    for (GridSpacing spacing :
         {GridSpacing::uniform, GridSpacing::stretched, GridSpacing::geometric}) {
        GridConfig cfg;
        cfg.spacing = spacing;
        const Grid g = build_grid(spec100(), cfg);
        CHECK(std::count(g.account.begin(), g.account.end(), 100.0) == 1);
        CHECK(std::count(g.base.begin(), g.base.end(), 100.0) == 1);
        for (int i = 1; i < g.nx(); ++i) REQUIRE(g.account[i] > g.account[i - 1]);
        for (int j = 1; j < g.ny(); ++j) REQUIRE(g.base[j] > g.base[j - 1]);
        CHECK(g.account.front() == cfg.account_min);
        CHECK(g.account.back() == cfg.account_max);
        CHECK(g.base.front() == 0.0);
        CHECK(g.base.back() == cfg.base_max);
    }
}

TEST_CASE("stretched spacing resolves the low-account region") {
    GridConfig cfg;
    cfg.spacing = GridSpacing::stretched;
    const Grid g = build_grid(spec100(), cfg);
    const double low = g.account[1] - g.account[0];
    const double high = g.account[g.nx() - 1] - g.account[g.nx() - 2];
    CHECK(low < 1.5);
    CHECK(high > 10.0);
}

TEST_CASE("grid validation") {
    GridConfig cfg;
    cfg.num_account = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = GridConfig{};
    cfg.num_time = 2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = GridConfig{};
    cfg.account_min = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = GridConfig{};
    cfg.account_min = 600.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("surface interpolation reproduces planes exactly") {
    GridConfig cfg;
    cfg.spacing = GridSpacing::stretched;
    const Grid g = build_grid(spec100(), cfg);
    Surface s(g.nx(), g.ny());
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) s.at(i, j) = 3.0 + 0.5 * g.account[i] + 0.25 * g.base[j];

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(g.account.front(), g.account.back());
    std::uniform_real_distribution<double> uy(0.0, g.base.back());
    for (int it = 0; it < 2000; ++it) {
        const double x = ux(rng), y = uy(rng);
        const double expect = 3.0 + 0.5 * x + 0.25 * y;
        CHECK(interp_surface(g, s, x, y) == Approx(expect).margin(1e-9 * (1.0 + expect)));
    }
    // nodal queries reproduce nodal values
    for (int j = 0; j < g.ny(); j += 7)
        for (int i = 0; i < g.nx(); i += 7)
            CHECK(interp_surface(g, s, g.account[i], g.base[j]) == Approx(s.at(i, j)));
}

TEST_CASE("interpolation of monotone data stays within data bounds") {
    GridConfig cfg;
    const Grid g = build_grid(spec100(), cfg);
    Surface s(g.nx(), g.ny());
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            s.at(i, j) = std::max(g.account[i] - 80.0, 0.0) + 0.1 * g.base[j];  // kinked, monotone

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(g.account.front(), g.account.back());
    std::uniform_real_distribution<double> uy(0.0, g.base.back());
    InterpHint hint;
    for (int it = 0; it < 5000; ++it) {
        const double x = ux(rng), y = uy(rng);
        const double v = interp_surface(g, s, x, y, hint);
        const int i = locate_cell(g.account, x, 0);
        const int j = locate_cell(g.base, y, 0);
        double lo = 1e300, hi = -1e300;
        for (int a = i; a <= i + 1; ++a)
            for (int b = j; b <= j + 1; ++b) {
                lo = std::min(lo, s.at(a, b));
                hi = std::max(hi, s.at(a, b));
            }
        CHECK(v >= lo - 1e-9 * (1.0 + std::abs(lo)));
        CHECK(v <= hi + 1e-9 * (1.0 + std::abs(hi)));
    }
    CHECK(hint.clamped == 0);
}

TEST_CASE("out-of-range queries clamp and count") {
    GridConfig cfg;
    const Grid g = build_grid(spec100(), cfg);
    Surface s(g.nx(), g.ny(), 5.0);
    InterpHint hint;
    CHECK(interp_surface(g, s, 1000.0, 100.0, hint) == Approx(5.0));
    CHECK(interp_surface(g, s, 100.0, 1000.0, hint) == Approx(5.0));
    CHECK(interp_surface(g, s, 100.0, 100.0, hint) == Approx(5.0));
    CHECK(hint.clamped == 2);
}

TEST_CASE("cell lookup with hints") {
    std::vector<double> nodes{0.0, 1.0, 2.0, 5.0, 10.0};
    CHECK(locate_cell(nodes, -1.0, 3) == 0);
    CHECK(locate_cell(nodes, 0.5, 0) == 0);
    CHECK(locate_cell(nodes, 1.0, 3) <= 1);
    CHECK(locate_cell(nodes, 7.0, 0) == 3);
    CHECK(locate_cell(nodes, 99.0, 0) == 3);
}
