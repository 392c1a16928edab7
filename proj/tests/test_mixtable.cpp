#include <doctest.h>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "mixnet/mixture_table.hpp"
#include "mixnet/rng.hpp"
#include "oracles.hpp"

using namespace mixnet;

namespace {

Schema make_schema(std::initializer_list<Column> cols) {
    Schema s;
    s.columns = cols;
    return s;
}

std::shared_ptr<const GaussianMixture> gauss1d_ptr(const std::string& name, double mu,
                                                   double var) {
    GaussianComponent c;
    c.mean = Eigen::VectorXd::Constant(1, mu);
    c.covariance = Eigen::MatrixXd::Constant(1, 1, var);
    return std::make_shared<const GaussianMixture>(std::vector<std::string>{name},
                                                   std::vector<GaussianComponent>{c});
}

TableConfig quick_config(std::uint64_t seed) {
    TableConfig cfg;
    cfg.em.component_grid = {1, 2};
    cfg.em.restarts = 2;
    cfg.em.seed = seed;
    return cfg;
}

// A mixed dataset: binary q, continuous x whose mean depends on q.
Dataset mixed_data(std::size_t rows, std::uint64_t seed) {
    const Schema s = make_schema({{"q", ColumnKind::discrete, 2}, {"x", ColumnKind::continuous, 0}});
    Rng rng(seed);
    std::vector<double> cells;
    for (std::size_t r = 0; r < rows; ++r) {
        const double q = rng.uniform() < 0.7 ? 0.0 : 1.0;
        cells.push_back(q);
        cells.push_back(0.2 + 0.5 * q + 0.05 * rng.normal());
    }
    return Dataset(s, cells);
}

}  // namespace

TEST_CASE("fit_table: unsmoothed probabilities are exact empirical frequencies") {
    const Schema s = make_schema({{"q", ColumnKind::discrete, 2}});
    std::vector<double> cells;
    for (int i = 0; i < 70; ++i) cells.push_back(0.0);
    for (int i = 0; i < 30; ++i) cells.push_back(1.0);
    const Dataset d(s, cells);

    TableConfig cfg = quick_config(1);
    cfg.pseudocount = 0.0;
    const MixtureTable t = fit_table(d, {"q"}, {}, cfg);
    REQUIRE(t.cell_count() == 2);
    CHECK(t.prob(0) == 0.7);
    CHECK(t.prob(1) == 0.3);
}

TEST_CASE("fit_table: additive smoothing formula") {
    const Schema s = make_schema({{"q", ColumnKind::discrete, 2}});
    std::vector<double> cells;
    for (int i = 0; i < 70; ++i) cells.push_back(0.0);
    for (int i = 0; i < 30; ++i) cells.push_back(1.0);
    const Dataset d(s, cells);

    TableConfig cfg = quick_config(1);
    cfg.pseudocount = 0.5;
    const MixtureTable t = fit_table(d, {"q"}, {}, cfg);
    CHECK(t.prob(0) == 70.5 / 101.0);  // 0.69802...
    CHECK(t.prob(1) == 30.5 / 101.0);  // 0.30198...
    CHECK(std::abs(t.prob(0) - 0.69802) < 1e-5);
    CHECK(std::abs(t.prob(1) - 0.30198) < 1e-5);
}

TEST_CASE("fit_table: empty cells fall back to the all-rows mixture, shared") {
    const Schema s =
        make_schema({{"q", ColumnKind::discrete, 3}, {"x", ColumnKind::continuous, 0}});
    Rng rng(4);
    std::vector<double> cells;
    for (int i = 0; i < 100; ++i) {
        cells.push_back(i < 50 ? 0.0 : 1.0);
        cells.push_back(rng.uniform());
    }
    const Dataset d(s, cells);

    TableConfig cfg = quick_config(2);
    cfg.min_cell_rows = 5;
    const MixtureTable t = fit_table(d, {"q"}, {"x"}, cfg);
    REQUIRE(t.cell_count() == 3);
    CHECK(t.mixture_ptr(2) != t.mixture_ptr(0));
    CHECK(t.mixture_ptr(2) != t.mixture_ptr(1));
    CHECK(t.prob(2) == 0.5 / 101.5);

    // Two thin cells share one fallback object.
    const Schema s4 =
        make_schema({{"q", ColumnKind::discrete, 4}, {"x", ColumnKind::continuous, 0}});
    std::vector<double> cells4;
    for (int i = 0; i < 100; ++i) {
        cells4.push_back(i < 50 ? 0.0 : 1.0);
        cells4.push_back(rng.uniform());
    }
    const MixtureTable t4 = fit_table(Dataset(s4, cells4), {"q"}, {"x"}, cfg);
    CHECK(t4.mixture_ptr(2) == t4.mixture_ptr(3));
}

TEST_CASE("fit_table: degenerate variable sets") {
    const Dataset d = mixed_data(60, 9);
    TableConfig cfg = quick_config(3);

    // Q empty: one cell, probability 1.
    const MixtureTable no_q = fit_table(d, {}, {"x"}, cfg);
    REQUIRE(no_q.cell_count() == 1);
    CHECK(no_q.prob(0) == 1.0);

    // C empty: unit mixtures everywhere.
    const MixtureTable no_c = fit_table(d, {"q"}, {}, cfg);
    REQUIRE(no_c.cell_count() == 2);
    CHECK(no_c.mixture(0).dimension() == 0);
    CHECK(no_c.mixture_ptr(0) == no_c.mixture_ptr(1));

    CHECK_THROWS(fit_table(d, {"nope"}, {"x"}, cfg));
    CHECK_THROWS(fit_table(d, {"q"}, {"q"}, cfg));  // kind mismatch
}

TEST_CASE("fit_table: probabilities normalize after fit") {
    const Dataset d = mixed_data(200, 12);
    TableConfig cfg = quick_config(5);
    const MixtureTable t = fit_table(d, {"q"}, {"x"}, cfg);
    double sum = 0.0;
    for (std::size_t c = 0; c < t.cell_count(); ++c) sum += t.prob(c);
    CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("fit_table: deterministic given seed") {
    const Dataset d = mixed_data(150, 21);
    const MixtureTable a = fit_table(d, {"q"}, {"x"}, quick_config(7));
    const MixtureTable b = fit_table(d, {"q"}, {"x"}, quick_config(7));
    REQUIRE(a.cell_count() == b.cell_count());
    for (std::size_t c = 0; c < a.cell_count(); ++c) {
        CHECK(a.prob(c) == b.prob(c));
        REQUIRE(a.mixture(c).component_count() == b.mixture(c).component_count());
        for (std::size_t k = 0; k < a.mixture(c).component_count(); ++k) {
            CHECK(a.mixture(c).components()[k].weight == b.mixture(c).components()[k].weight);
            CHECK(a.mixture(c).components()[k].mean == b.mixture(c).components()[k].mean);
            CHECK(a.mixture(c).components()[k].covariance ==
                  b.mixture(c).components()[k].covariance);
        }
    }
}

TEST_CASE("cell indexing is mixed radix, first variable most significant") {
    std::vector<std::shared_ptr<const GaussianMixture>> units(6,
                                                              std::make_shared<GaussianMixture>());
    const MixtureTable t({"a", "b"}, {2, 3}, {}, std::vector<double>(6, 1.0 / 6.0), units);
    CHECK(t.cell_index(std::array<int, 2>{0, 0}) == 0);
    CHECK(t.cell_index(std::array<int, 2>{0, 2}) == 2);
    CHECK(t.cell_index(std::array<int, 2>{1, 0}) == 3);
    CHECK(t.cell_index(std::array<int, 2>{1, 2}) == 5);
    CHECK(t.cell_assignment(4) == std::vector<int>{1, 1});
    CHECK_THROWS(t.cell_index(std::array<int, 2>{2, 0}));
    CHECK_THROWS(t.cell_index(std::array<int, 2>{0, 3}));
}

TEST_CASE("log_density: no discrete part reduces to the mixture") {
    const MixtureTable t({}, {}, {"x"}, {1.0}, {gauss1d_ptr("x", 0.0, 1.0)});
    const double ld = t.log_density({}, Eigen::VectorXd::Zero(1));
    CHECK(std::abs(ld - (-0.9189385)) < 1e-7);
}

TEST_CASE("log_density: no continuous part is the log probability") {
    std::vector<std::shared_ptr<const GaussianMixture>> units(4,
                                                              std::make_shared<GaussianMixture>());
    const MixtureTable t({"a"}, {4}, {}, {0.25, 0.25, 0.25, 0.25}, units);
    CHECK(t.log_density(std::array<int, 1>{2}, Eigen::VectorXd(0)) == std::log(0.25));
}

TEST_CASE("log_density: mixed table matches the two-term sum") {
    const Dataset d = mixed_data(300, 33);
    const MixtureTable t = fit_table(d, {"q"}, {"x"}, quick_config(8));
    Rng rng(55);
    for (int i = 0; i < 20; ++i) {
        const int q = static_cast<int>(rng.index(2));
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, rng.uniform(-0.2, 1.1));
        const std::size_t cell = t.cell_index(std::array<int, 1>{q});
        const double expected = std::log(t.prob(cell)) + t.mixture(cell).log_density(x);
        CHECK(t.log_density(std::array<int, 1>{q}, x) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("marginalize_out continuous: probs unchanged, mixtures restricted") {
    const Schema s = make_schema({{"x", ColumnKind::continuous, 0},
                                  {"y", ColumnKind::continuous, 0}});
    Rng rng(2);
    std::vector<double> cells;
    for (int r = 0; r < 120; ++r) {
        const double x = rng.uniform();
        cells.push_back(x);
        cells.push_back(0.5 * x + 0.1 * rng.normal());
    }
    const Dataset d(s, cells);
    const MixtureTable t = fit_table(d, {}, {"x", "y"}, quick_config(6));
    const MixtureTable m = marginalize_out(t, "y");
    REQUIRE(m.cell_count() == t.cell_count());
    CHECK(m.prob(0) == t.prob(0));
    CHECK(m.continuous_variables() == std::vector<std::string>{"x"});

    // Parameter-exact match with gmm-level marginalization.
    const GaussianMixture direct = t.mixture(0).marginalize({"x"});
    REQUIRE(m.mixture(0).component_count() == direct.component_count());
    for (std::size_t k = 0; k < direct.component_count(); ++k) {
        CHECK(m.mixture(0).components()[k].weight == direct.components()[k].weight);
        CHECK(m.mixture(0).components()[k].mean == direct.components()[k].mean);
        CHECK(m.mixture(0).components()[k].covariance == direct.components()[k].covariance);
    }
}

TEST_CASE("marginalize_out continuous: shared fallback stays shared") {
    const Schema s = make_schema({{"q", ColumnKind::discrete, 4},
                                  {"x", ColumnKind::continuous, 0},
                                  {"y", ColumnKind::continuous, 0}});
    Rng rng(14);
    std::vector<double> cells;
    for (int r = 0; r < 80; ++r) {
        cells.push_back(r < 40 ? 0.0 : 1.0);
        cells.push_back(rng.uniform());
        cells.push_back(rng.uniform());
    }
    TableConfig cfg = quick_config(17);
    cfg.min_cell_rows = 5;
    const MixtureTable t = fit_table(Dataset(s, cells), {"q"}, {"x", "y"}, cfg);
    REQUIRE(t.mixture_ptr(2) == t.mixture_ptr(3));
    const MixtureTable m = marginalize_out(t, "y");
    CHECK(m.mixture_ptr(2) == m.mixture_ptr(3));
}

TEST_CASE("marginalize_out discrete: the two-cell combine example") {
    const MixtureTable t({"q"}, {2}, {"x"}, {0.6, 0.4},
                         {gauss1d_ptr("x", 0.0, 1.0), gauss1d_ptr("x", 1.0, 1.0)});
    const MixtureTable m = marginalize_out(t, "q");
    REQUIRE(m.cell_count() == 1);
    CHECK(m.prob(0) == 1.0);
    const double density = std::exp(m.mixture(0).log_density(Eigen::VectorXd::Zero(1)));
    CHECK(std::abs(density - 0.3361546) < 2e-6);
}

TEST_CASE("marginalize_out discrete: brute-force density consistency") {
    const Schema s = make_schema({{"a", ColumnKind::discrete, 2},
                                  {"b", ColumnKind::discrete, 3},
                                  {"x", ColumnKind::continuous, 0}});
    Rng rng(77);
    std::vector<double> cells;
    for (int r = 0; r < 400; ++r) {
        const int a = static_cast<int>(rng.index(2));
        const int b = static_cast<int>(rng.index(3));
        cells.push_back(a);
        cells.push_back(b);
        cells.push_back(0.1 + 0.2 * a + 0.15 * b + 0.08 * rng.normal());
    }
    const Dataset d(s, cells);
    const MixtureTable t = fit_table(d, {"a", "b"}, {"x"}, quick_config(9));
    const MixtureTable m = marginalize_out(t, "a");
    REQUIRE(m.cell_count() == 3);

    // Sum over a's values at fixed (b, x): probabilities and densities.
    for (int b = 0; b < 3; ++b) {
        const std::size_t mc = m.cell_index(std::array<int, 1>{b});
        double psum = 0.0;
        for (int a = 0; a < 2; ++a) psum += t.prob(t.cell_index(std::array<int, 2>{a, b}));
        CHECK(m.prob(mc) == doctest::Approx(psum).epsilon(1e-14));

        for (double x = -0.2; x <= 1.2; x += 0.13) {
            const Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x);
            double total = 0.0;
            for (int a = 0; a < 2; ++a) {
                total += std::exp(t.log_density(std::array<int, 2>{a, b}, xv));
            }
            CHECK(std::exp(m.log_density(std::array<int, 1>{b}, xv)) ==
                  doctest::Approx(total).epsilon(1e-10));
        }
    }
}

TEST_CASE("marginalize_out continuous: quadrature consistency") {
    const Dataset d = mixed_data(250, 44);
    const MixtureTable t = fit_table(d, {"q"}, {"x"}, quick_config(10));
    const MixtureTable m = marginalize_out(t, "x");
    for (int q = 0; q < 2; ++q) {
        const double direct = std::exp(m.log_density(std::array<int, 1>{q}, Eigen::VectorXd(0)));
        const double numeric = oracle::simpson(
            [&](double x) {
                return std::exp(
                    t.log_density(std::array<int, 1>{q}, Eigen::VectorXd::Constant(1, x)));
            },
            -6.0, 7.0, 8000);
        CHECK(std::abs(direct - numeric) < 1e-8);
    }
}

TEST_CASE("marginalize_out: probabilities stay normalized") {
    const Schema s = make_schema({{"a", ColumnKind::discrete, 2},
                                  {"b", ColumnKind::discrete, 2},
                                  {"x", ColumnKind::continuous, 0}});
    Rng rng(31);
    std::vector<double> cells;
    for (int r = 0; r < 200; ++r) {
        cells.push_back(static_cast<double>(rng.index(2)));
        cells.push_back(static_cast<double>(rng.index(2)));
        cells.push_back(rng.uniform());
    }
    const MixtureTable t = fit_table(Dataset(s, cells), {"a", "b"}, {"x"}, quick_config(13));
    for (const char* var : {"a", "b"}) {
        const MixtureTable m = marginalize_out(t, var);
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cell_count(); ++c) sum += m.prob(c);
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    CHECK_THROWS(marginalize_out(t, "zzz"));
}

TEST_CASE("param_count: probabilities plus mixture parameters") {
    const MixtureTable t({"q"}, {2}, {"x"}, {0.6, 0.4},
                         {gauss1d_ptr("x", 0.0, 1.0), gauss1d_ptr("x", 1.0, 1.0)});
    // (2 - 1) cell probabilities + two M=1 d=1 mixtures of 2 parameters each.
    CHECK(param_count(t) == 1 + 2 + 2);

    std::vector<std::shared_ptr<const GaussianMixture>> units(3,
                                                              std::make_shared<GaussianMixture>());
    const MixtureTable pure({"a"}, {3}, {}, {0.2, 0.3, 0.5}, units);
    CHECK(param_count(pure) == 2);
}
