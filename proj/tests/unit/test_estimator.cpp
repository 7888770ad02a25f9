#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>

#include "../oracles.hpp"
#include "estimator.hpp"
#include "evalkit.hpp"

using namespace cellwise;
using namespace cellwise::estimator;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Input;
}

DataTable gaussian_table(Index n, const SymMatrix& sigma, std::uint64_t seed) {
    Rng rng(seed);
    return DataTable(evalkit::gen_gaussian(n, sigma, rng));
}

Matrix ml_cov(const Matrix& x) {
    const Matrix c = x.rowwise() - x.colwise().mean();
    return c.transpose() * c / static_cast<double>(x.rows());
}

void check_prefix_and_cap(const FlagSet& flags, const DataTable& z, const CovModel& model, Index cap) {
    std::vector<Index> counts(static_cast<size_t>(z.cols()), 0);
    for (Index i = 0; i < z.rows(); ++i) {
        const auto trace = cellhandler::trace_row(z.values.row(i).transpose(), model);
        const auto& cells = flags.row_cells[i];
        CHECK(std::equal(cells.begin(), cells.end(), trace.path.order.begin()));
        for (Index j : cells) ++counts[j];
    }
    for (Index j = 0; j < z.cols(); ++j) {
        CHECK(counts[j] == flags.column_counts[j]);
        CHECK(flags.column_counts[j] <= std::max(cap, z.missing_count(j)));
    }
}

}  // namespace

TEST_CASE("standardize") {
    SUBCASE("symmetric column") {
        Matrix x(5, 1);
        x << 1, 2, 3, 4, 5;
        const auto [z, sc] = standardize(DataTable(x));
        CHECK(sc.locations(0) == 3.0);
        CHECK(sc.scales(0) == doctest::Approx(1.4826));
        CHECK(z.values(2, 0) == 0.0);
        CHECK(z.values(4, 0) == doctest::Approx(2.0 / 1.4826));
    }
    SUBCASE("constant column is rejected by name") {
        Matrix x(4, 2);
        x << 1, 7, 2, 7, 3, 7, 4, 7;
        DataTable t(x, {"a", "flat"});
        CHECK(kind_of([&] { standardize(t); }) == ErrorKind::Input);
        try {
            standardize(t);
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("flat") != std::string::npos);
        }
    }
    SUBCASE("missing cells are skipped") {
        Matrix x(5, 1);
        x << 1, kNaN, 10, 2, 4;
        const auto [z, sc] = standardize(DataTable(x));
        // observed 1,2,4,10: median 3, deviations 2,1,1,7 -> MAD 1.5
        CHECK(sc.locations(0) == 3.0);
        CHECK(sc.scales(0) == doctest::Approx(1.5 * 1.4826));
        CHECK(std::isnan(z.values(1, 0)));
    }
    SUBCASE("model round trip") {
        std::mt19937_64 gen(1);
        const auto m = CovModel::make(oracle::random_vector(4, gen), SymMatrix(oracle::random_spd(4, gen)));
        ColumnScaler sc{oracle::random_vector(4, gen), Vector::Constant(4, 2.0) + oracle::random_vector(4, gen).cwiseAbs()};
        const auto back = unstandardize_model(standardize_model(m, sc), sc);
        CHECK((back.mu - m.mu).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((back.sigma.matrix() - m.sigma.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("clr and log transforms") {
    const double e = std::exp(1.0);
    Matrix x(3, 3);
    x << 1, 1, 1, e, e, e * e, 1, kNaN, 1;
    const auto y = clr_transform(DataTable(x)).values;
    CHECK(y.row(0).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(y(1, 0) == doctest::Approx(-1.0 / 3));
    CHECK(y(1, 1) == doctest::Approx(-1.0 / 3));
    CHECK(y(1, 2) == doctest::Approx(2.0 / 3));
    CHECK(y(2, 0) == 0.0);
    CHECK(std::isnan(y(2, 1)));
    CHECK(y(2, 2) == 0.0);

    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> pos(0.01, 100.0);
    Matrix r(50, 6);
    for (Index i = 0; i < 50; ++i)
        for (Index j = 0; j < 6; ++j) r(i, j) = (i + j) % 7 == 0 ? kNaN : pos(gen);
    const auto c = clr_transform(DataTable(r)).values;
    for (Index i = 0; i < 50; ++i) {
        double s = 0;
        for (Index j = 0; j < 6; ++j)
            if (!std::isnan(c(i, j))) s += c(i, j);
        CHECK(std::abs(s) < 1e-10);
    }
    x(1, 1) = -1.0;
    CHECK(kind_of([&] { clr_transform(DataTable(x)); }) == ErrorKind::Input);
    CHECK(kind_of([&] { log_transform(DataTable(x)); }) == ErrorKind::Input);
    CHECK(log_transform(DataTable(r)).values(1, 1) == doctest::Approx(std::log(r(1, 1))));
}

TEST_CASE("spearman and the rank initial estimate") {
    SUBCASE("perfect dependence") {
        Matrix x(20, 2);
        for (Index i = 0; i < 20; ++i) x(i, 0) = x(i, 1) = std::pow(1.3, static_cast<double>(i)) - 5.0;
        CHECK(spearman(x.col(0), x.col(1)) == doctest::Approx(1.0));
        const auto m = initial_estimate(DataTable(x), {});
        CHECK(m.mu.isZero());
        CHECK(m.sigma(0, 0) == doctest::Approx(1.0));
        CHECK(m.sigma(0, 1) < 1.0);
        CHECK(m.sigma(0, 1) > 0.999);
        CHECK(sym_eigen(m.sigma).values(1) > 0.0);
    }
    SUBCASE("ties use average ranks") {
        Vector a(4), b(4);
        a << 1, 2, 2, 3;
        b << 1, 2, 3, 4;
        // ranks a: 1, 2.5, 2.5, 4
        const double ra = 2.5, mean = 2.5;
        Vector x(4), y(4);
        x << 1, ra, ra, 4;
        y << 1, 2, 3, 4;
        x.array() -= mean;
        y.array() -= mean;
        CHECK(spearman(a, b) == doctest::Approx(x.dot(y) / (x.norm() * y.norm())));
    }
    SUBCASE("independent columns") {
        const auto t = gaussian_table(500, SymMatrix::identity(4), 77);
        const auto m = initial_estimate(standardize(t).first, {});
        for (Index a = 0; a < 4; ++a)
            for (Index b = 0; b < 4; ++b) CHECK(std::abs(m.sigma(a, b) - (a == b ? 1.0 : 0.0)) < 0.1);
    }
    SUBCASE("diagonal and external") {
        const auto t = gaussian_table(30, SymMatrix::identity(3), 5);
        const auto diag = initial_estimate(t, {InitialMethod::Diagonal, std::nullopt});
        CHECK(diag.sigma.matrix() == Matrix::Identity(3, 3));
        Matrix bad(3, 3);
        bad << 1, 2, 0, 2, 1, 0, 0, 0, 1;
        CHECK_THROWS_AS(CovModel::make(Vector::Zero(3), SymMatrix(bad)), Error);
        CHECK_THROWS_AS(initial_estimate(t, {InitialMethod::External, std::nullopt}), Error);
    }
    SUBCASE("shape and sparsity errors") {
        const auto wide = gaussian_table(3, SymMatrix::identity(3), 6);
        CHECK(kind_of([&] { initial_estimate(wide, {}); }) == ErrorKind::Shape);
        Matrix x = gaussian_table(10, SymMatrix::identity(2), 7).values;
        for (Index i = 0; i < 8; ++i) x(i, i % 2) = kNaN;
        CHECK(kind_of([&] { initial_estimate(DataTable(x), {}); }) == ErrorKind::Sparsity);
    }
}

TEST_CASE("d_step examples") {
    const Index n = 40, d = 4;
    const auto id = CovModel::make(Vector::Zero(d), SymMatrix::identity(d));
    const double q = chi2_quantile(1, 0.99);
    SUBCASE("tiny values") {
        DataTable t(Matrix::Constant(n, d, 1e-3));
        CHECK(d_step(t, id, q, 10).cells.empty());
    }
    SUBCASE("one far cell") {
        DataTable t(Matrix::Zero(n, d));
        t.values(7, d - 1) = 50;
        const auto f = d_step(t, id, q, 10);
        REQUIRE(f.cells.size() == 1);
        CHECK(f.cells[0].row == 7);
        CHECK(f.cells[0].col == d - 1);
        CHECK(std::abs(f.cells[0].imputed) < 1e-12);
        CHECK(f.cells[0].residual == doctest::Approx(50.0));
        CHECK(f.imputed(7, d - 1) == doctest::Approx(0.0));
    }
    SUBCASE("column cap") {
        DataTable t(Matrix::Zero(n, d));
        for (Index i = 0; i < 16; ++i) t.values(i * 2, 1) = 50;
        const Index cap = column_cap(n, 0.25);
        CHECK(cap == 10);
        const auto f = d_step(t, id, q, cap);
        CHECK(f.column_counts[1] == cap);
        CHECK(static_cast<Index>(f.cells.size()) == cap);
        check_prefix_and_cap(f, t, id, cap);
    }
    SUBCASE("missing cells are charged first") {
        DataTable t(Matrix::Zero(n, d));
        for (Index i = 0; i < 6; ++i) t.values(i, 0) = kNaN;
        for (Index i = 10; i < 20; ++i) t.values(i, 0) = 40;
        const auto f = d_step(t, id, q, 8);
        CHECK(f.column_counts[0] == 8);
        Index missing = 0;
        for (const auto& c : f.cells) missing += c.missing ? 1 : 0;
        CHECK(missing == 6);
        CHECK(f.imputed.allFinite());
    }
}

TEST_CASE("d_step: prefix and cap over contaminated data") {
    const auto sigma = evalkit::gen_a09(6);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto clean = gaussian_table(60, sigma, seed);
        evalkit::ContaminationSpec spec;
        spec.seed = seed;
        spec.gamma = 4;
        auto dirty = evalkit::contaminate(clean, sigma, spec).data;
        for (Index i = 0; i < 60; i += 13) dirty.values(i, static_cast<Index>(seed % 6)) = kNaN;
        const auto model = CovModel::make(Vector::Zero(6), sigma);
        const Index cap = column_cap(60, 0.25);
        const auto f = d_step(dirty, model, chi2_quantile(1, 0.99), cap);
        check_prefix_and_cap(f, dirty, model, cap);
    }
}

TEST_CASE("i_step examples") {
    SUBCASE("no flags gives the ML estimate") {
        const auto t = gaussian_table(50, evalkit::gen_a09(3), 3);
        const auto id = CovModel::make(Vector::Zero(3), SymMatrix::identity(3));
        const auto f = d_step(t, id, 1e300, 50);
        REQUIRE(f.cells.empty());
        const auto r = i_step(t, f, id);
        CHECK((r.model.mu - t.values.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((r.model.sigma.matrix() - ml_cov(t.values)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(r.clipped_eigenvalues == 0);
    }
    SUBCASE("one imputed cell adds its conditional variance") {
        const Index n = 10;
        Matrix x(n, 2);
        for (Index i = 0; i < n; ++i) x.row(i) << std::sin(i * 1.0), std::cos(i * 2.0);
        Matrix xm = x;
        xm(3, 1) = kNaN;
        const auto id = CovModel::make(Vector::Zero(2), SymMatrix::identity(2));
        const auto f = d_step(DataTable(xm), id, 1e300, n);
        REQUIRE(f.cells.size() == 1);
        const auto r = i_step(DataTable(xm), f, id);
        Matrix filled = xm;
        filled(3, 1) = 0.0;  // conditional mean under the identity model
        Matrix expect = ml_cov(filled);
        expect(1, 1) += 1.0 / n;
        CHECK((r.model.sigma.matrix() - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("i_step iterated on missing data matches textbook EM") {
    const auto sigma = evalkit::gen_a09(4);
    auto t = gaussian_table(150, sigma, 21);
    std::mt19937_64 gen(4);
    std::bernoulli_distribution drop(0.1);
    for (Index i = 0; i < t.rows(); ++i) {
        Index dropped = 0;
        for (Index j = 0; j < t.cols(); ++j)
            if (dropped < 3 && drop(gen)) {
                t.values(i, j) = kNaN;
                ++dropped;
            }
    }
    Vector mu = Vector::Zero(4);
    Matrix s = Matrix::Identity(4, 4);
    auto model = CovModel::make(mu, SymMatrix(s));
    for (int it = 0; it < 500; ++it) {
        const auto f = d_step(t, model, 1e300, t.rows());
        model = i_step(t, f, model).model;
    }
    oracle::textbook_em(t.values, mu, s, 500);
    CHECK((model.mu - mu).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((model.sigma.matrix() - s).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("di_estimate: clean data") {
    Matrix s(2, 2);
    s << 1, 0.6, 0.6, 2;
    const SymMatrix sigma(s);
    double flags = 0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const auto t = gaussian_table(200, sigma, 100 + rep);
        const auto r = di_estimate(t, {});
        CHECK(r.converged);
        CHECK(r.criterion_history.back() < 1e-6);
        flags += static_cast<double>(r.cells.size());
        CHECK(evalkit::discrepancy(r.model.sigma, SymMatrix(ml_cov(t.values))) < 0.2);
        CHECK(sym_eigen(r.model.sigma).values(1) > 0.0);
    }
    CHECK(flags / 20 <= 2.0 * 200 * 2 * 0.01);
}

TEST_CASE("di_estimate: refit on its own imputed output") {
    auto dirty = gaussian_table(120, evalkit::gen_a09(5), 8);
    const auto r = di_estimate(dirty, {});
    for (const auto& c : r.cells) dirty.values(c.row, c.col) = c.imputed;
    DiConfig cfg;
    cfg.initial = {InitialMethod::External, r.model};
    const auto again = di_estimate(dirty, cfg);
    CHECK(again.converged);
    CHECK(again.iterations <= 2);
}

TEST_CASE("di_estimate: column scale invariance") {
    const auto sigma = evalkit::gen_a09(5);
    evalkit::ContaminationSpec spec;
    spec.gamma = 5;
    spec.seed = 9;
    const auto dirty = evalkit::contaminate(gaussian_table(100, sigma, 9), sigma, spec).data;
    const auto a = di_estimate(dirty, {});
    for (Index col : {Index{0}, Index{3}}) {
        for (double s : {1000.0, 0.001}) {
            DataTable scaled = dirty;
            scaled.values.col(col) *= s;
            const auto b = di_estimate(scaled, {});
            REQUIRE(a.cells.size() == b.cells.size());
            for (size_t k = 0; k < a.cells.size(); ++k) {
                CHECK(a.cells[k].row == b.cells[k].row);
                CHECK(a.cells[k].col == b.cells[k].col);
                CHECK(std::abs(a.cells[k].residual - b.cells[k].residual) < 1e-8 * (1 + std::abs(a.cells[k].residual)));
            }
            Matrix expect = a.model.sigma.matrix();
            expect.row(col) *= s;
            expect.col(col) *= s;
            CHECK(((b.model.sigma.matrix() - expect).array() / (expect.array().abs() + 1e-300)).abs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("di_estimate: quantile near one gives the ML fit") {
    const auto t = gaussian_table(150, evalkit::gen_a09(4), 31);
    DiConfig cfg;
    cfg.quantile = 1.0 - 1e-12;
    const auto r = di_estimate(t, cfg);
    CHECK(r.cells.empty());
    CHECK(r.converged);
    CHECK((r.model.sigma.matrix() - ml_cov(t.values)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((r.model.mu - t.values.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("di_estimate: screening and errors") {
    auto t = gaussian_table(40, SymMatrix::identity(4), 41);
    for (Index i = 0; i < 15; ++i) t.values(i, 2) = kNaN;
    const auto st = screen_columns(t, 0.25);
    CHECK(st[2] == ColumnStatus::TooManyMissing);
    const auto r = di_estimate(t, {});
    CHECK(r.set_aside == std::vector<Index>{2});
    CHECK(r.kept == std::vector<Index>{0, 1, 3});
    CHECK(r.model.dim() == 3);
    for (const auto& c : r.cells) CHECK(c.col != 2);

    auto flat = gaussian_table(40, SymMatrix::identity(3), 42);
    flat.values.col(1).setConstant(2.0);
    CHECK(screen_columns(flat, 0.25)[1] == ColumnStatus::ZeroScale);
    CHECK(kind_of([&] { di_estimate(flat, {}); }) == ErrorKind::Input);
    CHECK(kind_of([&] { di_estimate(gaussian_table(4, SymMatrix::identity(5), 43), {}); }) == ErrorKind::Shape);
    DiConfig bad;
    bad.max_col_frac = 1.0;
    CHECK(kind_of([&] { validate(bad); }) == ErrorKind::Input);
}

TEST_CASE("di_estimate: non-convergence is reported") {
    const auto sigma = evalkit::gen_a09(5);
    evalkit::ContaminationSpec spec;
    spec.seed = 5;
    const auto dirty = evalkit::contaminate(gaussian_table(100, sigma, 5), sigma, spec).data;
    DiConfig cfg;
    cfg.max_iter = 1;
    cfg.tol = 1e-30;
    const auto r = di_estimate(dirty, cfg);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.criterion_history.size() == 1);
}
