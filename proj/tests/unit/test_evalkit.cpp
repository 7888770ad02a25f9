#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "../oracles.hpp"
#include "evalkit.hpp"
#include "rng.hpp"
#include "simulation.hpp"

using namespace cellwise;
using namespace cellwise::evalkit;

namespace {

SymMatrix scalar(double v) { return SymMatrix((Matrix(1, 1) << v).finished()); }

double md(const Vector& v, const Matrix& s) { return std::sqrt(v.dot(s.ldlt().solve(v))); }

DataTable standard_gaussian(Index n, const SymMatrix& sigma, std::uint64_t seed) {
    Rng rng(seed);
    return DataTable(gen_gaussian(n, sigma, rng));
}

}  // namespace

TEST_CASE("discrepancy examples") {
    std::mt19937_64 gen(1);
    const SymMatrix b(oracle::random_spd(4, gen));
    CHECK(std::abs(discrepancy(b, b)) < 1e-10);
    CHECK(discrepancy(scalar(2), scalar(1)) == doctest::Approx(1.0 - std::log(2.0)));
    Matrix a = Matrix::Zero(3, 3);
    a(0, 0) = 1;
    a(1, 1) = 2;
    CHECK(std::isinf(discrepancy(SymMatrix(a), SymMatrix::identity(3))));
    Matrix notpd = Matrix::Identity(2, 2);
    notpd(1, 1) = -1;
    CHECK_THROWS_AS(discrepancy(SymMatrix::identity(2), SymMatrix(notpd)), Error);
}

TEST_CASE("kl_gaussian examples") {
    CHECK(std::abs(kl_gaussian(gen_a09(4), gen_a09(4))) < 1e-10);
    CHECK(kl_gaussian(scalar(2), scalar(1)) == doctest::Approx(1.0 - std::log(2.0)));
    std::mt19937_64 gen(2);
    const SymMatrix a(oracle::random_spd(5, gen)), b(oracle::random_spd(5, gen));
    CHECK(std::abs(kl_gaussian(a, b) - discrepancy(a, b)) < 1e-8);
    CHECK_THROWS_AS(kl_gaussian(SymMatrix(Matrix::Zero(2, 2)), SymMatrix::identity(2)), Error);
}

TEST_CASE("symmetric discrepancies") {
    const auto e = std::exp(1.0);
    CHECK(discrepancy_symmetric(scalar(2), scalar(1), SymmetricKind::PlusInverse) == doctest::Approx(0.5));
    CHECK(discrepancy_symmetric(scalar(e), scalar(1), SymmetricKind::AbsLog) == doctest::Approx(1.0));
    CHECK(std::abs(discrepancy_symmetric(gen_a09(3), gen_a09(3), SymmetricKind::AbsLog)) < 1e-10);
    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 50; ++rep) {
        const Index d = 1 + rep % 8;
        const SymMatrix a(oracle::random_spd(d, gen)), b(oracle::random_spd(d, gen));
        for (auto kind : {SymmetricKind::PlusInverse, SymmetricKind::AbsLog})
            CHECK(std::abs(discrepancy_symmetric(a, b, kind) - discrepancy_symmetric(b, a, kind)) <
                  1e-8 * (1 + discrepancy_symmetric(a, b, kind)));
    }
}

TEST_CASE("discrepancy properties on random pairs") {
    std::mt19937_64 gen(4);
    for (int rep = 0; rep < 200; ++rep) {
        const Index d = 1 + rep % 10;
        const Matrix am = oracle::random_spd(d, gen);
        const SymMatrix a(am), b(oracle::random_spd(d, gen));
        const double dab = discrepancy(a, b);
        CHECK(dab >= 0.0);
        CHECK(std::abs(dab - kl_gaussian(a, b)) < 1e-8 * (1 + dab));
        CHECK(std::abs(discrepancy(a, a)) < 1e-8);
        // D(B, A) through the reciprocal eigenvalues of the (A, B) pair.
        double recip = 0;
        for (double eta : relative_eigenvalues(a, b)) recip += 1.0 / eta - 1.0 + std::log(eta);
        CHECK(std::abs(discrepancy(b, a) - recip) < 1e-8 * (1 + recip));
        // Small perturbations give small but positive discrepancies.
        Matrix p = am;
        p(0, 0) *= 1.0 + 1e-3;
        CHECK(discrepancy(SymMatrix(p), a) > 0.0);
    }
}

TEST_CASE("gen_a09") {
    CHECK(gen_a09(1).matrix() == Matrix::Ones(1, 1));
    const auto a2 = gen_a09(2);
    CHECK(a2(0, 1) == doctest::Approx(-0.9));
    CHECK(a2(1, 1) == 1.0);
    CHECK(gen_a09(3)(0, 2) == doctest::Approx(0.81));
    for (Index d : {5, 20, 60}) CHECK(sym_eigen(gen_a09(d)).values(d - 1) > 0.0);
}

TEST_CASE("gen_randcorr") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Index d = 2 + static_cast<Index>(seed % 12);
        Rng r1(seed), r2(seed);
        const auto c = gen_randcorr(d, r1);
        CHECK((c.matrix().diagonal() - Vector::Ones(d)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(sym_eigen(c).values(d - 1) > 0.0);
        CHECK(c.matrix() == gen_randcorr(d, r2).matrix());
        CHECK(c.matrix().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    }
}

TEST_CASE("rng") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.bits() == b.bits());
    Rng s1 = Rng::substream(7, 0, Stream::Data), s2 = Rng::substream(7, 0, Stream::Values),
        s3 = Rng::substream(7, 1, Stream::Data), s4 = Rng::substream(7, 0, Stream::Data);
    const auto x = s1.bits();
    CHECK(x != s2.bits());
    CHECK(x != s3.bits());
    CHECK(x == s4.bits());

    Rng r(9);
    const int n = 200000;
    double m = 0, v = 0, gm = 0, bm = 0;
    int out_of_range = 0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        m += z;
        v += z * z;
        gm += r.gamma(2.5);
        bm += r.beta(2.0, 3.0);
        const double u = r.uniform();
        out_of_range += (u < 0.0 || u >= 1.0 || r.below(7) >= 7u) ? 1 : 0;
    }
    CHECK(out_of_range == 0);
    CHECK(std::abs(m / n) < 0.01);
    CHECK(std::abs(v / n - 1.0) < 0.02);
    CHECK(std::abs(gm / n - 2.5) < 0.02);
    CHECK(std::abs(bm / n - 0.4) < 0.005);
    CHECK(r.gamma(0.3) >= 0.0);
}

TEST_CASE("structured outlier") {
    const Vector one = structured_outlier(scalar(1.0), 5.0);
    CHECK(std::abs(one(0)) == doctest::Approx(5.0));
    Matrix s(2, 2);
    s << 1, 0.9, 0.9, 1;
    const Vector v = structured_outlier(SymMatrix(s), std::sqrt(2.0));
    CHECK(md(v, s) == doctest::Approx(std::sqrt(2.0)));
    CHECK(v(0) == doctest::Approx(-v(1)));
    CHECK(v(0) > 0.0);
    CHECK(std::abs(v(0)) == doctest::Approx(std::sqrt(2.0) / std::sqrt(20.0)));
}

TEST_CASE("contaminate_cellwise") {
    const auto sigma = gen_a09(6);
    const auto clean = standard_gaussian(100, sigma, 1);
    ContaminationSpec spec;
    spec.epsilon = 0.2;
    spec.gamma = 3.0;
    spec.seed = 11;
    const auto out = contaminate_cellwise(clean, sigma, spec);
    for (Index j = 0; j < 6; ++j) CHECK(out.truth.col(j).count() == 20);
    for (Index i = 0; i < 100; ++i) {
        std::vector<Index> k;
        for (Index j = 0; j < 6; ++j) {
            if (out.truth(i, j)) k.push_back(j);
            else CHECK(out.data.values(i, j) == clean.values(i, j));
        }
        if (k.empty()) continue;
        const Vector v = oracle::take(Vector(out.data.values.row(i).transpose()), k);
        const Matrix sk = oracle::take(sigma.matrix(), k, k);
        CHECK(std::abs(md(v, sk) - std::sqrt(static_cast<double>(k.size())) * 3.0) < 1e-8);
    }
    const auto again = contaminate_cellwise(clean, sigma, spec);
    CHECK(again.data.values == out.data.values);

    spec.gamma = 0.0;
    const auto zero = contaminate_cellwise(clean, sigma, spec);
    for (Index i = 0; i < 100; ++i)
        for (Index j = 0; j < 6; ++j)
            if (zero.truth(i, j)) CHECK(zero.data.values(i, j) == 0.0);

    SUBCASE("single cells are plus or minus gamma") {
        const auto id = SymMatrix::identity(3);
        ContaminationSpec one;
        one.epsilon = 0.01;
        one.gamma = 5.0;
        const auto c = contaminate_cellwise(standard_gaussian(100, id, 2), id, one);
        for (Index i = 0; i < 100; ++i)
            for (Index j = 0; j < 3; ++j)
                if (c.truth(i, j) && c.truth.row(i).count() == 1) CHECK(std::abs(c.data.values(i, j)) == doctest::Approx(5.0));
    }
}

TEST_CASE("contaminated cells need not be marginally outlying") {
    const auto sigma = gen_a09(10);
    ContaminationSpec spec;
    spec.gamma = 2.0;
    spec.epsilon = 0.2;
    Index total = 0, large = 0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        spec.replication = rep;
        const auto out = contaminate_cellwise(standard_gaussian(100, sigma, rep), sigma, spec);
        for (Index i = 0; i < 100; ++i) {
            if (out.truth.row(i).count() < 2) continue;
            for (Index j = 0; j < 10; ++j) {
                if (!out.truth(i, j)) continue;
                ++total;
                large += std::abs(out.data.values(i, j)) > 2.57 ? 1 : 0;
            }
        }
    }
    REQUIRE(total > 0);
    CHECK(static_cast<double>(large) / static_cast<double>(total) < 0.5);
}

TEST_CASE("contaminate_rowwise and mixed") {
    const auto sigma = gen_a09(2);
    ContaminationSpec spec;
    spec.mode = ContaminationMode::Rowwise;
    spec.row_frac = 0.1;
    spec.gamma = 1.0;
    const auto clean = standard_gaussian(50, sigma, 3);
    const auto r = contaminate_rowwise(clean, sigma, spec);
    Index rows = 0;
    for (Index i = 0; i < 50; ++i) {
        if (!r.outlying_rows[i]) continue;
        ++rows;
        CHECK(r.truth.row(i).all());
        CHECK(md(r.data.values.row(i).transpose(), sigma.matrix()) == doctest::Approx(2.0 * std::sqrt(2.0)));
    }
    CHECK(rows == 5);
    spec.gamma = 0.0;
    const auto z = contaminate_rowwise(clean, sigma, spec);
    for (Index i = 0; i < 50; ++i)
        if (z.outlying_rows[i]) CHECK(z.data.values.row(i).isZero());

    const auto s6 = gen_a09(6);
    ContaminationSpec mixed;
    mixed.mode = ContaminationMode::Mixed;
    mixed.epsilon = 0.1;
    mixed.row_frac = 0.1;
    mixed.seed = 4;
    const auto m = contaminate(standard_gaussian(100, s6, 4), s6, mixed);
    Index full = 0;
    for (Index i = 0; i < 100; ++i) {
        if (m.outlying_rows[i]) {
            ++full;
            CHECK(m.truth.row(i).all());
        }
    }
    CHECK(full == 10);
    for (Index j = 0; j < 6; ++j) CHECK(m.truth.col(j).count() == 10 + 10);
}

TEST_CASE("score_flags") {
    CellMask truth = CellMask::Constant(5, 4, false);
    for (Index k = 0; k < 10; ++k) truth(k / 4, k % 4) = true;
    auto r = score_flags(truth, truth);
    CHECK(r.recall == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.f_score == 1.0);

    r = score_flags(CellMask::Constant(5, 4, false), truth);
    CHECK(r.recall == 0.0);
    CHECK(r.precision == 0.0);
    CHECK(r.f_score == 0.0);
    CHECK_FALSE(r.precision_defined);
    CHECK_FALSE(r.note.empty());

    CellMask flagged = truth;
    flagged(0, 0) = flagged(0, 1) = false;
    flagged(4, 2) = flagged(4, 3) = true;
    r = score_flags(flagged, truth);
    CHECK(r.n_hit == 8);
    CHECK(r.recall == doctest::Approx(0.8));
    CHECK(r.precision == doctest::Approx(0.8));
    CHECK(r.f_score == doctest::Approx(0.8));

    CHECK_THROWS_AS(score_flags(CellMask::Constant(2, 2, false), truth), Error);
}

TEST_CASE("simulation is reproducible") {
    simulation::SimConfig cfg;
    cfg.d = 4;
    cfg.n = 40;
    cfg.reps = 2;
    cfg.seed = 3;
    const auto a = simulation::run(cfg);
    const auto b = simulation::run(cfg);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() == 6u);
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].score.f_score == b[k].score.f_score);
        CHECK(a[k].discrepancy == b[k].discrepancy);
    }
}
