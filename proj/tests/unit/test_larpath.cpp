#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "../oracles.hpp"
#include "evalkit.hpp"
#include "incremental_qr.hpp"
#include "larpath.hpp"

using namespace cellwise;
using namespace cellwise::larpath;

namespace {

struct Case {
    Vector z, mu;
    Matrix sigma;
};

Case random_case(std::mt19937_64& gen, Index d) {
    Case c;
    c.sigma = oracle::random_spd(d, gen);
    c.mu = oracle::random_vector(d, gen);
    c.z = c.mu + oracle::random_vector(d, gen, 2.5);
    return c;
}

LarPath trace(const Case& c, const std::vector<Index>& forced = {}) {
    const SymMatrix sigma(c.sigma);
    const Vector w = huber_weights(c.z, c.mu, c.sigma.diagonal());
    return lar_trace(build_design(c.z, c.mu, pd_inverse_sqrt(sigma), w), forced);
}

std::vector<Index> prefix(const LarPath& p, Index k) { return {p.order.begin(), p.order.begin() + k}; }

}  // namespace

TEST_CASE("huber_weights") {
    Vector z(4), mu = Vector::Zero(4), var = Vector::Ones(4);
    z << 1.0, 3.0, 0.0, NAN;
    const Vector w = huber_weights(z, mu, var);
    CHECK(w(0) == 1.0);
    CHECK(w(1) == doctest::Approx(0.5));
    CHECK(w(2) == 1.0);
    CHECK(w(3) == 1.0);
    var(0) = 4.0;
    z(0) = 6.0;  // O = 3
    CHECK(huber_weights(z, mu, var)(0) == doctest::Approx(0.5));
    var(2) = 0.0;
    CHECK_THROWS_AS(huber_weights(z, mu, var), Error);
}

TEST_CASE("build_design") {
    SUBCASE("identity") {
        Vector z(3), mu(3);
        z << 1, -2, 3;
        mu << 0.5, 0, 1;
        const auto p = build_design(z, mu, SymMatrix::identity(3), Vector::Ones(3));
        CHECK((p.response - (z - mu)).norm() == 0.0);
        CHECK((p.design - Matrix::Identity(3, 3)).norm() == 0.0);
    }
    SUBCASE("scalar") {
        Vector z(1), mu(1), w(1);
        z << 5;
        mu << 1;
        w << 1;
        Matrix s(1, 1);
        s << 4;
        const auto p = build_design(z, mu, pd_inverse_sqrt(SymMatrix(s)), w);
        CHECK(p.response(0) == doctest::Approx(2.0));
        CHECK(p.design(0, 0) == doctest::Approx(0.5));
    }
    SUBCASE("bivariate with weights") {
        Matrix s(2, 2);
        s << 1, 0.9, 0.9, 1;
        Vector w(2), z(2), mu = Vector::Zero(2);
        w << 0.5, 1.0;
        z << 2, -1;
        const auto root = oracle::inverse_sqrt(s);
        const auto p = build_design(z, mu, pd_inverse_sqrt(SymMatrix(s)), w);
        Matrix scale = Matrix::Zero(2, 2);
        scale(0, 0) = 2;
        scale(1, 1) = 1;
        CHECK((p.design - root * scale).cwiseAbs().maxCoeff() < 1e-10);
        // Full OLS solution in beta units is W (z - mu).
        CHECK((p.response - p.design * w.cwiseProduct(z - mu)).norm() < 1e-8);
    }
    SUBCASE("zero weight rejected") {
        Vector w = Vector::Ones(2);
        w(1) = 0.0;
        CHECK_THROWS_AS(build_design(Vector::Zero(2), Vector::Zero(2), SymMatrix::identity(2), w), Error);
    }
}

TEST_CASE("incremental QR matches a direct factorization") {
    std::mt19937_64 gen(5);
    const Matrix x = oracle::random_spd(6, gen);
    IncrementalQr qr(6, 6);
    for (Index k = 0; k < 6; ++k) {
        qr.append(x.col(k));
        const Matrix q = qr.q();
        CHECK((q.transpose() * q - Matrix::Identity(k + 1, k + 1)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((q * qr.r() - x.leftCols(k + 1)).cwiseAbs().maxCoeff() < 1e-12);
    }
    IncrementalQr dep(3, 3);
    Vector v(3);
    v << 1, 2, 3;
    dep.append(v);
    CHECK_THROWS_AS(dep.append(2.0 * v), Error);
}

TEST_CASE("lar_trace: separable two-cell example") {
    Vector z(2), mu = Vector::Zero(2);
    z << 3, 0;
    const Vector w = huber_weights(z, mu, Vector::Ones(2));
    const auto p = lar_trace(build_design(z, mu, SymMatrix::identity(2), w), {});
    REQUIRE(p.order == std::vector<Index>{0, 1});
    CHECK(p.steps[0].rss == doctest::Approx(9.0));
    CHECK(p.steps[1].delta == doctest::Approx(9.0));
    CHECK(std::abs(p.steps[2].delta) < 1e-12);
    CHECK(std::abs(z(0) - p.steps[1].theta(0)) < 1e-12);  // imputed to 0
}

TEST_CASE("lar_trace: row at the center") {
    const Vector mu = Vector::Constant(4, 1.5);
    const auto p = lar_trace(build_design(mu, mu, SymMatrix::identity(4), Vector::Ones(4)), {});
    CHECK(p.order == std::vector<Index>{0, 1, 2, 3});
    CHECK(p.steps[0].rss == 0.0);
    for (const auto& s : p.steps) CHECK(s.delta == 0.0);
}

TEST_CASE("lar_trace: A09(3) with one far cell, all subsets enumerated") {
    const Matrix sigma = evalkit::gen_a09(3).matrix();
    Vector z(3), mu = Vector::Zero(3);
    z << 0, 0, 5;
    const Case c{z, mu, sigma};
    const auto p = trace(c);
    CHECK(p.order[0] == 2);
    CHECK(std::abs(p.steps[1].delta - (p.steps[0].rss - oracle::partial_md2(z, mu, sigma, {2}))) < 1e-8);

    // Every subset: the OLS residual sum of squares equals the partial squared
    // Mahalanobis distance of the complement.
    const Matrix root = oracle::inverse_sqrt(sigma);
    const Vector y = root * (z - mu);
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<Index> s;
        for (Index j = 0; j < 3; ++j)
            if (mask & (1 << j)) s.push_back(j);
        double rss = y.squaredNorm();
        if (!s.empty()) {
            const Vector th = oracle::ols(root, y, s);
            Vector fit = Vector::Zero(3);
            for (size_t a = 0; a < s.size(); ++a) fit += th(static_cast<Index>(a)) * root.col(s[a]);
            rss = (y - fit).squaredNorm();
        }
        CHECK(std::abs(rss - oracle::partial_md2(z, mu, sigma, s)) < 1e-8);
    }
    for (Index k = 0; k <= 3; ++k)
        CHECK(std::abs(p.steps[k].rss - oracle::partial_md2(z, mu, sigma, prefix(p, k))) < 1e-8);
}

TEST_CASE("lar_trace: imputation and RSS identities over random rows") {
    std::mt19937_64 gen(2024);
    for (int rep = 0; rep < 200; ++rep) {
        const Index d = 1 + rep % 8;
        const auto c = random_case(gen, d);
        const auto p = trace(c);
        REQUIRE(p.dim() == d);
        for (Index k = 0; k <= d; ++k) {
            const auto a = prefix(p, k);
            CHECK(std::abs(p.steps[k].rss - oracle::partial_md2(c.z, c.mu, c.sigma, a)) <
                  1e-8 * (1.0 + p.steps[0].rss));
            if (k == 0) continue;
            CHECK(p.steps[k].delta >= 0.0);
            CHECK(p.steps[k].rss <= p.steps[k - 1].rss + 1e-10);
            const Vector imputed = oracle::take(c.z, a) - p.steps[k].theta;
            const Vector expect = oracle::conditional_mean(c.z, c.mu, c.sigma, a);
            CHECK((imputed - expect).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + c.z.cwiseAbs().maxCoeff()));
        }
        CHECK(p.steps[d].rss < 1e-8);
        // Full fit reproduces z - mu.
        const Vector full = p.steps[d].theta;
        for (Index k = 0; k < d; ++k) CHECK(std::abs(full(k) - (c.z - c.mu)(p.order[k])) < 1e-8);
    }
}

TEST_CASE("lar_trace: entry order matches an explicit-inverse LAR") {
    std::mt19937_64 gen(99);
    for (int rep = 0; rep < 100; ++rep) {
        const Index d = 2 + rep % 7;
        const auto c = random_case(gen, d);
        const Vector w = huber_weights(c.z, c.mu, c.sigma.diagonal());
        const auto pair = build_design(c.z, c.mu, pd_inverse_sqrt(SymMatrix(c.sigma)), w);
        const auto p = lar_trace(pair, {});
        CHECK(p.order == oracle::naive_lar_order(pair.design, pair.response));
    }
}

TEST_CASE("lar_trace: forced cells lead the path") {
    std::mt19937_64 gen(17);
    for (int rep = 0; rep < 100; ++rep) {
        const Index d = 3 + rep % 5;
        auto c = random_case(gen, d);
        std::vector<Index> forced{d - 1, 0};
        for (Index j : forced) c.z(j) = c.mu(j);
        const auto p = trace(c, forced);
        CHECK(p.forced_count == 2);
        std::vector<Index> lead = prefix(p, 2);
        std::sort(lead.begin(), lead.end());
        CHECK(lead == std::vector<Index>{0, d - 1});
        for (Index k = 0; k <= d; ++k)
            CHECK(std::abs(p.steps[k].rss - oracle::partial_md2(c.z, c.mu, c.sigma, prefix(p, k))) <
                  1e-8 * (1.0 + p.steps[0].rss));
    }
    CHECK_THROWS_AS(trace(random_case(gen, 3), {0, 0}), Error);
    CHECK_THROWS_AS(trace(random_case(gen, 3), {5}), Error);
}

TEST_CASE("lar_trace: relabeling columns relabels the path") {
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 100; ++rep) {
        const Index d = 2 + rep % 7;
        const auto c = random_case(gen, d);
        std::vector<Index> perm(static_cast<size_t>(d));
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), gen);
        Case pc{Vector(d), Vector(d), Matrix(d, d)};
        for (Index a = 0; a < d; ++a) {
            pc.z(a) = c.z(perm[a]);
            pc.mu(a) = c.mu(perm[a]);
            for (Index b = 0; b < d; ++b) pc.sigma(a, b) = c.sigma(perm[a], perm[b]);
        }
        const auto p = trace(c);
        const auto q = trace(pc);
        for (Index k = 0; k < d; ++k) CHECK(perm[q.order[k]] == p.order[k]);
    }
}
