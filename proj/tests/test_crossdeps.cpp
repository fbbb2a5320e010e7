#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hcr/crossdeps.hpp"
#include "hcr/errors.hpp"
#include "support/oracles.hpp"

using namespace hcr;

namespace {

NormalizedSeries uniform_normalized(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
    NormalizedSeries s;
    s.x.resize(n);
    for (double& v : s.x) v = u(rng);
    return s;
}

}  // namespace

TEST_CASE("panel validation names the short column") {
    NormalizedSeries a = uniform_normalized(100, 1);
    NormalizedSeries b = uniform_normalized(99, 2);
    try {
        PanelFrame panel({"alpha", "beta"}, {a, b});
        FAIL("expected misaligned panel error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::misaligned_panel);
        CHECK(std::string(e.what()).find("beta") != std::string::npos);
    }
}

TEST_CASE("independent panel has pair coefficients at the noise level") {
    const std::size_t n = 20000;
    std::vector<NormalizedSeries> series;
    std::vector<std::string> names;
    for (int i = 0; i < 4; ++i) {
        series.push_back(uniform_normalized(n, 100 + std::uint64_t(i)));
        names.push_back("s" + std::to_string(i));
    }
    PanelFrame panel(names, series);
    OrthoBasis basis(2);
    const double bound = 3.0 / std::sqrt(double(n));
    for (int j1 : {1, 2})
        for (int j2 : {1, 2}) {
            const PairCoeffMatrix m = pair_coeff_matrix(panel, j1, j2, basis);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    if (a == b) {
                        CHECK(m.values(a, b) == 0.0);  // declared diagonal fill
                        continue;
                    }
                    CHECK(std::abs(m.values(a, b)) <= bound);
                }
        }
}

TEST_CASE("the (1,1) coefficient is the Spearman correlation") {
    // Bivariate Gaussian with r = 0.5 and per-series fitted Gaussian CDFs:
    // closed form (6/pi) asin(r/2).
    const std::size_t n = 100000;
    std::mt19937_64 rng(300);
    std::vector<double> ya(n), yb(n);
    for (std::size_t t = 0; t < n; ++t) {
        auto [z1, z2] = oracle::gaussian_pair(rng, 0.5);
        ya[t] = z1;
        yb[t] = z2;
    }
    PanelFrame panel({"a", "b"}, {normalize(ya, fit_gaussian(ya)), normalize(yb, fit_gaussian(yb))});
    OrthoBasis basis(1);
    const PairCoeffMatrix m = pair_coeff_matrix(panel, 1, 1, basis);

    const double closed_form = (6.0 / std::numbers::pi) * std::asin(0.25);  // 0.4826
    CHECK(std::abs(m.values(0, 1) - closed_form) < 0.02);

    SUBCASE("direct rank-correlation oracle agrees within 0.02") {
        // Spearman rho from ranks
        auto ranks = [](const std::vector<double>& v) {
            std::vector<std::size_t> order(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
            std::vector<double> r(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) r[order[i]] = double(i + 1);
            return r;
        };
        const std::vector<double> ra = ranks(ya), rb = ranks(yb);
        const double mean_rank = double(n + 1) / 2.0;
        double num = 0.0, da = 0.0, db = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            num += (ra[t] - mean_rank) * (rb[t] - mean_rank);
            da += (ra[t] - mean_rank) * (ra[t] - mean_rank);
            db += (rb[t] - mean_rank) * (rb[t] - mean_rank);
        }
        const double spearman = num / std::sqrt(da * db);
        CHECK(std::abs(m.values(0, 1) - spearman) < 0.02);
    }
}

TEST_CASE("same-degree matrices are exactly symmetric, mixed ones need not be") {
    const std::size_t n = 5000;
    std::mt19937_64 rng(301);
    std::vector<double> ya(n), yb(n);
    for (std::size_t t = 0; t < n; ++t) {
        auto [z1, z2] = oracle::gaussian_pair(rng, 0.6);
        ya[t] = z1;
        yb[t] = std::abs(z2) * (z1 > 0 ? 1.0 : -0.3);  // asymmetric coupling
    }
    PanelFrame panel({"a", "b"}, {normalize(ya, fit_gaussian(ya)), normalize(yb, fit_gaussian(yb))});
    OrthoBasis basis(2);
    const PairCoeffMatrix m11 = pair_coeff_matrix(panel, 1, 1, basis);
    const PairCoeffMatrix m22 = pair_coeff_matrix(panel, 2, 2, basis);
    CHECK(m11.values(0, 1) == m11.values(1, 0));
    CHECK(m22.values(0, 1) == m22.values(1, 0));
    const PairCoeffMatrix m12 = pair_coeff_matrix(panel, 1, 2, basis);
    CHECK(m12.values(0, 1) != m12.values(1, 0));
}

TEST_CASE("time-shuffled panels carry no trend") {
    const std::size_t n = 20000;
    std::mt19937_64 rng(302);
    // correlated pair, then a shared random shuffle destroys any time order
    std::vector<double> ya(n), yb(n);
    for (std::size_t t = 0; t < n; ++t) {
        auto [z1, z2] = oracle::gaussian_pair(rng, 0.5);
        ya[t] = z1;
        yb[t] = z2;
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> sa(n), sb(n);
    for (std::size_t i = 0; i < n; ++i) {
        sa[i] = ya[perm[i]];
        sb[i] = yb[perm[i]];
    }
    PanelFrame panel({"a", "b"}, {normalize(sa, fit_gaussian(sa)), normalize(sb, fit_gaussian(sb))});
    OrthoBasis basis(1);
    const PairCoeffMatrix trend = pair_trend_matrix(panel, 1, 1, basis);
    CHECK(std::abs(trend.values(0, 1)) <= 3.0 / std::sqrt(double(n)));
}

TEST_CASE("an engineered correlation ramp gives a positive trend entry") {
    const std::size_t n = 40000;
    std::mt19937_64 rng(303);
    std::vector<double> ya(n), yb(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double r = 0.8 * double(t) / double(n);  // 0 -> 0.8 ramp
        auto [z1, z2] = oracle::gaussian_pair(rng, r);
        ya[t] = z1;
        yb[t] = z2;
    }
    PanelFrame panel({"a", "b"}, {normalize(ya, fit_gaussian(ya)), normalize(yb, fit_gaussian(yb))});
    OrthoBasis basis(1);
    const PairCoeffMatrix trend = pair_trend_matrix(panel, 1, 1, basis);
    CHECK(trend.values(0, 1) > 3.0 / std::sqrt(double(n)));
    // average dependency is positive too
    const PairCoeffMatrix avg = pair_coeff_matrix(panel, 1, 1, basis);
    CHECK(avg.values(0, 1) > 0.0);
}

TEST_CASE("eigendecomposition reconstructs and matches a Jacobi oracle") {
    std::mt19937_64 rng(304);
    std::normal_distribution<double> g(0.0, 1.0);
    const int k = 29;
    Eigen::MatrixXd m(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = a; b < k; ++b) {
            const double v = g(rng);
            m(a, b) = v;
            m(b, a) = v;
        }
    const EigenDecomposition e = eigendecompose(m);

    SUBCASE("descending order and orthonormality") {
        for (int i = 1; i < k; ++i) CHECK(e.values(i) <= e.values(i - 1));
        const Eigen::MatrixXd gram = e.vectors.transpose() * e.vectors;
        CHECK((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("spectral reconstruction") {
        Eigen::MatrixXd rec = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i)
            rec += e.values(i) * e.vectors.col(i) * e.vectors.col(i).transpose();
        CHECK((rec - m).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("values and vectors match the Jacobi-rotation oracle") {
        const oracle::JacobiEigen ref = oracle::jacobi_eigen(m);
        for (int i = 0; i < k; ++i) {
            CHECK(e.values(i) == doctest::Approx(ref.values[std::size_t(i)]).epsilon(1e-6));
            // vectors agree up to sign
            double dot = 0.0;
            for (int r = 0; r < k; ++r)
                dot += e.vectors(r, i) * ref.vectors[std::size_t(i)][std::size_t(r)];
            CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("eigendecomposition special cases") {
    SUBCASE("diagonal matrix returns its diagonal") {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
        m(0, 0) = 0.5;
        m(1, 1) = 0.5;
        m(2, 2) = 0.5;
        const EigenDecomposition e = eigendecompose(m);
        for (int i = 0; i < 3; ++i) CHECK(e.values(i) == doctest::Approx(0.5));
    }
    SUBCASE("rank-1 outer product has a single eigenvalue |u|^2") {
        Eigen::VectorXd u(4);
        u << 1.0, -2.0, 0.5, 3.0;
        const EigenDecomposition e = eigendecompose(Eigen::MatrixXd(u * u.transpose()));
        CHECK(e.values(0) == doctest::Approx(u.squaredNorm()).epsilon(1e-12));
        for (int i = 1; i < 4; ++i) CHECK(std::abs(e.values(i)) <= 1e-10);
    }
    SUBCASE("asymmetric input is a contract error") {
        Eigen::MatrixXd m(2, 2);
        m << 1.0, 0.5, -0.5, 1.0;
        CHECK_THROWS_AS(eigendecompose(m), Error);
    }
}

TEST_CASE("covariance PCA on basic panels") {
    SUBCASE("two identical series have correlation one") {
        std::mt19937_64 rng(305);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> a(500);
        for (double& v : a) v = g(rng);
        const PcaResult pca = covariance_pca({a, a}, {"x", "y"}, 2);
        CHECK(pca.correlation(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("independent panel has near-zero off-diagonal correlation") {
        const std::size_t n = 20000;
        std::mt19937_64 rng(306);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<std::vector<double>> panel(3, std::vector<double>(n));
        for (auto& col : panel)
            for (double& v : col) v = g(rng);
        const PcaResult pca = covariance_pca(panel, {"x", "y", "z"}, 2);
        const double bound = 3.0 / std::sqrt(double(n));
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (a != b) CHECK(std::abs(pca.correlation(a, b)) <= bound);
        CHECK(pca.top_vectors.cols() == 2);
    }
    SUBCASE("a degenerate column is an error") {
        CHECK_THROWS_AS(covariance_pca({{1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}}, {"c", "v"}, 1),
                        Error);
    }
    SUBCASE("a common factor dominates the top eigenvector") {
        const std::size_t n = 5000;
        std::mt19937_64 rng(307);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<std::vector<double>> panel(4, std::vector<double>(n));
        for (std::size_t t = 0; t < n; ++t) {
            const double common = g(rng);
            for (int i = 0; i < 4; ++i) panel[std::size_t(i)][t] = common + 0.3 * g(rng);
        }
        const PcaResult pca = covariance_pca(panel, {"a", "b", "c", "d"}, 1);
        // all components share the sign: the factor groups the variables
        const auto v = pca.top_vectors.col(0);
        for (int i = 1; i < 4; ++i) CHECK(v(i) * v(0) > 0.0);
    }
}
