#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "hcr/errors.hpp"
#include "hcr/estimate.hpp"
#include "support/oracles.hpp"

using namespace hcr;

namespace {

std::vector<double> uniform_series(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(n);
    for (double& v : x) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("window construction follows the shift definition") {
    const std::vector<double> x{0.1, 0.2, 0.3};
    const WindowSet w = build_windows(x, 2);
    REQUIRE(w.rows == 2);
    CHECK(w.row(0)[0] == 0.2);  // (b, a)
    CHECK(w.row(0)[1] == 0.1);
    CHECK(w.row(1)[0] == 0.3);  // (c, b)
    CHECK(w.row(1)[1] == 0.2);
}

TEST_CASE("window counts and the d=1 identity") {
    const std::vector<double> x = uniform_series(29354, 1);
    CHECK(build_windows(x, 6).rows == 29349);  // n1 - d + 1

    const WindowSet w1 = build_windows(x, 1);
    CHECK(w1.rows == x.size());
    CHECK(w1.row(17)[0] == x[17]);
}

TEST_CASE("window shift consistency: row i coordinate k equals row i+1 coordinate k+1") {
    const std::vector<double> x = uniform_series(200, 2);
    const WindowSet w = build_windows(x, 4);
    for (std::size_t i = 0; i + 1 < w.rows; ++i)
        for (int k = 0; k + 1 < 4; ++k)
            CHECK(w.row(i)[std::size_t(k)] == w.row(i + 1)[std::size_t(k) + 1]);
}

TEST_CASE("windows reject too-short series and clamp endpoint values") {
    CHECK_THROWS_AS(build_windows(std::vector<double>{0.1, 0.2}, 3), Error);
    const WindowSet w = build_windows(std::vector<double>{0.0, 1.0, 0.5}, 1);
    CHECK(w.row(0)[0] > 0.0);
    CHECK(w.row(1)[0] < 1.0);
}

TEST_CASE("noise level is one over root n") {
    CHECK(noise_sigma(29349).sigma == doctest::Approx(0.005837).epsilon(1e-4));
    CHECK(noise_sigma(1).sigma == 1.0);
    CHECK(noise_sigma(10000).sigma == doctest::Approx(0.01).epsilon(1e-15));
}

TEST_CASE("the all-zeros coefficient of any sample is exactly one") {
    const std::vector<double> x = uniform_series(517, 3);
    OrthoBasis basis(3);
    for (int d : {1, 2, 3}) {
        const CoefficientTensor t = estimate_coefficients(build_windows(x, d), basis, {3});
        CHECK(t.value_at_linear(0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("antisymmetric pair averages out through f1") {
    OrthoBasis basis(1);
    const CoefficientTensor t =
        estimate_coefficients(build_windows(std::vector<double>{0.2, 0.8}, 1), basis, {1});
    CHECK(std::abs(t.value_at_linear(1)) <= 1e-14);
}

TEST_CASE("estimator equals the literal per-row product average") {
    std::mt19937_64 cfg_rng(20240812);
    OrthoBasis basis(4);
    for (int trial = 0; trial < 12; ++trial) {
        const int d = 1 + int(cfg_rng() % 3);
        const int m = 1 + int(cfg_rng() % 4);
        const std::size_t n = 64 + cfg_rng() % 937;
        const std::vector<double> x = uniform_series(n + std::size_t(d), cfg_rng());
        const WindowSet w = build_windows(x, d);
        const CoefficientTensor t = estimate_coefficients(w, basis, {m});
        const std::vector<double> ref =
            oracle::naive_estimate(w, basis, t.degrees(), t.indices());
        REQUIRE(ref.size() == t.entry_count());
        for (std::size_t e = 0; e < ref.size(); ++e)
            CHECK(std::abs(t.values()[e] - ref[e]) <= 1e-12);
    }
}

TEST_CASE("threaded estimation is bit-identical to single-threaded") {
    const std::vector<double> x = uniform_series(30000, 5);
    OrthoBasis basis(4);
    const WindowSet w = build_windows(x, 3);
    const CoefficientTensor t1 = estimate_coefficients(w, basis, {4}, IndexFilter::all(), 1);
    const CoefficientTensor t4 = estimate_coefficients(w, basis, {4}, IndexFilter::all(), 4);
    REQUIRE(t1.entry_count() == t4.entry_count());
    for (std::size_t e = 0; e < t1.entry_count(); ++e) CHECK(t1.values()[e] == t4.values()[e]);
}

TEST_CASE("per-coordinate degrees and multi-index order") {
    const std::vector<double> x = uniform_series(400, 6);
    OrthoBasis basis(3);
    const WindowSet w = build_windows(x, 2);
    const CoefficientTensor t = estimate_coefficients(w, basis, {3, 1});
    CHECK(t.full_size() == 8);
    CHECK(t.entry_count() == 8);
    // little-endian mixed radix: coordinate 0 varies fastest
    std::vector<int> multi(2);
    t.decode(1, multi);
    CHECK(multi == std::vector<int>{1, 0});
    t.decode(4, multi);
    CHECK(multi == std::vector<int>{0, 1});
    CHECK(t.encode(std::vector<int>{3, 1}) == 7);
}

TEST_CASE("index filters restrict the admitted set") {
    const std::vector<double> x = uniform_series(300, 7);
    OrthoBasis basis(2);
    const WindowSet w = build_windows(x, 3);

    const CoefficientTensor pair =
        estimate_coefficients(w, basis, {2}, IndexFilter::pairwise());
    std::vector<int> multi(3);
    for (std::uint64_t idx : pair.indices()) {
        pair.decode(idx, multi);
        int nz = 0;
        for (int j : multi) nz += j > 0 ? 1 : 0;
        CHECK(nz <= 2);
    }
    CHECK(pair.entry_count() == 1 + 3 * 2 + 3 * 4);  // constant + singles + pairs

    const CoefficientTensor low =
        estimate_coefficients(w, basis, {2}, IndexFilter::total_degree(2));
    for (std::uint64_t idx : low.indices()) {
        low.decode(idx, multi);
        CHECK(multi[0] + multi[1] + multi[2] <= 2);
    }

    // filtered values agree with the unfiltered estimate entry by entry
    const CoefficientTensor full = estimate_coefficients(w, basis, {2});
    for (std::size_t e = 0; e < pair.entry_count(); ++e)
        CHECK(pair.values()[e] ==
              doctest::Approx(full.value_at_linear(pair.indices()[e])).epsilon(1e-13));
}

TEST_CASE("marginal consistency: context-free sub-tensor equals the d=1 estimate") {
    const std::vector<double> x = uniform_series(1200, 8);
    OrthoBasis basis(3);
    const WindowSet w2 = build_windows(x, 2);
    const CoefficientTensor t2 = estimate_coefficients(w2, basis, {3});

    // same averages over the same windows, so equality is exact
    std::vector<double> first(w2.rows);
    for (std::size_t t = 0; t < w2.rows; ++t) first[t] = w2.row(t)[0];
    const WindowSet w1 = build_windows(first, 1);
    const CoefficientTensor t1 = estimate_coefficients(w1, basis, {3});
    for (int j = 0; j <= 3; ++j) {
        const std::vector<int> sub{j, 0};
        CHECK(t2.value_at(sub) == t1.value_at(std::vector<int>{j}));
    }
}

TEST_CASE("coefficient noise follows the 1/sqrt(n) law") {
    // 40 Monte Carlo replicates of uniform data; empirical sd of each
    // coefficient should sit near 1/sqrt(n).
    const std::size_t n = 10000;
    const int reps = 40;
    OrthoBasis basis(3);
    std::vector<std::vector<double>> samples;
    std::mt19937_64 rng(909);
    for (int r = 0; r < reps; ++r) {
        const std::vector<double> x = uniform_series(n + 1, rng());
        const CoefficientTensor t = estimate_coefficients(build_windows(x, 2), basis, {3});
        samples.push_back(t.values());
    }
    const double sigma = noise_sigma(n).sigma;
    int within = 0, total = 0;
    for (std::size_t e = 1; e < samples[0].size(); ++e) {
        std::vector<double> coeff(reps);
        for (int r = 0; r < reps; ++r) coeff[std::size_t(r)] = samples[std::size_t(r)][e];
        const double sd = oracle::sample_sd(coeff);
        ++total;
        if (std::abs(sd - sigma) <= 0.25 * sigma) ++within;  // 40 reps: ~11% relative noise
    }
    CHECK(total == 15);
    CHECK(within >= 13);
}

TEST_CASE("rejection-sampled density is recovered within the noise level") {
    OrthoBasis basis(2);
    auto density = [&](double x) {
        return 1.0 + 0.3 * basis.evaluate(1, x) + 0.2 * basis.evaluate(2, x);
    };
    std::mt19937_64 rng(111);
    const std::size_t n = 100000;
    const std::vector<double> x = oracle::rejection_sample(rng, density, 2.1, n);
    const CoefficientTensor t = estimate_coefficients(build_windows(x, 1), basis, {2});
    const double bound = 3.0 / std::sqrt(double(n));
    CHECK(std::abs(t.value_at_linear(1) - 0.3) < bound);
    CHECK(std::abs(t.value_at_linear(2) - 0.2) < bound);
}

TEST_CASE("pruning keeps the constant and records the dropped count") {
    const std::vector<double> x = uniform_series(5000, 12);
    OrthoBasis basis(3);
    const CoefficientTensor t = estimate_coefficients(build_windows(x, 2), basis, {3});

    SUBCASE("threshold zero is the identity") {
        const PruneResult r = prune(t, 0.0);
        CHECK(r.dropped == 0);
        CHECK(r.tensor.entry_count() == t.entry_count());
    }
    SUBCASE("a harsh threshold keeps only the constant on uniform data") {
        const PruneResult r = prune(t, 10.0);
        CHECK(r.tensor.entry_count() == 1);
        CHECK(r.tensor.indices()[0] == 0);
        CHECK(r.dropped == t.entry_count() - 1);
    }
}

TEST_CASE("joint density evaluation matches a naive entry loop") {
    std::mt19937_64 rng(131);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 0.2);
    OrthoBasis basis(4);

    // random sparse tensor on d = 3
    std::vector<int> degrees{4, 4, 4};
    CoefficientTensor layout(degrees, 100, {}, {});
    std::vector<std::uint64_t> idx;
    std::vector<double> val;
    for (std::uint64_t i = 0; i < layout.full_size(); ++i) {
        if (i != 0 && u(rng) > 0.25) continue;
        idx.push_back(i);
        val.push_back(i == 0 ? 1.0 : g(rng));
    }
    const CoefficientTensor t(degrees, 100, idx, val);

    std::vector<int> multi(3);
    for (int rep = 0; rep < 100; ++rep) {
        const std::vector<double> point{u(rng), u(rng), u(rng)};
        double ref = 0.0;
        for (std::size_t e = 0; e < t.entry_count(); ++e) {
            t.decode(t.indices()[e], multi);
            double prod = t.values()[e];
            for (int i = 0; i < 3; ++i) prod *= basis.evaluate(multi[std::size_t(i)], point[std::size_t(i)]);
            ref += prod;
        }
        CHECK(std::abs(eval_joint_density(t, basis, point) - ref) <= 1e-10);
    }
}

TEST_CASE("joint density of the bare constant tensor is one everywhere") {
    OrthoBasis basis(2);
    const CoefficientTensor t({2, 2}, 10, {0}, {1.0});
    CHECK(eval_joint_density(t, basis, std::vector<double>{0.3, 0.9}) == 1.0);
    CHECK_THROWS_AS(eval_joint_density(t, basis, std::vector<double>{0.3}), Error);
}

TEST_CASE("a one-entry d=1 model with a1 vanishes at the midpoint") {
    OrthoBasis basis(1);
    const CoefficientTensor t({1}, 10, {0, 1}, {1.0, 0.3});
    CHECK(eval_joint_density(t, basis, std::vector<double>{0.5}) == doctest::Approx(1.0));
}

TEST_CASE("tensor JSON round trip preserves entries and order") {
    const std::vector<double> x = uniform_series(500, 14);
    OrthoBasis basis(2);
    const CoefficientTensor t = estimate_coefficients(build_windows(x, 2), basis, {2});
    const nlohmann::json j = t.to_json();
    CHECK(j["d"] == 2);
    CHECK(j["degrees"] == std::vector<int>{2, 2});
    CHECK(j["entries"].size() == t.entry_count());
    CHECK(j["entries"][0][0] == std::vector<int>{0, 0});

    const CoefficientTensor back = CoefficientTensor::from_json(j);
    CHECK(back.sample_count() == t.sample_count());
    REQUIRE(back.entry_count() == t.entry_count());
    for (std::size_t e = 0; e < t.entry_count(); ++e) {
        CHECK(back.indices()[e] == t.indices()[e]);
        CHECK(back.values()[e] == t.values()[e]);
    }
}

TEST_CASE("estimation contract errors") {
    OrthoBasis basis(2);
    WindowSet empty;
    empty.d = 2;
    CHECK_THROWS_AS(estimate_coefficients(empty, basis, {2}), Error);
    const std::vector<double> x = uniform_series(50, 15);
    CHECK_THROWS_AS(estimate_coefficients(build_windows(x, 2), basis, {3}), Error);
    CHECK_THROWS_AS(estimate_coefficients(build_windows(x, 2), basis, {2, 2, 2}), Error);
}
