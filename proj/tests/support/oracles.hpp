#pragma once

// Independent reference implementations used to pin expected values: a
// literal per-row product-average estimator, naive power-sum polynomial
// evaluation, a cyclic Jacobi eigensolver, composite Simpson quadrature, and
// seeded samplers for the Monte Carlo checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hcr/estimate.hpp"
#include "hcr/polybasis.hpp"

namespace oracle {

// Literal estimator: for every multi-index, average the product of basis
// values across rows, re-evaluating each factor independently.
inline std::vector<double> naive_estimate(const hcr::WindowSet& w, const hcr::OrthoBasis& basis,
                                          const std::vector<int>& degrees,
                                          const std::vector<std::uint64_t>& indices) {
    hcr::CoefficientTensor layout(degrees, 1, {}, {});
    std::vector<int> multi(degrees.size());
    std::vector<double> out;
    out.reserve(indices.size());
    for (std::uint64_t idx : indices) {
        layout.decode(idx, multi);
        double sum = 0.0;
        for (std::size_t t = 0; t < w.rows; ++t) {
            auto row = w.row(t);
            double prod = 1.0;
            for (std::size_t i = 0; i < degrees.size(); ++i)
                prod *= basis.evaluate(multi[i], row[i]);
            sum += prod;
        }
        out.push_back(sum / double(w.rows));
    }
    return out;
}

inline double naive_power_sum(std::span<const double> mono, double x) {
    double s = 0.0;
    for (std::size_t k = 0; k < mono.size(); ++k) s += mono[k] * std::pow(x, double(k));
    return s;
}

struct JacobiEigen {
    std::vector<double> values;               // descending
    std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

// Cyclic Jacobi rotations until off-diagonal mass vanishes.
inline JacobiEigen jacobi_eigen(Eigen::MatrixXd a) {
    const int n = int(a.rows());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(n, n);
                rot(p, p) = c;
                rot(q, q) = c;
                rot(p, q) = s;
                rot(q, p) = -s;
                a = rot.transpose() * a * rot;
                v = v * rot;
            }
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
    JacobiEigen out;
    for (int i : order) {
        out.values.push_back(a(i, i));
        std::vector<double> col(n);
        for (int r = 0; r < n; ++r) col[std::size_t(r)] = v(r, i);
        out.vectors.push_back(std::move(col));
    }
    return out;
}

// Composite Simpson with fixed subdivision; independent of the library's
// quadratures.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
    if (intervals % 2 == 1) ++intervals;
    const double h = (b - a) / intervals;
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

// EPD(mu, sigma, kappa) sample via the Gamma transform: |y - mu| =
// sigma * (kappa * W)^(1/kappa) with W ~ Gamma(1/kappa, 1) and a random sign.
inline double epd_sample(std::mt19937_64& rng, double mu, double sigma, double kappa) {
    std::gamma_distribution<double> gamma(1.0 / kappa, 1.0);
    std::bernoulli_distribution sign(0.5);
    const double t = sigma * std::pow(kappa * gamma(rng), 1.0 / kappa);
    return mu + (sign(rng) ? t : -t);
}

// Rejection sampling from a density on [0,1] bounded by fmax.
inline std::vector<double> rejection_sample(std::mt19937_64& rng,
                                            const std::function<double(double)>& density,
                                            double fmax, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> out;
    out.reserve(n);
    while (out.size() < n) {
        const double x = u(rng);
        if (u(rng) * fmax <= density(x)) out.push_back(x);
    }
    return out;
}

// Correlated standard normal pair with correlation r.
inline std::pair<double, double> gaussian_pair(std::mt19937_64& rng, double r) {
    std::normal_distribution<double> n01(0.0, 1.0);
    const double z1 = n01(rng);
    const double z2 = n01(rng);
    return {z1, r * z1 + std::sqrt(1.0 - r * r) * z2};
}

// ARCH(1)-style series with innovations drawn by `innovation`.
inline std::vector<double> arch_series(std::mt19937_64& rng, std::size_t n, double a0, double a1,
                                       const std::function<double(std::mt19937_64&)>& innovation) {
    std::vector<double> y(n);
    double prev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double var = a0 + a1 * prev * prev;
        y[t] = std::sqrt(var) * innovation(rng);
        prev = y[t];
    }
    return y;
}

}  // namespace oracle
