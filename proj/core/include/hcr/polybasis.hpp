#pragma once

// Orthonormal polynomial basis f_0..f_m on [0,1] (rescaled Legendre):
// f_0 = 1, f_1 = sqrt(3)(2x-1), f_2 = sqrt(5)(6x^2-6x+1), ... with
// integral f_j f_k over [0,1] equal to delta_jk. Monomial coefficients are
// exact integers scaled by sqrt(2j+1), so products can be integrated in
// exact integer arithmetic.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hcr {

inline constexpr int kMaxBasisDegree = 12;

class OrthoBasis {
public:
    // Builds the basis up to degree max_degree (0 <= max_degree <= 12).
    explicit OrthoBasis(int max_degree);

    int max_degree() const noexcept { return max_degree_; }

    // Monomial coefficients of f_j, ascending powers of x.
    std::span<const double> monomial_coeffs(int j) const;

    // f_j(x) by Horner evaluation; x must lie in [0,1].
    double evaluate(int j, double x) const;

    // Fills out[j] = f_j(x) for j = 0..max_degree. out.size() must be
    // max_degree+1.
    void evaluate_all(double x, std::span<double> out) const;
    std::vector<double> evaluate_all(double x) const;

    // Exact integral over [0,1] of f_j * f_k via integer monomial
    // integration; returns exactly 0.0 for j != k and exactly 1.0 for j == k.
    double integrate_product(int j, int k) const;

    // Coefficients as an array of arrays of decimal strings, for
    // cross-implementation comparison.
    nlohmann::json coefficients_json() const;

private:
    void check_index(int j) const;

    int max_degree_;
    std::vector<std::vector<std::int64_t>> integer_coeffs_;  // c[j][k], f_j = sqrt(2j+1) * sum c[j][k] x^k
    std::vector<std::vector<double>> coeffs_;                // sqrt(2j+1) * c[j][k]
};

}  // namespace hcr
