#include "hcr/polybasis.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hcr/errors.hpp"

namespace hcr {

namespace {

std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// lcm(1..2*kMaxBasisDegree+1); every monomial integral 1/(p+q+1) becomes an
// integer multiple of 1/L.
std::int64_t common_denominator() {
    std::int64_t l = 1;
    for (int i = 2; i <= 2 * kMaxBasisDegree + 1; ++i) l = std::lcm<std::int64_t>(l, i);
    return l;
}

}  // namespace

OrthoBasis::OrthoBasis(int max_degree) : max_degree_(max_degree) {
    if (max_degree < 0 || max_degree > kMaxBasisDegree)
        throw Error(errc::unsupported_degree,
                    "basis degree must lie in [0, " + std::to_string(kMaxBasisDegree) +
                        "], got " + std::to_string(max_degree));
    integer_coeffs_.resize(max_degree + 1);
    coeffs_.resize(max_degree + 1);
    for (int j = 0; j <= max_degree; ++j) {
        integer_coeffs_[j].resize(j + 1);
        coeffs_[j].resize(j + 1);
        const double norm = std::sqrt(2.0 * j + 1.0);
        for (int k = 0; k <= j; ++k) {
            // Shifted Legendre: coefficient of x^k is (-1)^(j+k) C(j,k) C(j+k,k).
            std::int64_t c = binomial(j, k) * binomial(j + k, k);
            if ((j + k) % 2 == 1) c = -c;
            integer_coeffs_[j][k] = c;
            coeffs_[j][k] = norm * double(c);
        }
    }
}

void OrthoBasis::check_index(int j) const {
    if (j < 0 || j > max_degree_)
        throw Error(errc::unsupported_degree,
                    "basis index " + std::to_string(j) + " exceeds max degree " +
                        std::to_string(max_degree_));
}

std::span<const double> OrthoBasis::monomial_coeffs(int j) const {
    check_index(j);
    return coeffs_[j];
}

double OrthoBasis::evaluate(int j, double x) const {
    check_index(j);
    if (!(x >= 0.0 && x <= 1.0))
        throw Error(errc::domain, "basis evaluation point outside [0,1]");
    const auto& c = coeffs_[j];
    double acc = c[j];
    for (int k = j - 1; k >= 0; --k) acc = acc * x + c[k];
    return acc;
}

void OrthoBasis::evaluate_all(double x, std::span<double> out) const {
    if (out.size() != std::size_t(max_degree_ + 1))
        throw Error(errc::shape_mismatch, "evaluate_all output span has wrong size");
    if (!(x >= 0.0 && x <= 1.0))
        throw Error(errc::domain, "basis evaluation point outside [0,1]");
    for (int j = 0; j <= max_degree_; ++j) {
        const auto& c = coeffs_[j];
        double acc = c[j];
        for (int k = j - 1; k >= 0; --k) acc = acc * x + c[k];
        out[j] = acc;
    }
}

std::vector<double> OrthoBasis::evaluate_all(double x) const {
    std::vector<double> out(max_degree_ + 1);
    evaluate_all(x, std::span<double>(out));
    return out;
}

double OrthoBasis::integrate_product(int j, int k) const {
    check_index(j);
    check_index(k);
    static const std::int64_t denom = common_denominator();
    __int128 sum = 0;
    for (int p = 0; p <= j; ++p) {
        for (int q = 0; q <= k; ++q) {
            __int128 term = __int128(integer_coeffs_[j][p]) * integer_coeffs_[k][q];
            term *= denom / (p + q + 1);
            sum += term;
        }
    }
    if (sum == 0) return 0.0;
    const double norm = std::sqrt(double(2 * j + 1) * double(2 * k + 1));
    return norm * double(sum) / double(denom);
}

nlohmann::json OrthoBasis::coefficients_json() const {
    nlohmann::json rows = nlohmann::json::array();
    char buf[40];
    for (const auto& poly : coeffs_) {
        nlohmann::json row = nlohmann::json::array();
        for (double c : poly) {
            std::snprintf(buf, sizeof(buf), "%.17g", c);
            row.push_back(std::string(buf));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace hcr
