#pragma once

// Small numerical utilities shared across the library: bracketed scalar
// optimization, a bounded Nelder-Mead simplex, Gauss-Legendre quadrature on
// [0,1], adaptive Simpson integration, isotonic regression, and a
// deterministic pairwise accumulator used by the chunked estimators.

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hcr::num {

struct ScalarMinResult {
    double x = 0.0;
    double fx = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// Golden-section minimization on [lo, hi]. The interval is assumed to
// bracket a single local minimum; tol is the absolute x tolerance.
ScalarMinResult golden_section_minimize(const std::function<double(double)>& f,
                                        double lo, double hi, double tol,
                                        int max_iter = 200);

struct NelderMeadOptions {
    int max_iter = 500;
    double f_tol = 1e-10;
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Nelder-Mead with box constraints enforced by clamping proposals.
NelderMeadResult nelder_mead_minimize(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> start, const std::vector<double>& step,
    const std::vector<double>& lower, const std::vector<double>& upper,
    const NelderMeadOptions& opts = {});

struct Quadrature {
    std::vector<double> nodes;    // in (0,1)
    std::vector<double> weights;  // sum to 1
};

// Gauss-Legendre nodes and weights mapped to [0,1]; cached per order.
const Quadrature& gauss_legendre_unit(int order);

// Recursive adaptive Simpson on [a,b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth = 48);

// Weighted isotonic (nondecreasing) least-squares fit via pool-adjacent-
// violators. Returns the fitted values; weights must be nonnegative.
std::vector<double> isotonic_fit(std::span<const double> y,
                                 std::span<const double> w);

// Deterministic pairwise reduction over equally sized chunks: partial sums
// are merged with a binary-counter tree, so the result depends only on the
// order chunks are pushed, not on how they were produced.
class PairwiseAccumulator {
public:
    explicit PairwiseAccumulator(std::size_t width);

    void push(std::vector<double>&& chunk_sum);
    std::vector<double> finish();

private:
    std::size_t width_;
    std::vector<std::optional<std::vector<double>>> levels_;
};

// Refine a sign change of f inside [lo, hi] by bisection; requires
// f(lo) and f(hi) of opposite sign.
double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, double flo, double fhi, int iterations = 100);

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // population (divides by n)
double median(std::vector<double> v);        // averages central order stats

}  // namespace hcr::num
