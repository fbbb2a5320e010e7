#pragma once

// Scoring and baselines: mean log2 density (bits), coverage and
// sorted-prediction curves, an ARCH(0,1) Gaussian baseline, and ordinary
// least-squares linear predictors.

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hcr {

// Mean of log2(density) over predictions; densities must be positive
// (a nonpositive density signals missing calibration upstream).
double log_likelihood_bits(std::span<const double> densities_at_actuals);

struct CoverageCurve {
    std::vector<double> sorted;  // ascending normalized values
    // max_i |sorted_i - (i - 1/2)/n|, the Kolmogorov-Smirnov distance from
    // the uniform diagonal.
    double ks_distance = 0.0;
};

CoverageCurve coverage_curve(std::span<const double> x);

struct SortedPredictionCurve {
    std::vector<double> sorted;  // ascending predicted densities at actuals
    double fraction_below_one = 0.0;
};

SortedPredictionCurve sorted_prediction_curve(std::span<const double> densities);

struct EvalReport {
    std::string model;
    double mean_log2_density = 0.0;
    std::vector<double> coverage_curve;
    std::vector<double> sorted_density_curve;
    std::size_t n = 0;

    nlohmann::json to_json() const;
};

struct ArchModel {
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    double mean = 0.0;    // series mean subtracted before the variance recursion
    bool std_form = false;  // sigma^t   = a0 + a1 y^2 (literal reading) instead of
                            // sigma^2_t = a0 + a1 y^2 (standard ARCH(1), default)

    // Conditional variance given the previous (centered) value.
    double variance_given(double prev_centered) const;
};

struct ArchFitOptions {
    bool std_form = false;
    int max_iter = 500;
};

struct ArchFit {
    ArchModel model;
    std::vector<double> densities;  // per-step Gaussian predictive densities
    double mean_log2_density = 0.0;
};

// Gaussian log-likelihood fit of (alpha0, alpha1) by bounded Nelder-Mead.
// The first step, which has no predecessor, is scored with the sample
// variance.
ArchFit fit_arch01(std::span<const double> y, const ArchFitOptions& opts = {});

struct LinearPredictor {
    std::vector<double> beta;       // beta_0 (intercept), beta_1..beta_k
    std::vector<double> residuals;  // v^t - prediction, for t = k..n-1
};

// Least squares via normal equations. An exactly constant series returns
// (c, 0, ..., 0); any other singular design is a rank error.
LinearPredictor fit_linear_predictor(std::span<const double> v, int k);

}  // namespace hcr
