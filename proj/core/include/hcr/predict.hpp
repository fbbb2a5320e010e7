#pragma once

// Conditional density prediction: substituting a context into the estimated
// joint-density tensor leaves a 1D polynomial in the current value, which is
// normalized to unit integral. Raw polynomials can dip below zero; a
// monotone calibration map reinterprets such values as small positive
// densities and the result is renormalized.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hcr/estimate.hpp"
#include "hcr/polybasis.hpp"

namespace hcr {

// Degree-m polynomial on [0,1] in the orthonormal basis. After conditioning
// coeffs[0] == 1, which makes the raw integral over [0,1] exactly 1.
struct PredictedDensity1D {
    std::vector<double> coeffs;

    double raw_at(const OrthoBasis& basis, double x) const;
    // Monomial coefficients (ascending powers) of the polynomial.
    std::vector<double> monomial(const OrthoBasis& basis) const;
};

class Calibration {
public:
    enum class Kind { none, clamp, piecewise_linear, empirical };

    static Calibration none();
    // phi(z) = max(z, floor), floor > 0.
    static Calibration clamp(double floor);
    // phi(z) = max(floor, min(z, slope*z + knee)); identity on the middle
    // range, constant floor below, damped slope above. Requires floor > 0,
    // 0 <= slope <= 1 and floor <= knee/(1-slope).
    static Calibration piecewise_linear(double floor, double slope, double knee);
    // Monotone lookup curve; knots ascending in z, values nondecreasing and
    // positive; constant extension beyond the knot range.
    static Calibration empirical(std::vector<double> z, std::vector<double> phi);

    Kind kind() const noexcept { return kind_; }
    double apply(double z) const;

    double floor_value() const noexcept { return floor_; }
    double slope() const noexcept { return slope_; }
    double knee() const noexcept { return knee_; }
    const std::vector<double>& knots_z() const noexcept { return knots_z_; }
    const std::vector<double>& knots_phi() const noexcept { return knots_phi_; }

    nlohmann::json to_json() const;
    static Calibration from_json(const nlohmann::json& j);

private:
    Calibration() = default;
    Kind kind_ = Kind::none;
    double floor_ = 0.0;
    double slope_ = 0.0;
    double knee_ = 0.0;
    std::vector<double> knots_z_, knots_phi_;
};

// Substitutes the d-1 context coordinates and divides by the resulting mass
// so the returned polynomial integrates to 1. Throws DegenerateContextError
// when the substituted mass is nonpositive; callers typically fall back to
// the uniform density.
PredictedDensity1D condition(const CoefficientTensor& t, const OrthoBasis& basis,
                             std::span<const double> context);

// Integral over [0,1] of phi(rho(x)). Exact piecewise-polynomial
// integration for the parametric calibrations, adaptive Simpson for
// empirical curves, and the (exact) raw integral coeffs[0] for Kind::none.
double calibrated_normalizer(const PredictedDensity1D& p, const OrthoBasis& basis,
                             const Calibration& cal);

// phi(rho(x)) / integral of phi(rho(u)) du. With Kind::none this is the raw
// polynomial value and may be negative.
double predicted_density_at(const PredictedDensity1D& p, const OrthoBasis& basis, double x,
                            const Calibration& cal);

// Precomputes the normalizer once for repeated evaluation of one prediction.
class CalibratedDensity {
public:
    CalibratedDensity(PredictedDensity1D p, const OrthoBasis& basis, Calibration cal);

    double operator()(double x) const;
    double normalizer() const noexcept { return z_; }

private:
    PredictedDensity1D p_;
    const OrthoBasis* basis_;
    Calibration cal_;
    double z_;
};

// Density of rho_Y(y) on the original scale for a calibrated prediction on
// the normalized scale (change of variables through the marginal CDF).
double density_pullback(const PredictedDensity1D& p, const OrthoBasis& basis,
                        const Calibration& cal, const MarginalModel& model, double y);

// Ratio-of-densities calibration: compares the distribution of predicted
// density values at the actually observed points against the distribution of
// predicted values everywhere (a regular lattice of `grid` points per
// polynomial), divides the two, and monotonizes the ratio by isotonic
// regression. Extended by constants outside the shared support.
Calibration calibrate_empirical(std::span<const PredictedDensity1D> preds,
                                std::span<const double> actuals, const OrthoBasis& basis,
                                int grid = 1000);

enum class CalibrationFamily { clamp, piecewise_linear };

struct CalibrationFitResult {
    Calibration calibration = Calibration::none();
    double mean_log2_density = 0.0;  // of the calibrated, renormalized predictions
    bool converged = true;
};

struct CalibrationFitOptions {
    double floor_min = 1e-4;
    double floor_max = 1.0;
    int quadrature_points = 256;  // inner-loop normalizer during the search
};

// Maximum-likelihood calibration within a parametric family; the returned
// parameters maximize the mean log of the renormalized calibrated density at
// the actual values.
CalibrationFitResult fit_calibration_mle(std::span<const PredictedDensity1D> preds,
                                         std::span<const double> actuals,
                                         const OrthoBasis& basis, CalibrationFamily family,
                                         const CalibrationFitOptions& opts = {});

namespace detail {

// Numerator coefficients b_{j1} = sum over entries of a_j * prod_{i>=1}
// f_{j_i}(context_{i-1}) before any normalization; shared by tensor and
// adaptive-state conditioning.
std::vector<double> condition_numerator(std::span<const int> degrees,
                                        std::span<const std::uint64_t> indices,
                                        std::span<const double> values, const OrthoBasis& basis,
                                        std::span<const double> context);

}  // namespace detail

}  // namespace hcr
