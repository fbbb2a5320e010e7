#pragma once

// Marginal modelling of 1D series: log-returns, Gaussian / Laplace / EPD
// fits, probability-integral-transform normalization to near-uniform [0,1]
// variables, and the change-of-variables pullback of densities predicted on
// the normalized scale.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hcr {

struct SeriesFrame {
    std::string name;
    std::vector<double> values;
    std::vector<double> timestamps;  // optional; empty or same length as values
};

enum class MarginalFamily { gaussian, laplace, epd };

std::string family_name(MarginalFamily f);
MarginalFamily family_from_name(const std::string& name);

// Fitted 1D distribution. `scale` is sigma for Gaussian/EPD and b for
// Laplace; `shape` is the EPD exponent kappa (1 = Laplace, 2 = Gaussian) and
// is ignored by the other families.
struct MarginalModel {
    MarginalFamily family = MarginalFamily::laplace;
    double location = 0.0;
    double scale = 1.0;
    double shape = 1.0;

    double pdf(double y) const;
    double log_pdf(double y) const;
    double cdf(double y) const;
    // Inverse CDF; p must lie strictly inside (0,1).
    double quantile(double p) const;

    nlohmann::json to_json() const;  // {family, mu, scale, kappa?}
    static MarginalModel from_json(const nlohmann::json& j);
};

struct NormalizedSeries {
    std::vector<double> x;  // strictly inside (0,1)
    MarginalModel model;
};

// y^t = ln(v^{t+1}) - ln(v^t); requires positive values and length >= 2.
std::vector<double> log_returns(std::span<const double> values);
std::vector<double> log_returns(const SeriesFrame& s);

// mu = sample mean, sigma = population standard deviation.
MarginalModel fit_gaussian(std::span<const double> y);

// mu = sample median (central order statistics averaged for even length),
// b = mean absolute deviation from mu.
MarginalModel fit_laplace(std::span<const double> y);

struct EpdFitOptions {
    double kappa_min = 0.3;
    double kappa_max = 4.0;
    double kappa_tol = 1e-4;
    int max_iter = 200;
};

// Maximum-likelihood exponential power distribution fit by profile search
// over kappa with closed-form scale and location solved per kappa.
MarginalModel fit_epd(std::span<const double> y, const EpdFitOptions& opts = {});

// Elementwise CDF transform; outputs are clamped strictly inside (0,1).
NormalizedSeries normalize(std::span<const double> y, const MarginalModel& model);

// rho_Y(y) = rho_X(G(y)) * g(y) for a density rho_X on the normalized scale.
double density_pullback(const std::function<double(double)>& rho_x,
                        const MarginalModel& model, double y);

}  // namespace hcr
