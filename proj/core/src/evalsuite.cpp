#include "hcr/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hcr/errors.hpp"
#include "hcr/numerics.hpp"

namespace hcr {

double log_likelihood_bits(std::span<const double> densities_at_actuals) {
    if (densities_at_actuals.empty())
        throw Error(errc::insufficient_data, "no densities to score");
    double sum = 0.0;
    for (double d : densities_at_actuals) {
        if (!(d > 0.0))
            throw Error(errc::contract,
                        "nonpositive predicted density; calibrate before scoring");
        sum += std::log2(d);
    }
    return sum / double(densities_at_actuals.size());
}

CoverageCurve coverage_curve(std::span<const double> x) {
    if (x.empty()) throw Error(errc::insufficient_data, "empty sequence");
    CoverageCurve c;
    c.sorted.assign(x.begin(), x.end());
    std::sort(c.sorted.begin(), c.sorted.end());
    const double n = double(c.sorted.size());
    for (std::size_t i = 0; i < c.sorted.size(); ++i)
        c.ks_distance = std::max(c.ks_distance,
                                 std::abs(c.sorted[i] - (double(i) + 0.5) / n));
    return c;
}

SortedPredictionCurve sorted_prediction_curve(std::span<const double> densities) {
    if (densities.empty()) throw Error(errc::insufficient_data, "empty sequence");
    SortedPredictionCurve s;
    s.sorted.assign(densities.begin(), densities.end());
    std::sort(s.sorted.begin(), s.sorted.end());
    const auto below = std::lower_bound(s.sorted.begin(), s.sorted.end(), 1.0);
    s.fraction_below_one = double(below - s.sorted.begin()) / double(s.sorted.size());
    return s;
}

nlohmann::json EvalReport::to_json() const {
    return nlohmann::json{{"model", model},
                          {"mean_log2_density", mean_log2_density},
                          {"n", n},
                          {"coverage_curve_size", coverage_curve.size()},
                          {"sorted_density_curve_size", sorted_density_curve.size()}};
}

double ArchModel::variance_given(double prev_centered) const {
    const double driver = alpha0 + alpha1 * prev_centered * prev_centered;
    return std_form ? driver * driver : driver;
}

namespace {

double gaussian_log_density(double y, double var) {
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * y * y / var;
}

}  // namespace

ArchFit fit_arch01(std::span<const double> y, const ArchFitOptions& opts) {
    if (y.size() < 50) throw Error(errc::insufficient_data, "ARCH fit needs at least 50 values");
    const std::size_t n = y.size();
    const double mu = num::mean(y);
    std::vector<double> e(n);
    for (std::size_t t = 0; t < n; ++t) e[t] = y[t] - mu;
    const double var = num::variance(y);
    if (!(var > 0.0)) throw Error(errc::degenerate_scale, "constant series");

    auto neg_ll = [&](std::span<const double> p) {
        ArchModel m{p[0], p[1], mu, opts.std_form};
        double ll = 0.0;
        for (std::size_t t = 1; t < n; ++t) {
            const double v = m.variance_given(e[t - 1]);
            if (!(v > 0.0)) return 1e100;
            ll += gaussian_log_density(e[t], v);
        }
        return -ll / double(n - 1);
    };

    const double scale = opts.std_form ? std::sqrt(var) : var;
    num::NelderMeadOptions nm;
    nm.max_iter = opts.max_iter;
    auto res = num::nelder_mead_minimize(neg_ll, {0.5 * scale, 0.2},
                                         {0.25 * scale, 0.1}, {1e-12 * scale, 0.0},
                                         {10.0 * scale, 3.0}, nm);
    if (!std::isfinite(res.fx) || res.fx >= 1e99)
        throw FitFailureError("ARCH likelihood not finite", res.x);

    ArchFit fit;
    fit.model = ArchModel{res.x[0], res.x[1], mu, opts.std_form};
    fit.densities.resize(n);
    fit.densities[0] = std::exp(gaussian_log_density(e[0], var));
    for (std::size_t t = 1; t < n; ++t)
        fit.densities[t] =
            std::exp(gaussian_log_density(e[t], fit.model.variance_given(e[t - 1])));
    fit.mean_log2_density = log_likelihood_bits(fit.densities);
    if (!res.converged)
        throw FitFailureError("ARCH fit exceeded max iterations",
                              {fit.model.alpha0, fit.model.alpha1});
    return fit;
}

LinearPredictor fit_linear_predictor(std::span<const double> v, int k) {
    if (k < 0) throw Error(errc::config, "linear predictor order must be nonnegative");
    if (v.size() < std::size_t(k) + 2)
        throw Error(errc::insufficient_data, "series too short for the requested order");
    const std::size_t rows = v.size() - std::size_t(k);
    const int cols = k + 1;

    // Exactly constant series: the intercept alone reproduces it.
    const bool constant = std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    if (constant) {
        LinearPredictor out;
        out.beta.assign(std::size_t(cols), 0.0);
        out.beta[0] = v[0];
        out.residuals.assign(rows, 0.0);
        return out;
    }

    const Eigen::Index nrows = Eigen::Index(rows);
    Eigen::MatrixXd design(nrows, cols);
    Eigen::VectorXd target(nrows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + std::size_t(k);
        design(Eigen::Index(r), 0) = 1.0;
        for (int i = 1; i <= k; ++i)
            design(Eigen::Index(r), i) = v[t - std::size_t(i)];
        target(Eigen::Index(r)) = v[t];
    }

    const Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::VectorXd rhs = design.transpose() * target;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd diag = ldlt.vectorD();
    const double dmax = diag.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(dmax > 0.0) ||
        diag.cwiseAbs().minCoeff() <= 1e-12 * dmax)
        throw Error(errc::rank_deficient, "singular design matrix");
    const Eigen::VectorXd beta = ldlt.solve(rhs);
    if (!beta.allFinite()) throw Error(errc::rank_deficient, "singular design matrix");

    LinearPredictor out;
    out.beta.assign(beta.data(), beta.data() + cols);
    out.residuals.resize(rows);
    for (std::size_t r = 0; r < rows; ++r)
        out.residuals[r] = target(Eigen::Index(r)) - design.row(Eigen::Index(r)).dot(beta);
    return out;
}

}  // namespace hcr
