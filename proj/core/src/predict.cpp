#include "hcr/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "hcr/errors.hpp"
#include "hcr/numerics.hpp"

namespace hcr {

double PredictedDensity1D::raw_at(const OrthoBasis& basis, double x) const {
    if (coeffs.size() > std::size_t(basis.max_degree()) + 1)
        throw Error(errc::shape_mismatch, "prediction degree exceeds basis degree");
    double sum = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j)
        sum += coeffs[j] * basis.evaluate(int(j), x);
    return sum;
}

std::vector<double> PredictedDensity1D::monomial(const OrthoBasis& basis) const {
    std::vector<double> mono(coeffs.size(), 0.0);
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        auto c = basis.monomial_coeffs(int(j));
        for (std::size_t k = 0; k < c.size(); ++k) mono[k] += coeffs[j] * c[k];
    }
    return mono;
}

Calibration Calibration::none() { return Calibration(); }

Calibration Calibration::clamp(double floor) {
    if (!(floor > 0.0)) throw Error(errc::config, "calibration floor must be positive");
    Calibration c;
    c.kind_ = Kind::clamp;
    c.floor_ = floor;
    return c;
}

Calibration Calibration::piecewise_linear(double floor, double slope, double knee) {
    if (!(floor > 0.0)) throw Error(errc::config, "calibration floor must be positive");
    if (!(slope >= 0.0 && slope <= 1.0))
        throw Error(errc::config, "calibration slope must lie in [0,1]");
    if (slope < 1.0 && floor > knee / (1.0 - slope))
        throw Error(errc::config, "calibration floor exceeds the identity range");
    Calibration c;
    c.kind_ = Kind::piecewise_linear;
    c.floor_ = floor;
    c.slope_ = slope;
    c.knee_ = knee;
    return c;
}

Calibration Calibration::empirical(std::vector<double> z, std::vector<double> phi) {
    if (z.size() != phi.size() || z.empty())
        throw Error(errc::config, "empirical calibration needs matching nonempty knot arrays");
    if (!std::is_sorted(z.begin(), z.end()))
        throw Error(errc::config, "empirical calibration knots must ascend");
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (!(phi[i] > 0.0)) throw Error(errc::config, "empirical calibration values must be positive");
        if (i > 0 && phi[i] < phi[i - 1])
            throw Error(errc::config, "empirical calibration values must be nondecreasing");
    }
    Calibration c;
    c.kind_ = Kind::empirical;
    c.floor_ = phi.front();
    c.knots_z_ = std::move(z);
    c.knots_phi_ = std::move(phi);
    return c;
}

double Calibration::apply(double z) const {
    switch (kind_) {
        case Kind::none:
            return z;
        case Kind::clamp:
            return std::max(z, floor_);
        case Kind::piecewise_linear:
            return std::max(floor_, std::min(z, slope_ * z + knee_));
        case Kind::empirical: {
            if (z <= knots_z_.front()) return knots_phi_.front();
            if (z >= knots_z_.back()) return knots_phi_.back();
            auto it = std::upper_bound(knots_z_.begin(), knots_z_.end(), z);
            const std::size_t hi = std::size_t(it - knots_z_.begin());
            const std::size_t lo = hi - 1;
            const double span = knots_z_[hi] - knots_z_[lo];
            if (span <= 0.0) return knots_phi_[lo];
            const double w = (z - knots_z_[lo]) / span;
            return knots_phi_[lo] + w * (knots_phi_[hi] - knots_phi_[lo]);
        }
    }
    return z;
}

nlohmann::json Calibration::to_json() const {
    switch (kind_) {
        case Kind::none:
            return nlohmann::json{{"kind", "none"}};
        case Kind::clamp:
            return nlohmann::json{{"kind", "clamp"}, {"floor", floor_}};
        case Kind::piecewise_linear:
            return nlohmann::json{
                {"kind", "piecewise_linear"}, {"floor", floor_}, {"slope", slope_}, {"knee", knee_}};
        case Kind::empirical:
            return nlohmann::json{
                {"kind", "empirical"}, {"z", knots_z_}, {"phi", knots_phi_}};
    }
    return {};
}

Calibration Calibration::from_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "none") return none();
        if (kind == "clamp") return clamp(j.at("floor").get<double>());
        if (kind == "piecewise_linear")
            return piecewise_linear(j.at("floor").get<double>(), j.at("slope").get<double>(),
                                    j.at("knee").get<double>());
        if (kind == "empirical")
            return empirical(j.at("z").get<std::vector<double>>(),
                             j.at("phi").get<std::vector<double>>());
        throw Error(errc::io, "unknown calibration kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::io, std::string("malformed calibration JSON: ") + e.what());
    }
}

namespace detail {

std::vector<double> condition_numerator(std::span<const int> degrees,
                                        std::span<const std::uint64_t> indices,
                                        std::span<const double> values, const OrthoBasis& basis,
                                        std::span<const double> context) {
    const int d = int(degrees.size());
    if (int(context.size()) != d - 1)
        throw Error(errc::shape_mismatch, "context must have d-1 coordinates");
    const int mmax = d > 1 ? *std::max_element(degrees.begin() + 1, degrees.end()) : 0;
    std::vector<double> ctx_buf(std::size_t(std::max(d - 1, 0)) * std::size_t(mmax + 1));
    std::vector<double> all(std::size_t(basis.max_degree()) + 1);
    for (int i = 0; i + 1 < d; ++i) {
        if (!(context[std::size_t(i)] >= 0.0 && context[std::size_t(i)] <= 1.0))
            throw Error(errc::domain, "context coordinate outside [0,1]");
        basis.evaluate_all(context[std::size_t(i)], all);
        std::copy(all.begin(), all.begin() + degrees[std::size_t(i) + 1] + 1,
                  ctx_buf.begin() + std::size_t(i) * std::size_t(mmax + 1));
    }

    std::vector<double> b(std::size_t(degrees[0]) + 1, 0.0);
    const std::uint64_t s0 = std::uint64_t(degrees[0]) + 1;
    for (std::size_t e = 0; e < indices.size(); ++e) {
        std::uint64_t rest = indices[e];
        const int j0 = int(rest % s0);
        rest /= s0;
        double prod = 1.0;
        for (int i = 1; i < d; ++i) {
            const std::uint64_t s = std::uint64_t(degrees[std::size_t(i)]) + 1;
            const int j = int(rest % s);
            rest /= s;
            if (j > 0)
                prod *= ctx_buf[std::size_t(i - 1) * std::size_t(mmax + 1) + std::size_t(j)];
        }
        b[std::size_t(j0)] += values[e] * prod;
    }
    return b;
}

}  // namespace detail

PredictedDensity1D condition(const CoefficientTensor& t, const OrthoBasis& basis,
                             std::span<const double> context) {
    std::vector<double> b = detail::condition_numerator(t.degrees(), t.indices(), t.values(),
                                                        basis, context);
    const double mass = b[0];
    if (!(mass > 0.0))
        throw DegenerateContextError("context has nonpositive substituted mass", mass);
    for (double& v : b) v /= mass;
    b[0] = 1.0;
    return PredictedDensity1D{std::move(b)};
}

namespace {

// Antiderivative evaluation of a monomial polynomial.
double poly_integral(std::span<const double> mono, double x0, double x1) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t k = mono.size(); k-- > 0;) {
        const double c = mono[k] / double(k + 1);
        s0 = s0 * x0 + c;
        s1 = s1 * x1 + c;
    }
    return s1 * x1 - s0 * x0;
}

double poly_eval(std::span<const double> mono, double x) {
    double s = 0.0;
    for (std::size_t k = mono.size(); k-- > 0;) s = s * x + mono[k];
    return s;
}

// All real roots of p(x) - level inside (0,1), via the companion matrix of
// the trimmed polynomial with a short Newton polish. Exhaustive, so pieces
// between consecutive roots carry a single calibration branch.
void level_crossings(std::span<const double> mono, double level, std::vector<double>& out) {
    std::vector<double> c(mono.begin(), mono.end());
    if (c.empty()) return;
    c[0] -= level;
    double scale = 0.0;
    for (double v : c) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return;  // identically the level; no pieces to split
    int deg = int(c.size()) - 1;
    while (deg > 0 && std::abs(c[std::size_t(deg)]) <= 1e-14 * scale) --deg;
    if (deg == 0) return;

    std::vector<double> roots;
    if (deg == 1) {
        roots.push_back(-c[0] / c[1]);
    } else {
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
        for (int i = 0; i < deg; ++i)
            companion(i, deg - 1) = -c[std::size_t(i)] / c[std::size_t(deg)];
        for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
        const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
        for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
            const auto ev = solver.eigenvalues()(i);
            if (std::abs(ev.imag()) <= 1e-8 * std::max(1.0, std::abs(ev.real())))
                roots.push_back(ev.real());
        }
    }
    auto deriv_eval = [&](double x) {
        double s = 0.0;
        for (std::size_t k = c.size(); k-- > 1;) s = s * x + double(k) * c[k];
        return s;
    };
    for (double r : roots) {
        if (!(r > -0.05 && r < 1.05)) continue;
        for (int it = 0; it < 3; ++it) {  // polish
            const double f = poly_eval(std::span<const double>(c), r);
            const double df = deriv_eval(r);
            if (df == 0.0) break;
            const double next = r - f / df;
            if (!(next > -0.1 && next < 1.1)) break;
            r = next;
        }
        if (r > 1e-12 && r < 1.0 - 1e-12) out.push_back(r);
    }
}

// Exact integral of phi(p(x)) over [0,1] for the parametric calibrations:
// split [0,1] at the level crossings and integrate each branch in closed
// form.
double integrate_parametric(std::span<const double> mono, const Calibration& cal) {
    std::vector<double> cuts{0.0, 1.0};
    level_crossings(mono, cal.floor_value(), cuts);
    const bool has_knee = cal.kind() == Calibration::Kind::piecewise_linear && cal.slope() < 1.0;
    const double knee_level = has_knee ? cal.knee() / (1.0 - cal.slope())
                                       : std::numeric_limits<double>::infinity();
    if (has_knee) level_crossings(mono, knee_level, cuts);
    std::sort(cuts.begin(), cuts.end());

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double x0 = cuts[i], x1 = cuts[i + 1];
        if (!(x1 > x0)) continue;
        const double zm = poly_eval(mono, 0.5 * (x0 + x1));
        if (zm <= cal.floor_value()) {
            total += cal.floor_value() * (x1 - x0);
        } else if (zm >= knee_level) {
            total += cal.slope() * poly_integral(mono, x0, x1) + cal.knee() * (x1 - x0);
        } else {
            total += poly_integral(mono, x0, x1);
        }
    }
    return total;
}

}  // namespace

double calibrated_normalizer(const PredictedDensity1D& p, const OrthoBasis& basis,
                             const Calibration& cal) {
    switch (cal.kind()) {
        case Calibration::Kind::none:
            // f_0 = 1 and every other basis function integrates to 0.
            return p.coeffs.empty() ? 0.0 : p.coeffs[0];
        case Calibration::Kind::clamp:
        case Calibration::Kind::piecewise_linear: {
            const std::vector<double> mono = p.monomial(basis);
            return integrate_parametric(mono, cal);
        }
        case Calibration::Kind::empirical: {
            const std::vector<double> mono = p.monomial(basis);
            return num::adaptive_simpson(
                [&](double x) { return cal.apply(poly_eval(mono, x)); }, 0.0, 1.0, 1e-10);
        }
    }
    return 1.0;
}

double predicted_density_at(const PredictedDensity1D& p, const OrthoBasis& basis, double x,
                            const Calibration& cal) {
    if (cal.kind() == Calibration::Kind::none) return p.raw_at(basis, x);
    const double z = calibrated_normalizer(p, basis, cal);
    if (!(z > 0.0)) throw Error(errc::numeric, "calibrated normalizer is nonpositive");
    return cal.apply(p.raw_at(basis, x)) / z;
}

CalibratedDensity::CalibratedDensity(PredictedDensity1D p, const OrthoBasis& basis,
                                     Calibration cal)
    : p_(std::move(p)), basis_(&basis), cal_(std::move(cal)) {
    z_ = calibrated_normalizer(p_, *basis_, cal_);
    if (!(z_ > 0.0)) throw Error(errc::numeric, "calibrated normalizer is nonpositive");
}

double CalibratedDensity::operator()(double x) const {
    if (cal_.kind() == Calibration::Kind::none) return p_.raw_at(*basis_, x);
    return cal_.apply(p_.raw_at(*basis_, x)) / z_;
}

double density_pullback(const PredictedDensity1D& p, const OrthoBasis& basis,
                        const Calibration& cal, const MarginalModel& model, double y) {
    CalibratedDensity dens(p, basis, cal);
    return density_pullback([&](double u) { return dens(u); }, model, y);
}

Calibration calibrate_empirical(std::span<const PredictedDensity1D> preds,
                                std::span<const double> actuals, const OrthoBasis& basis,
                                int grid) {
    if (preds.size() != actuals.size())
        throw Error(errc::shape_mismatch, "predictions and actual values differ in length");
    if (preds.size() < 100)
        throw Error(errc::insufficient_data, "empirical calibration needs at least 100 samples");
    if (grid < 100) throw Error(errc::config, "empirical calibration grid must be >= 100");

    const std::size_t n = preds.size();
    std::vector<std::vector<double>> monos(n);
    for (std::size_t t = 0; t < n; ++t) monos[t] = preds[t].monomial(basis);

    std::vector<double> at_actual(n);
    for (std::size_t t = 0; t < n; ++t) at_actual[t] = poly_eval(monos[t], actuals[t]);
    std::vector<double> sorted_r = at_actual;
    std::sort(sorted_r.begin(), sorted_r.end());

    // Pass 1: range of all predicted values over the lattice.
    double zmin = std::numeric_limits<double>::infinity();
    double zmax = -zmin;
    for (std::size_t t = 0; t < n; ++t)
        for (int g = 0; g < grid; ++g) {
            const double v = poly_eval(monos[t], (g + 0.5) / double(grid));
            zmin = std::min(zmin, v);
            zmax = std::max(zmax, v);
        }
    if (!(zmax - zmin > 1e-9)) {
        // Context-free predictions concentrate at a single value; both
        // densities coincide there and the ratio is 1.
        return Calibration::empirical({zmin}, {1.0});
    }

    // Pass 2: histogram of all predicted values.
    const int fine = 4096;
    std::vector<double> hist_all(fine, 0.0);
    const double inv_width = fine / (zmax - zmin);
    for (std::size_t t = 0; t < n; ++t)
        for (int g = 0; g < grid; ++g) {
            const double v = poly_eval(monos[t], (g + 0.5) / double(grid));
            int b = int((v - zmin) * inv_width);
            b = std::clamp(b, 0, fine - 1);
            hist_all[std::size_t(b)] += 1.0;
        }
    std::vector<double> cum_all(fine + 1, 0.0);
    for (int b = 0; b < fine; ++b) cum_all[std::size_t(b) + 1] = cum_all[std::size_t(b)] + hist_all[std::size_t(b)];

    auto count_all_below = [&](double z) -> double {
        const double pos = std::clamp((z - zmin) * inv_width, 0.0, double(fine));
        const int b = std::min(int(pos), fine - 1);
        const double frac = pos - double(b);
        return cum_all[std::size_t(b)] + frac * hist_all[std::size_t(b)];
    };

    // Ratio of the two empirical densities on the shared support, over a
    // coarse lattice of bins.
    const double lo = std::max(sorted_r.front(), zmin);
    const double hi = std::min(sorted_r.back(), zmax);
    if (!(hi > lo)) throw Error(errc::numeric, "empirical calibration: empty shared support");
    const int bins = 200;
    std::vector<double> centers, ratio, weight;
    const double total_all = double(n) * double(grid);
    for (int c = 0; c < bins; ++c) {
        const double e0 = lo + (hi - lo) * c / double(bins);
        const double e1 = lo + (hi - lo) * (c + 1) / double(bins);
        const auto r0 = std::lower_bound(sorted_r.begin(), sorted_r.end(), e0);
        const auto r1 = std::lower_bound(sorted_r.begin(), sorted_r.end(), e1);
        const double mass_r = double(r1 - r0) / double(n);
        const double mass_all = (count_all_below(e1) - count_all_below(e0)) / total_all;
        if (mass_all <= 0.0) continue;
        centers.push_back(0.5 * (e0 + e1));
        ratio.push_back(mass_r / mass_all);
        weight.push_back(mass_all);
    }
    if (centers.empty()) throw Error(errc::numeric, "empirical calibration: no populated bins");

    std::vector<double> fitted = num::isotonic_fit(ratio, weight);
    constexpr double kPhiFloor = 1e-6;
    for (double& v : fitted) v = std::max(v, kPhiFloor);
    return Calibration::empirical(std::move(centers), std::move(fitted));
}

namespace {

struct MleWork {
    std::vector<double> at_actual;        // raw value at the observed point
    std::vector<std::vector<double>> grid_vals;  // per prediction, values at quadrature nodes
    const std::vector<double>* weights;
};

// Mean log-likelihood of the calibrated, renormalized densities, with the
// normalizer approximated on the fixed quadrature grid (fast inner loop for
// the parameter search; finalists are re-scored exactly).
double mle_objective(const MleWork& work, const Calibration& cal) {
    const std::size_t n = work.at_actual.size();
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double z = 0.0;
        const auto& vals = work.grid_vals[t];
        for (std::size_t g = 0; g < vals.size(); ++g)
            z += (*work.weights)[g] * cal.apply(vals[g]);
        if (!(z > 0.0)) return -std::numeric_limits<double>::infinity();
        sum += std::log(cal.apply(work.at_actual[t])) - std::log(z);
    }
    return sum / double(n);
}

double exact_mean_log2(std::span<const PredictedDensity1D> preds,
                       std::span<const double> actuals, const OrthoBasis& basis,
                       const Calibration& cal) {
    double sum = 0.0;
    for (std::size_t t = 0; t < preds.size(); ++t) {
        const double z = calibrated_normalizer(preds[t], basis, cal);
        if (!(z > 0.0)) return -std::numeric_limits<double>::infinity();
        sum += std::log2(cal.apply(preds[t].raw_at(basis, actuals[t])) / z);
    }
    return sum / double(preds.size());
}

}  // namespace

CalibrationFitResult fit_calibration_mle(std::span<const PredictedDensity1D> preds,
                                         std::span<const double> actuals,
                                         const OrthoBasis& basis, CalibrationFamily family,
                                         const CalibrationFitOptions& opts) {
    if (preds.size() != actuals.size())
        throw Error(errc::shape_mismatch, "predictions and actual values differ in length");
    if (preds.size() < 100)
        throw Error(errc::insufficient_data, "calibration fit needs at least 100 samples");

    const auto& quad = num::gauss_legendre_unit(opts.quadrature_points);
    MleWork work;
    work.weights = &quad.weights;
    const std::size_t n = preds.size();
    work.at_actual.resize(n);
    work.grid_vals.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const std::vector<double> mono = preds[t].monomial(basis);
        work.at_actual[t] = poly_eval(mono, actuals[t]);
        auto& row = work.grid_vals[t];
        row.resize(quad.nodes.size());
        for (std::size_t g = 0; g < quad.nodes.size(); ++g)
            row[g] = poly_eval(mono, quad.nodes[g]);
    }

    std::vector<Calibration> finalists;
    bool converged = true;

    if (family == CalibrationFamily::clamp) {
        const std::vector<double> seeds{opts.floor_min, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5};
        double best_seed = seeds[0];
        double best_val = -std::numeric_limits<double>::infinity();
        for (double a : seeds) {
            if (a < opts.floor_min || a > opts.floor_max) continue;
            const double v = mle_objective(work, Calibration::clamp(a));
            if (v > best_val) {
                best_val = v;
                best_seed = a;
            }
            finalists.push_back(Calibration::clamp(a));
        }
        const double lo = std::max(opts.floor_min, best_seed * 0.25);
        const double hi = std::min(opts.floor_max, std::max(best_seed * 4.0, best_seed + 0.1));
        auto res = num::golden_section_minimize(
            [&](double a) { return -mle_objective(work, Calibration::clamp(a)); }, lo, hi, 1e-5);
        converged = res.converged;
        finalists.push_back(Calibration::clamp(res.x));
    } else {
        auto objective = [&](std::span<const double> p) {
            const double floor = p[0], slope = p[1], knee = p[2];
            if (slope < 1.0 && floor > knee / (1.0 - slope)) return 1e100;
            return -mle_objective(work, Calibration::piecewise_linear(floor, slope, knee));
        };
        const std::vector<double> start{0.15, 0.15, 1.7};
        auto res = num::nelder_mead_minimize(objective, start, {0.05, 0.1, 0.4},
                                             {opts.floor_min, 0.0, 0.0},
                                             {opts.floor_max, 1.0, 8.0});
        converged = res.converged;
        finalists.push_back(Calibration::piecewise_linear(0.15, 0.15, 1.7));
        if (std::isfinite(res.fx) && res.fx < 1e99)
            finalists.push_back(
                Calibration::piecewise_linear(res.x[0], res.x[1], res.x[2]));
        // slope 1, knee 0 degenerates to the plain floor clamp
        finalists.push_back(Calibration::piecewise_linear(0.2, 1.0, 0.0));
    }

    // Re-score finalists with the exact normalizer and keep the best.
    CalibrationFitResult out;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& cal : finalists) {
        const double bits = exact_mean_log2(preds, actuals, basis, cal);
        if (bits > best) {
            best = bits;
            out.calibration = cal;
        }
    }
    if (!std::isfinite(best))
        throw FitFailureError("calibration likelihood is not finite for any candidate", {});
    out.mean_log2_density = best;
    out.converged = converged;
    return out;
}

}  // namespace hcr
