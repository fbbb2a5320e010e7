#include "hcr/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "hcr/errors.hpp"
#include "hcr/numerics.hpp"

namespace hcr {

namespace {

constexpr double kCdfClamp = 1e-15;  // keeps normalized values strictly inside (0,1)

void require_scale(double scale) {
    if (!(scale > 0.0))
        throw Error(errc::degenerate_scale, "all sample values identical; no usable scale");
}

double epd_log_norm(double sigma, double kappa) {
    // log of Z = 2 sigma kappa^{1/kappa} Gamma(1 + 1/kappa)
    return std::numbers::ln2 + std::log(sigma) + std::log(kappa) / kappa +
           std::lgamma(1.0 + 1.0 / kappa);
}

}  // namespace

std::string family_name(MarginalFamily f) {
    switch (f) {
        case MarginalFamily::gaussian: return "gaussian";
        case MarginalFamily::laplace: return "laplace";
        case MarginalFamily::epd: return "epd";
    }
    return "unknown";
}

MarginalFamily family_from_name(const std::string& name) {
    if (name == "gaussian" || name == "normal") return MarginalFamily::gaussian;
    if (name == "laplace") return MarginalFamily::laplace;
    if (name == "epd") return MarginalFamily::epd;
    throw Error(errc::config, "unknown marginal family '" + name + "'");
}

double MarginalModel::pdf(double y) const {
    const double z = y - location;
    switch (family) {
        case MarginalFamily::gaussian:
            return std::exp(-0.5 * z * z / (scale * scale)) /
                   (scale * std::sqrt(2.0 * std::numbers::pi));
        case MarginalFamily::laplace:
            return std::exp(-std::abs(z) / scale) / (2.0 * scale);
        case MarginalFamily::epd:
            return std::exp(log_pdf(y));
    }
    return 0.0;
}

double MarginalModel::log_pdf(double y) const {
    const double z = y - location;
    switch (family) {
        case MarginalFamily::gaussian:
            return -0.5 * z * z / (scale * scale) - std::log(scale) -
                   0.5 * std::log(2.0 * std::numbers::pi);
        case MarginalFamily::laplace:
            return -std::abs(z) / scale - std::log(2.0 * scale);
        case MarginalFamily::epd:
            return -std::pow(std::abs(z) / scale, shape) / shape - epd_log_norm(scale, shape);
    }
    return -std::numeric_limits<double>::infinity();
}

double MarginalModel::cdf(double y) const {
    const double z = y - location;
    switch (family) {
        case MarginalFamily::gaussian:
            return 0.5 * std::erfc(-z / (scale * std::numbers::sqrt2));
        case MarginalFamily::laplace:
            return z < 0.0 ? 0.5 * std::exp(z / scale) : 1.0 - 0.5 * std::exp(-z / scale);
        case MarginalFamily::epd: {
            const double t = std::pow(std::abs(z) / scale, shape) / shape;
            const double half = 0.5 * boost::math::gamma_p(1.0 / shape, t);
            return z < 0.0 ? 0.5 - half : 0.5 + half;
        }
    }
    return 0.0;
}

double MarginalModel::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0))
        throw Error(errc::domain, "quantile probability must lie strictly inside (0,1)");
    switch (family) {
        case MarginalFamily::gaussian:
            // complementary form keeps both tails finite in double precision
            return p < 0.5
                       ? location - scale * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p)
                       : location +
                             scale * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
        case MarginalFamily::laplace:
            return p < 0.5 ? location + scale * std::log(2.0 * p)
                           : location - scale * std::log(2.0 * (1.0 - p));
        case MarginalFamily::epd: {
            // Monotone bisection with Newton refinement on the CDF.
            const double step = scale * std::pow(shape, 1.0 / shape);
            double lo = location, hi = location;
            double width = step;
            if (p >= 0.5) {
                while (cdf(hi) < p && width < 1e12 * step) {
                    hi = location + width;
                    width *= 2.0;
                }
                lo = location;
            } else {
                while (cdf(lo) > p && width < 1e12 * step) {
                    lo = location - width;
                    width *= 2.0;
                }
                hi = location;
            }
            double x = 0.5 * (lo + hi);
            for (int it = 0; it < 200; ++it) {
                const double c = cdf(x);
                if (c > p)
                    hi = x;
                else
                    lo = x;
                const double d = pdf(x);
                double next = d > 0.0 ? x - (c - p) / d : 0.5 * (lo + hi);
                if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
                if (std::abs(next - x) <= 1e-15 * (std::abs(x) + 1e-300)) {
                    x = next;
                    break;
                }
                x = next;
            }
            return x;
        }
    }
    return location;
}

nlohmann::json MarginalModel::to_json() const {
    nlohmann::json j{{"family", family_name(family)}, {"mu", location}, {"scale", scale}};
    if (family == MarginalFamily::epd) j["kappa"] = shape;
    return j;
}

MarginalModel MarginalModel::from_json(const nlohmann::json& j) {
    MarginalModel m;
    try {
        m.family = family_from_name(j.at("family").get<std::string>());
        m.location = j.at("mu").get<double>();
        m.scale = j.at("scale").get<double>();
        if (m.family == MarginalFamily::epd) m.shape = j.at("kappa").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::io, std::string("malformed marginal model JSON: ") + e.what());
    }
    if (!(m.scale > 0.0)) throw Error(errc::io, "marginal model scale must be positive");
    if (m.family == MarginalFamily::epd && !(m.shape > 0.0))
        throw Error(errc::io, "EPD kappa must be positive");
    return m;
}

std::vector<double> log_returns(std::span<const double> values) {
    if (values.size() < 2)
        throw Error(errc::insufficient_data, "log returns need at least 2 values");
    std::vector<double> y(values.size() - 1);
    for (std::size_t t = 0; t + 1 < values.size(); ++t) {
        if (!(values[t] > 0.0) || !(values[t + 1] > 0.0))
            throw Error(errc::domain, "log returns require strictly positive values (index " +
                                          std::to_string(values[t] > 0.0 ? t + 1 : t) + ")");
        y[t] = std::log(values[t + 1]) - std::log(values[t]);
    }
    return y;
}

std::vector<double> log_returns(const SeriesFrame& s) { return log_returns(std::span(s.values)); }

MarginalModel fit_gaussian(std::span<const double> y) {
    if (y.size() < 2) throw Error(errc::insufficient_data, "gaussian fit needs at least 2 values");
    const double mu = num::mean(y);
    const double sigma = std::sqrt(num::variance(y));
    require_scale(sigma);
    return MarginalModel{MarginalFamily::gaussian, mu, sigma, 2.0};
}

MarginalModel fit_laplace(std::span<const double> y) {
    if (y.size() < 2) throw Error(errc::insufficient_data, "laplace fit needs at least 2 values");
    const double mu = num::median(std::vector<double>(y.begin(), y.end()));
    double b = 0.0;
    for (double v : y) b += std::abs(v - mu);
    b /= double(y.size());
    require_scale(b);
    return MarginalModel{MarginalFamily::laplace, mu, b, 1.0};
}

namespace {

// Location minimizing sum |y - mu|^kappa. Closed form for kappa = 1, 2;
// otherwise a safeguarded Newton/bisection root find of the (monotone for
// kappa > 1) derivative. For kappa < 1 the objective is multimodal and the
// median is used.
double epd_location(std::span<const double> y, double kappa, double med, double mn) {
    if (std::abs(kappa - 2.0) < 1e-9) return mn;
    if (kappa <= 1.0 + 1e-9) return med;
    auto dpsi = [&](double mu) {
        double s = 0.0;
        for (double v : y) {
            const double z = v - mu;
            if (z == 0.0) continue;
            s += (z > 0.0 ? 1.0 : -1.0) * std::pow(std::abs(z), kappa - 1.0);
        }
        return s;  // decreasing in mu
    };
    double lo = *std::min_element(y.begin(), y.end());
    double hi = *std::max_element(y.begin(), y.end());
    double flo = dpsi(lo), fhi = dpsi(hi);
    if (flo <= 0.0) return lo;
    if (fhi >= 0.0) return hi;
    double mu = med;
    for (int it = 0; it < 80; ++it) {
        const double f = dpsi(mu);
        if (f > 0.0)
            lo = mu;
        else
            hi = mu;
        double deriv = 0.0;
        for (double v : y) {
            const double z = std::abs(v - mu);
            if (z > 0.0) deriv += (kappa - 1.0) * std::pow(z, kappa - 2.0);
        }
        double next = deriv > 0.0 ? mu + f / deriv : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - mu) <= 1e-13 * (std::abs(mu) + 1e-300)) return next;
        mu = next;
    }
    return mu;
}

}  // namespace

MarginalModel fit_epd(std::span<const double> y, const EpdFitOptions& opts) {
    if (y.size() < 8) throw Error(errc::insufficient_data, "EPD fit needs at least 8 values");
    const double n = double(y.size());
    const double med = num::median(std::vector<double>(y.begin(), y.end()));
    const double mn = num::mean(y);

    struct Eval {
        double mu, sigma, ll;
    };
    auto profile = [&](double kappa) -> Eval {
        const double mu = epd_location(y, kappa, med, mn);
        double sk = 0.0;
        for (double v : y) sk += std::pow(std::abs(v - mu), kappa);
        sk /= n;
        const double sigma = std::pow(sk, 1.0 / kappa);
        if (!(sigma > 0.0)) return {mu, sigma, -std::numeric_limits<double>::infinity()};
        const double ll = -n * (epd_log_norm(sigma, kappa) + 1.0 / kappa);
        return {mu, sigma, ll};
    };

    // Coarse scan guards against a misleading golden-section bracket.
    const int grid = 16;
    double best_kappa = 1.0, best_ll = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        const double k = opts.kappa_min + (opts.kappa_max - opts.kappa_min) * i / double(grid);
        const Eval e = profile(k);
        if (e.ll > best_ll) {
            best_ll = e.ll;
            best_kappa = k;
        }
    }
    const double span = (opts.kappa_max - opts.kappa_min) / double(grid);
    const double lo = std::max(opts.kappa_min, best_kappa - span);
    const double hi = std::min(opts.kappa_max, best_kappa + span);
    auto res = num::golden_section_minimize([&](double k) { return -profile(k).ll; }, lo, hi,
                                            opts.kappa_tol, opts.max_iter);
    double kappa = res.x;
    Eval e = profile(kappa);
    if (e.ll < best_ll) {  // keep the scan winner if refinement regressed
        kappa = best_kappa;
        e = profile(kappa);
    }
    if (!(e.sigma > 0.0))
        throw Error(errc::degenerate_scale, "all sample values identical; no usable scale");
    if (!res.converged)
        throw FitFailureError("EPD profile search exceeded max iterations",
                              {e.mu, e.sigma, kappa});
    return MarginalModel{MarginalFamily::epd, e.mu, e.sigma, kappa};
}

NormalizedSeries normalize(std::span<const double> y, const MarginalModel& model) {
    NormalizedSeries out;
    out.model = model;
    out.x.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out.x[i] = std::clamp(model.cdf(y[i]), kCdfClamp, 1.0 - kCdfClamp);
    return out;
}

double density_pullback(const std::function<double(double)>& rho_x,
                        const MarginalModel& model, double y) {
    const double u = std::clamp(model.cdf(y), kCdfClamp, 1.0 - kCdfClamp);
    return rho_x(u) * model.pdf(y);
}

}  // namespace hcr
