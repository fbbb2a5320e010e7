#include "hcr/adaptive.hpp"

#include <algorithm>
#include <cmath>

#include "hcr/errors.hpp"

namespace hcr {

namespace {

std::vector<std::uint64_t> layout_indices(const std::vector<int>& degrees,
                                          const IndexFilter& filter) {
    // Reuse the estimator's ordering by estimating a single dummy window.
    WindowSet w;
    w.d = int(degrees.size());
    w.rows = 1;
    w.data.assign(degrees.size(), 0.5);
    OrthoBasis basis(*std::max_element(degrees.begin(), degrees.end()));
    return estimate_coefficients(w, basis, degrees, filter).indices();
}

}  // namespace

AdaptiveState::AdaptiveState(std::vector<int> degrees, double lambda, const IndexFilter& filter)
    : degrees_(std::move(degrees)), lambda_(lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw Error(errc::config, "adaptive learning rate must lie strictly inside (0,1)");
    if (degrees_.empty()) throw Error(errc::config, "adaptive state needs at least one coordinate");
    indices_ = layout_indices(degrees_, filter);
    coeffs_.assign(indices_.size(), 0.0);
}

void AdaptiveState::update(std::span<const double> window, const OrthoBasis& basis) {
    const int d = int(degrees_.size());
    if (int(window.size()) != d)
        throw Error(errc::shape_mismatch, "window dimension mismatch in adaptive update");
    const int mmax = *std::max_element(degrees_.begin(), degrees_.end());
    std::vector<double> basis_buf(std::size_t(d) * std::size_t(mmax + 1));
    std::vector<double> all(std::size_t(basis.max_degree()) + 1);
    for (int i = 0; i < d; ++i) {
        basis.evaluate_all(std::clamp(window[std::size_t(i)], kWindowClamp, 1.0 - kWindowClamp),
                           all);
        std::copy(all.begin(), all.begin() + degrees_[std::size_t(i)] + 1,
                  basis_buf.begin() + std::size_t(i) * std::size_t(mmax + 1));
    }
    const double keep = lambda_, add = 1.0 - lambda_;
    for (std::size_t e = 0; e < indices_.size(); ++e) {
        std::uint64_t rest = indices_[e];
        double prod = 1.0;
        for (int i = 0; i < d; ++i) {
            const std::uint64_t s = std::uint64_t(degrees_[std::size_t(i)]) + 1;
            const int j = int(rest % s);
            rest /= s;
            if (j > 0) prod *= basis_buf[std::size_t(i) * std::size_t(mmax + 1) + std::size_t(j)];
        }
        coeffs_[e] = keep * coeffs_[e] + add * prod;
    }
    ++step_;
}

std::uint64_t AdaptiveState::burn_in_steps() const noexcept {
    return std::uint64_t(std::ceil(1.0 / (1.0 - lambda_)));
}

bool AdaptiveState::in_burn_in() const noexcept { return step_ < burn_in_steps(); }

CoefficientTensor AdaptiveState::to_tensor() const {
    return CoefficientTensor(degrees_, std::size_t(std::max<std::uint64_t>(step_, 1)), indices_,
                             coeffs_);
}

AdaptiveRun run_adaptive(std::span<const double> x, int d, std::vector<int> degrees,
                         double lambda, const OrthoBasis& basis,
                         const AdaptiveRunOptions& opts) {
    if (x.size() <= std::size_t(d))
        throw Error(errc::insufficient_data, "adaptive run needs a series longer than d");
    if (degrees.size() == 1 && d > 1) degrees.assign(std::size_t(d), degrees[0]);

    WindowSet w = build_windows(x, d);
    AdaptiveState state(degrees, lambda, opts.filter);

    AdaptiveRun run;
    run.degrees = state.degrees();
    run.indices = state.indices();
    run.burn_in_steps = state.burn_in_steps();
    run.raw_at_actual.resize(w.rows);
    run.calibrated_at_actual.resize(w.rows);

    for (std::size_t t = 0; t < w.rows; ++t) {
        auto row = w.row(t);
        const double actual = row[0];
        const auto context = row.subspan(1);
        double raw = 1.0, cal = 1.0;
        if (state.step() > 0) {
            std::vector<double> b = detail::condition_numerator(
                state.degrees(), state.indices(), state.coefficients(), basis, context);
            if (b[0] > 0.0) {
                for (double& v : b) v /= b[0];
                b[0] = 1.0;
                PredictedDensity1D pred{std::move(b)};
                raw = pred.raw_at(basis, actual);
                cal = predicted_density_at(pred, basis, actual, opts.calibration);
            } else {
                ++run.degenerate_contexts;
            }
        } else {
            ++run.degenerate_contexts;
        }
        run.raw_at_actual[t] = raw;
        run.calibrated_at_actual[t] = cal;

        state.update(row, basis);
        if (opts.snapshot_stride > 0 &&
            (t % opts.snapshot_stride == 0 || t + 1 == w.rows)) {
            AdaptiveSnapshot snap;
            snap.t = t;
            snap.coefficients.assign(state.coefficients().begin(), state.coefficients().end());
            run.snapshots.push_back(std::move(snap));
        }
    }
    return run;
}

CoefficientTensor TrendTensor::coefficients_at(double tau, const OrthoBasis& basis) const {
    const auto& degrees = joint.degrees();
    const int time_degree = degrees[0];
    std::vector<double> ft(std::size_t(basis.max_degree()) + 1);
    basis.evaluate_all(std::clamp(tau, 0.0, 1.0), ft);
    if (tau < 0.0 || tau > 1.0) {
        // Extrapolation: evaluate the polynomials directly outside [0,1].
        for (int j = 0; j <= basis.max_degree(); ++j) {
            auto c = basis.monomial_coeffs(j);
            double acc = c[std::size_t(j)];
            for (int k = j - 1; k >= 0; --k) acc = acc * tau + c[std::size_t(k)];
            ft[std::size_t(j)] = acc;
        }
    }

    const std::uint64_t s_time = std::uint64_t(time_degree) + 1;
    std::vector<int> sub_degrees(degrees.begin() + 1, degrees.end());
    // Group entries by the remaining index once the (fastest) time digit is
    // stripped; entries are sorted, so each group is contiguous after /s.
    std::vector<std::uint64_t> out_idx;
    std::vector<double> out_val;
    for (std::size_t e = 0; e < joint.entry_count(); ++e) {
        const std::uint64_t idx = joint.indices()[e];
        const int jt = int(idx % s_time);
        const std::uint64_t rest = idx / s_time;
        const double contrib = joint.values()[e] * ft[std::size_t(jt)];
        if (!out_idx.empty() && out_idx.back() == rest)
            out_val.back() += contrib;
        else {
            out_idx.push_back(rest);
            out_val.push_back(contrib);
        }
    }
    return CoefficientTensor(std::move(sub_degrees), joint.sample_count(), std::move(out_idx),
                             std::move(out_val));
}

TrendTensor fit_time_trend(const WindowSet& w, int time_degree, std::vector<int> value_degrees,
                           const OrthoBasis& basis, const IndexFilter& filter, int threads) {
    if (time_degree < 0 || time_degree > basis.max_degree())
        throw Error(errc::unsupported_degree, "time degree exceeds basis degree");
    if (w.rows == 0) throw Error(errc::insufficient_data, "empty window set");
    if (value_degrees.size() == 1 && w.d > 1)
        value_degrees.assign(std::size_t(w.d), value_degrees[0]);
    if (int(value_degrees.size()) != w.d)
        throw Error(errc::shape_mismatch, "value degree list does not match window dimension");

    WindowSet aug;
    aug.d = w.d + 1;
    aug.rows = w.rows;
    aug.data.resize(aug.rows * std::size_t(aug.d));
    for (std::size_t t = 0; t < w.rows; ++t) {
        aug.data[t * std::size_t(aug.d)] = (double(t) + 0.5) / double(w.rows);
        std::copy(w.row(t).begin(), w.row(t).end(),
                  aug.data.begin() + t * std::size_t(aug.d) + 1);
    }
    std::vector<int> degrees(static_cast<std::size_t>(aug.d));
    degrees[0] = time_degree;
    std::copy(value_degrees.begin(), value_degrees.end(), degrees.begin() + 1);
    return TrendTensor{estimate_coefficients(aug, basis, degrees, filter, threads)};
}

TrendTensor fit_time_trend(const WindowSet& w, int time_degree, const OrthoBasis& basis,
                           const IndexFilter& filter, int threads) {
    return fit_time_trend(w, time_degree, std::vector<int>{basis.max_degree()}, basis, filter,
                          threads);
}

}  // namespace hcr
