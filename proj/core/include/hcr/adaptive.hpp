#pragma once

// Non-stationary estimation: coefficients as exponentially decaying averages
// a <- lambda * a + (1 - lambda) * f(x), updated online, and an a-posteriori
// alternative that adds normalized time as an extra coordinate so every
// coefficient becomes a polynomial in t/n.

#include <cstdint>
#include <span>
#include <vector>

#include "hcr/estimate.hpp"
#include "hcr/polybasis.hpp"
#include "hcr/predict.hpp"

namespace hcr {

class AdaptiveState {
public:
    // Coefficients start at zero; the same multi-index layout as
    // CoefficientTensor, restricted by the filter.
    AdaptiveState(std::vector<int> degrees, double lambda,
                  const IndexFilter& filter = IndexFilter::all());

    double lambda() const noexcept { return lambda_; }
    std::uint64_t step() const noexcept { return step_; }
    const std::vector<int>& degrees() const noexcept { return degrees_; }
    const std::vector<std::uint64_t>& indices() const noexcept { return indices_; }
    std::span<const double> coefficients() const noexcept { return coeffs_; }

    // One recursion step with the window (current value, context...).
    void update(std::span<const double> window, const OrthoBasis& basis);

    // True until 1/(1-lambda) updates have accumulated (the weight mass of
    // the decayed average is still below 1 - 1/e there).
    bool in_burn_in() const noexcept;
    std::uint64_t burn_in_steps() const noexcept;

    // Snapshot as a coefficient tensor; sample_count is the step count.
    CoefficientTensor to_tensor() const;

private:
    std::vector<int> degrees_;
    double lambda_;
    std::uint64_t step_ = 0;
    std::vector<std::uint64_t> indices_;
    std::vector<double> coeffs_;
};

struct AdaptiveRunOptions {
    std::size_t snapshot_stride = 100;
    Calibration calibration = Calibration::piecewise_linear(0.15, 0.15, 1.7);
    IndexFilter filter = IndexFilter::all();
};

struct AdaptiveSnapshot {
    std::size_t t = 0;                // window index the snapshot was taken after
    std::vector<double> coefficients; // aligned with AdaptiveRun::indices
};

struct AdaptiveRun {
    std::vector<int> degrees;
    std::vector<std::uint64_t> indices;
    std::vector<AdaptiveSnapshot> snapshots;
    // Strictly causal one-step-ahead densities of each window's current
    // value, raw and calibrated; degenerate contexts fall back to 1.
    std::vector<double> raw_at_actual;
    std::vector<double> calibrated_at_actual;
    std::uint64_t burn_in_steps = 0;
    std::size_t degenerate_contexts = 0;
};

// Streams the windows of x through an AdaptiveState: at each step the
// density of the current value is predicted from coefficients that have only
// seen strictly earlier windows, then the state is updated.
AdaptiveRun run_adaptive(std::span<const double> x, int d, std::vector<int> degrees,
                         double lambda, const OrthoBasis& basis,
                         const AdaptiveRunOptions& opts = {});

// Joint tensor over (time, value, context...) with time on the regular
// midpoint grid (t + 1/2)/n; slicing at a fixed time interpolates every
// coefficient as a degree-`time_degree` polynomial in t/n.
struct TrendTensor {
    CoefficientTensor joint;  // coordinate 0 is normalized time

    // Coefficients of the value/context tensor interpolated at tau. tau
    // outside [0,1] extrapolates; boundary behavior of polynomials makes
    // that unreliable, so callers should warn.
    CoefficientTensor coefficients_at(double tau, const OrthoBasis& basis) const;
};

TrendTensor fit_time_trend(const WindowSet& w, int time_degree, std::vector<int> value_degrees,
                           const OrthoBasis& basis, const IndexFilter& filter = IndexFilter::all(),
                           int threads = 1);

// Value/context coordinates all at the basis maximum degree.
TrendTensor fit_time_trend(const WindowSet& w, int time_degree, const OrthoBasis& basis,
                           const IndexFilter& filter = IndexFilter::all(), int threads = 1);

}  // namespace hcr
