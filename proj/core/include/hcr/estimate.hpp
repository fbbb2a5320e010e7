#pragma once

// Joint-density estimation for (value, context) windows: the coefficient of
// every admitted product-basis function is the sample average of that
// function over the windows. Estimated tensors can be pruned against the
// 1/sqrt(n) noise level and evaluated anywhere in the unit cube.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hcr/marginals.hpp"
#include "hcr/polybasis.hpp"

namespace hcr {

// Windows are stored row-major; row t is (x^t, x^{t-1}, ..., x^{t-d+1}):
// coordinate 0 is the current value, the rest are the context in reverse
// chronological order.
struct WindowSet {
    int d = 1;
    std::size_t rows = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t t) const {
        return {data.data() + t * std::size_t(d), std::size_t(d)};
    }
};

// Values exactly 0 or 1 (possible from file input, impossible from a CDF)
// are clamped this far inside the unit interval.
inline constexpr double kWindowClamp = 1e-12;

WindowSet build_windows(std::span<const double> x, int d);
WindowSet build_windows(const NormalizedSeries& x, int d);

struct NoiseLevel {
    double sigma = 1.0;  // 1/sqrt(n)
};

NoiseLevel noise_sigma(std::size_t n);

// Restricts which multi-indices are estimated: everything, indices with at
// most two nonzero coordinates, or indices with bounded total degree.
class IndexFilter {
public:
    enum class Kind { all, pairwise, total_degree };

    static IndexFilter all() { return IndexFilter(Kind::all, 0); }
    static IndexFilter pairwise() { return IndexFilter(Kind::pairwise, 0); }
    static IndexFilter total_degree(int max_total) { return IndexFilter(Kind::total_degree, max_total); }

    Kind kind() const noexcept { return kind_; }
    int max_total_degree() const noexcept { return max_total_; }
    bool admits(std::span<const int> multi) const;

private:
    IndexFilter(Kind k, int t) : kind_(k), max_total_(t) {}
    Kind kind_;
    int max_total_;
};

// Sparse-capable coefficient container. Entries are kept sorted by the
// canonical linear index: little-endian mixed radix over the per-coordinate
// basis sizes, coordinate 0 varying fastest.
class CoefficientTensor {
public:
    CoefficientTensor() = default;
    CoefficientTensor(std::vector<int> degrees, std::size_t sample_count,
                      std::vector<std::uint64_t> indices, std::vector<double> values);

    int dim() const noexcept { return int(degrees_.size()); }
    const std::vector<int>& degrees() const noexcept { return degrees_; }
    std::size_t sample_count() const noexcept { return sample_count_; }
    std::uint64_t full_size() const noexcept;

    std::size_t entry_count() const noexcept { return indices_.size(); }
    const std::vector<std::uint64_t>& indices() const noexcept { return indices_; }
    const std::vector<double>& values() const noexcept { return values_; }

    std::uint64_t encode(std::span<const int> multi) const;
    void decode(std::uint64_t linear, std::span<int> multi) const;

    // Coefficient for a multi-index, 0 when the entry is absent.
    double value_at(std::span<const int> multi) const;
    double value_at_linear(std::uint64_t linear) const;

    nlohmann::json to_json() const;
    static CoefficientTensor from_json(const nlohmann::json& j);

private:
    std::vector<int> degrees_;
    std::size_t sample_count_ = 0;
    std::vector<std::uint64_t> indices_;  // ascending
    std::vector<double> values_;
};

// a_j = (1/n) sum_t prod_i f_{j_i}(x_i^t) for every admitted multi-index j.
// Per-coordinate basis values are computed once per row. The row reduction
// uses fixed-size chunks merged pairwise in chunk order, so results are
// identical for any thread count.
CoefficientTensor estimate_coefficients(const WindowSet& w, const OrthoBasis& basis,
                                        std::vector<int> degrees,
                                        const IndexFilter& filter = IndexFilter::all(),
                                        int threads = 1);

struct PruneResult {
    CoefficientTensor tensor;
    std::size_t dropped = 0;
};

// Drops entries with |a_j| < threshold * sigma; the all-zeros index always
// survives. sigma defaults to 1/sqrt(sample_count) of the tensor.
PruneResult prune(const CoefficientTensor& t, double threshold);
PruneResult prune(const CoefficientTensor& t, double threshold, NoiseLevel noise);

// rho(x) = sum_j a_j prod_i f_{j_i}(x_i); may be negative.
double eval_joint_density(const CoefficientTensor& t, const OrthoBasis& basis,
                          std::span<const double> point);

}  // namespace hcr
