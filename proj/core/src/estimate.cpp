#include "hcr/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include <nlohmann/json.hpp>

#include "hcr/errors.hpp"
#include "hcr/numerics.hpp"

namespace hcr {

namespace {

constexpr std::size_t kChunkRows = 8192;
constexpr std::uint64_t kDenseLimit = std::uint64_t(1) << 20;

std::vector<int> checked_degrees(const OrthoBasis& basis, std::vector<int> degrees, int d) {
    if (degrees.size() == 1 && d > 1) degrees.assign(std::size_t(d), degrees[0]);
    if (int(degrees.size()) != d)
        throw Error(errc::shape_mismatch, "per-coordinate degree list does not match dimension");
    for (int m : degrees)
        if (m < 0 || m > basis.max_degree())
            throw Error(errc::unsupported_degree,
                        "requested degree " + std::to_string(m) + " exceeds basis degree " +
                            std::to_string(basis.max_degree()));
    return degrees;
}

std::uint64_t checked_full_size(const std::vector<int>& degrees) {
    std::uint64_t full = 1;
    for (int m : degrees) {
        const std::uint64_t s = std::uint64_t(m) + 1;
        if (full > std::numeric_limits<std::uint64_t>::max() / s)
            throw Error(errc::config, "basis size overflows; restrict degrees or use a filter");
        full *= s;
    }
    return full;
}

// Enumerates admitted linear indices in ascending order without walking the
// full product space for the restricted filters.
std::vector<std::uint64_t> admitted_indices(const std::vector<int>& degrees,
                                            const IndexFilter& filter) {
    const int d = int(degrees.size());
    const std::uint64_t full = checked_full_size(degrees);
    std::vector<std::uint64_t> strides(d);
    std::uint64_t s = 1;
    for (int i = 0; i < d; ++i) {
        strides[i] = s;
        s *= std::uint64_t(degrees[i]) + 1;
    }

    std::vector<std::uint64_t> out;
    switch (filter.kind()) {
        case IndexFilter::Kind::all: {
            if (full > kDenseLimit)
                throw Error(errc::config,
                            "unfiltered basis of " + std::to_string(full) +
                                " entries exceeds the dense limit; use an index filter");
            out.resize(full);
            for (std::uint64_t i = 0; i < full; ++i) out[i] = i;
            return out;
        }
        case IndexFilter::Kind::pairwise: {
            out.push_back(0);
            for (int i = 0; i < d; ++i)
                for (int j = 1; j <= degrees[i]; ++j) out.push_back(strides[i] * std::uint64_t(j));
            for (int i = 0; i < d; ++i)
                for (int k = i + 1; k < d; ++k)
                    for (int ji = 1; ji <= degrees[i]; ++ji)
                        for (int jk = 1; jk <= degrees[k]; ++jk)
                            out.push_back(strides[i] * std::uint64_t(ji) +
                                          strides[k] * std::uint64_t(jk));
            std::sort(out.begin(), out.end());
            return out;
        }
        case IndexFilter::Kind::total_degree: {
            std::vector<int> multi(d, 0);
            const int budget = filter.max_total_degree();
            // depth-first over coordinates, pruning on remaining budget
            std::function<void(int, int, std::uint64_t)> rec = [&](int coord, int used,
                                                                   std::uint64_t base) {
                if (coord == d) {
                    out.push_back(base);
                    return;
                }
                const int cap = std::min(degrees[coord], budget - used);
                for (int j = 0; j <= cap; ++j)
                    rec(coord + 1, used + j, base + strides[coord] * std::uint64_t(j));
            };
            rec(0, 0, 0);
            std::sort(out.begin(), out.end());
            return out;
        }
    }
    return out;
}

}  // namespace

bool IndexFilter::admits(std::span<const int> multi) const {
    switch (kind_) {
        case Kind::all: return true;
        case Kind::pairwise: {
            int nz = 0;
            for (int j : multi)
                if (j > 0) ++nz;
            return nz <= 2;
        }
        case Kind::total_degree: {
            int total = 0;
            for (int j : multi) total += j;
            return total <= max_total_;
        }
    }
    return false;
}

WindowSet build_windows(std::span<const double> x, int d) {
    if (d < 1) throw Error(errc::config, "window dimension must be at least 1");
    if (x.size() < std::size_t(d))
        throw Error(errc::insufficient_data,
                    "series of length " + std::to_string(x.size()) +
                        " is shorter than window dimension " + std::to_string(d));
    WindowSet w;
    w.d = d;
    w.rows = x.size() - std::size_t(d) + 1;
    w.data.resize(w.rows * std::size_t(d));
    for (std::size_t t = 0; t < w.rows; ++t)
        for (int i = 0; i < d; ++i) {
            double v = x[t + std::size_t(d) - 1 - std::size_t(i)];
            w.data[t * std::size_t(d) + std::size_t(i)] =
                std::clamp(v, kWindowClamp, 1.0 - kWindowClamp);
        }
    return w;
}

WindowSet build_windows(const NormalizedSeries& x, int d) {
    return build_windows(std::span(x.x), d);
}

NoiseLevel noise_sigma(std::size_t n) {
    if (n < 1) throw Error(errc::insufficient_data, "noise level needs n >= 1");
    return NoiseLevel{1.0 / std::sqrt(double(n))};
}

CoefficientTensor::CoefficientTensor(std::vector<int> degrees, std::size_t sample_count,
                                     std::vector<std::uint64_t> indices,
                                     std::vector<double> values)
    : degrees_(std::move(degrees)),
      sample_count_(sample_count),
      indices_(std::move(indices)),
      values_(std::move(values)) {
    if (indices_.size() != values_.size())
        throw Error(errc::shape_mismatch, "tensor index/value arrays differ in length");
    if (!std::is_sorted(indices_.begin(), indices_.end()) ||
        std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
        throw Error(errc::contract, "tensor entries must be sorted by unique linear index");
    const std::uint64_t full = checked_full_size(degrees_);
    if (!indices_.empty() && indices_.back() >= full)
        throw Error(errc::shape_mismatch, "tensor entry index out of range");
}

std::uint64_t CoefficientTensor::full_size() const noexcept {
    std::uint64_t full = 1;
    for (int m : degrees_) full *= std::uint64_t(m) + 1;
    return full;
}

std::uint64_t CoefficientTensor::encode(std::span<const int> multi) const {
    if (multi.size() != degrees_.size())
        throw Error(errc::shape_mismatch, "multi-index dimension mismatch");
    std::uint64_t idx = 0, stride = 1;
    for (std::size_t i = 0; i < degrees_.size(); ++i) {
        if (multi[i] < 0 || multi[i] > degrees_[i])
            throw Error(errc::domain, "multi-index component out of range");
        idx += stride * std::uint64_t(multi[i]);
        stride *= std::uint64_t(degrees_[i]) + 1;
    }
    return idx;
}

void CoefficientTensor::decode(std::uint64_t linear, std::span<int> multi) const {
    if (multi.size() != degrees_.size())
        throw Error(errc::shape_mismatch, "multi-index dimension mismatch");
    for (std::size_t i = 0; i < degrees_.size(); ++i) {
        const std::uint64_t s = std::uint64_t(degrees_[i]) + 1;
        multi[i] = int(linear % s);
        linear /= s;
    }
}

double CoefficientTensor::value_at(std::span<const int> multi) const {
    return value_at_linear(encode(multi));
}

double CoefficientTensor::value_at_linear(std::uint64_t linear) const {
    auto it = std::lower_bound(indices_.begin(), indices_.end(), linear);
    if (it == indices_.end() || *it != linear) return 0.0;
    return values_[std::size_t(it - indices_.begin())];
}

nlohmann::json CoefficientTensor::to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    std::vector<int> multi(degrees_.size());
    for (std::size_t e = 0; e < indices_.size(); ++e) {
        decode(indices_[e], multi);
        entries.push_back(nlohmann::json::array({multi, values_[e]}));
    }
    return nlohmann::json{
        {"d", dim()}, {"degrees", degrees_}, {"n", sample_count_}, {"entries", entries}};
}

CoefficientTensor CoefficientTensor::from_json(const nlohmann::json& j) {
    try {
        std::vector<int> degrees = j.at("degrees").get<std::vector<int>>();
        if (int(degrees.size()) != j.at("d").get<int>())
            throw Error(errc::io, "tensor JSON: d does not match degrees length");
        const std::size_t n = j.at("n").get<std::size_t>();
        CoefficientTensor probe(degrees, n, {}, {});
        std::vector<std::pair<std::uint64_t, double>> entries;
        for (const auto& e : j.at("entries")) {
            std::vector<int> multi = e.at(0).get<std::vector<int>>();
            entries.emplace_back(probe.encode(multi), e.at(1).get<double>());
        }
        std::sort(entries.begin(), entries.end());
        std::vector<std::uint64_t> idx(entries.size());
        std::vector<double> val(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            idx[i] = entries[i].first;
            val[i] = entries[i].second;
        }
        return CoefficientTensor(std::move(degrees), n, std::move(idx), std::move(val));
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::io, std::string("malformed tensor JSON: ") + e.what());
    }
}

namespace {

struct EntryPlan {
    // nonzero (coordinate, degree) pairs of one admitted multi-index
    std::vector<std::pair<int, int>> factors;
};

// Sum of per-row product-basis values over rows [begin, end) for every
// admitted entry. `basis_buf` holds per-coordinate basis values of one row.
void accumulate_sparse(const WindowSet& w, const OrthoBasis& basis,
                       const std::vector<int>& degrees, const std::vector<EntryPlan>& plans,
                       std::size_t begin, std::size_t end, std::vector<double>& out) {
    const int d = w.d;
    const int mmax = *std::max_element(degrees.begin(), degrees.end());
    std::vector<double> basis_buf(std::size_t(d) * std::size_t(mmax + 1));
    std::vector<double> all(std::size_t(basis.max_degree()) + 1);
    for (std::size_t t = begin; t < end; ++t) {
        auto row = w.row(t);
        for (int i = 0; i < d; ++i) {
            basis.evaluate_all(row[std::size_t(i)], all);
            std::copy(all.begin(), all.begin() + degrees[std::size_t(i)] + 1,
                      basis_buf.begin() + std::size_t(i) * std::size_t(mmax + 1));
        }
        for (std::size_t e = 0; e < plans.size(); ++e) {
            double prod = 1.0;
            for (auto [coord, deg] : plans[e].factors)
                prod *= basis_buf[std::size_t(coord) * std::size_t(mmax + 1) + std::size_t(deg)];
            out[e] += prod;
        }
    }
}

// Dense path: builds each row's full product tensor by repeated outer
// products, last coordinate first, so coordinate 0 ends up varying fastest.
void accumulate_dense(const WindowSet& w, const OrthoBasis& basis,
                      const std::vector<int>& degrees, std::size_t begin, std::size_t end,
                      std::vector<double>& out) {
    const int d = w.d;
    std::vector<double> all(std::size_t(basis.max_degree()) + 1);
    std::vector<double> cur, next;
    cur.reserve(out.size());
    next.reserve(out.size());
    for (std::size_t t = begin; t < end; ++t) {
        auto row = w.row(t);
        cur.assign(1, 1.0);
        for (int i = d - 1; i >= 0; --i) {
            basis.evaluate_all(row[std::size_t(i)], all);
            const int s = degrees[std::size_t(i)] + 1;
            next.assign(cur.size() * std::size_t(s), 0.0);
            for (std::size_t r = 0; r < cur.size(); ++r) {
                const double c = cur[r];
                double* dst = next.data() + r * std::size_t(s);
                for (int j = 0; j < s; ++j) dst[std::size_t(j)] = all[std::size_t(j)] * c;
            }
            cur.swap(next);
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += cur[i];
    }
}

}  // namespace

CoefficientTensor estimate_coefficients(const WindowSet& w, const OrthoBasis& basis,
                                        std::vector<int> degrees, const IndexFilter& filter,
                                        int threads) {
    if (w.rows == 0) throw Error(errc::insufficient_data, "empty window set");
    degrees = checked_degrees(basis, std::move(degrees), w.d);
    if (threads < 1) threads = 1;

    const bool dense = filter.kind() == IndexFilter::Kind::all;
    std::vector<std::uint64_t> indices = admitted_indices(degrees, filter);

    std::vector<EntryPlan> plans;
    if (!dense) {
        plans.resize(indices.size());
        std::vector<int> multi(static_cast<std::size_t>(w.d));
        CoefficientTensor probe(degrees, 1, {}, {});
        for (std::size_t e = 0; e < indices.size(); ++e) {
            probe.decode(indices[e], multi);
            for (int i = 0; i < w.d; ++i)
                if (multi[std::size_t(i)] > 0)
                    plans[e].factors.emplace_back(i, multi[std::size_t(i)]);
        }
    }

    const std::size_t width = indices.size();
    const std::size_t nchunks = (w.rows + kChunkRows - 1) / kChunkRows;
    num::PairwiseAccumulator acc(width);

    auto run_chunk = [&](std::size_t c) {
        std::vector<double> part(width, 0.0);
        const std::size_t begin = c * kChunkRows;
        const std::size_t end = std::min(w.rows, begin + kChunkRows);
        if (dense)
            accumulate_dense(w, basis, degrees, begin, end, part);
        else
            accumulate_sparse(w, basis, degrees, plans, begin, end, part);
        return part;
    };

    if (threads == 1 || nchunks == 1) {
        for (std::size_t c = 0; c < nchunks; ++c) acc.push(run_chunk(c));
    } else {
        // Waves of `threads` chunks; results are pushed in chunk order so the
        // reduction tree does not depend on the thread count.
        for (std::size_t wave = 0; wave < nchunks; wave += std::size_t(threads)) {
            const std::size_t count = std::min(std::size_t(threads), nchunks - wave);
            std::vector<std::future<std::vector<double>>> futs;
            futs.reserve(count);
            for (std::size_t k = 0; k < count; ++k)
                futs.push_back(std::async(std::launch::async, run_chunk, wave + k));
            for (auto& f : futs) acc.push(f.get());
        }
    }

    std::vector<double> values = acc.finish();
    const double inv_n = 1.0 / double(w.rows);
    for (double& v : values) v *= inv_n;
    return CoefficientTensor(std::move(degrees), w.rows, std::move(indices), std::move(values));
}

PruneResult prune(const CoefficientTensor& t, double threshold) {
    return prune(t, threshold, noise_sigma(std::max<std::size_t>(t.sample_count(), 1)));
}

PruneResult prune(const CoefficientTensor& t, double threshold, NoiseLevel noise) {
    if (threshold < 0.0) throw Error(errc::config, "prune threshold must be nonnegative");
    const double cut = threshold * noise.sigma;
    std::vector<std::uint64_t> idx;
    std::vector<double> val;
    idx.reserve(t.entry_count());
    val.reserve(t.entry_count());
    std::size_t dropped = 0;
    for (std::size_t e = 0; e < t.entry_count(); ++e) {
        const std::uint64_t i = t.indices()[e];
        const double a = t.values()[e];
        if (i == 0 || std::abs(a) >= cut) {
            idx.push_back(i);
            val.push_back(a);
        } else {
            ++dropped;
        }
    }
    return PruneResult{CoefficientTensor(t.degrees(), t.sample_count(), std::move(idx),
                                         std::move(val)),
                       dropped};
}

double eval_joint_density(const CoefficientTensor& t, const OrthoBasis& basis,
                          std::span<const double> point) {
    if (int(point.size()) != t.dim())
        throw Error(errc::shape_mismatch, "evaluation point dimension mismatch");
    const int d = t.dim();
    const int mmax = *std::max_element(t.degrees().begin(), t.degrees().end());
    std::vector<double> basis_buf(std::size_t(d) * std::size_t(mmax + 1));
    std::vector<double> all(std::size_t(basis.max_degree()) + 1);
    for (int i = 0; i < d; ++i) {
        basis.evaluate_all(point[std::size_t(i)], all);
        std::copy(all.begin(), all.begin() + t.degrees()[std::size_t(i)] + 1,
                  basis_buf.begin() + std::size_t(i) * std::size_t(mmax + 1));
    }
    double sum = 0.0;
    for (std::size_t e = 0; e < t.entry_count(); ++e) {
        std::uint64_t rest = t.indices()[e];
        double prod = 1.0;
        for (int i = 0; i < d; ++i) {
            const std::uint64_t s = std::uint64_t(t.degrees()[std::size_t(i)]) + 1;
            const int j = int(rest % s);
            rest /= s;
            if (j > 0) prod *= basis_buf[std::size_t(i) * std::size_t(mmax + 1) + std::size_t(j)];
        }
        sum += t.values()[e] * prod;
    }
    return sum;
}

}  // namespace hcr
