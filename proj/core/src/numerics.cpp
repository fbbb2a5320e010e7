#include "hcr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "hcr/errors.hpp"

namespace hcr::num {

ScalarMinResult golden_section_minimize(const std::function<double(double)>& f,
                                        double lo, double hi, double tol,
                                        int max_iter) {
    if (!(lo < hi)) throw Error(errc::contract, "golden_section_minimize: empty interval");
    constexpr double invphi = 0.6180339887498949;  // 1/phi
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    int evals = 2;
    ScalarMinResult r;
    for (int it = 0; it < max_iter; ++it) {
        if (b - a <= tol) {
            r.converged = true;
            break;
        }
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
        ++evals;
    }
    if (f1 <= f2) {
        r.x = x1;
        r.fx = f1;
    } else {
        r.x = x2;
        r.fx = f2;
    }
    r.evaluations = evals;
    r.converged = r.converged || (b - a <= tol);
    return r;
}

namespace {

std::vector<double> clamp_box(std::vector<double> x, const std::vector<double>& lo,
                              const std::vector<double>& hi) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
}

}  // namespace

NelderMeadResult nelder_mead_minimize(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> start, const std::vector<double>& step,
    const std::vector<double>& lower, const std::vector<double>& upper,
    const NelderMeadOptions& opts) {
    const std::size_t n = start.size();
    if (step.size() != n || lower.size() != n || upper.size() != n)
        throw Error(errc::contract, "nelder_mead_minimize: inconsistent dimensions");

    std::vector<std::vector<double>> simplex;
    simplex.push_back(clamp_box(start, lower, upper));
    for (std::size_t i = 0; i < n; ++i) {
        auto v = simplex[0];
        v[i] += step[i];
        simplex.push_back(clamp_box(std::move(v), lower, upper));
    }
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

    NelderMeadResult result;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        // order ascending by function value
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (auto i : idx) {
            s2.push_back(simplex[i]);
            f2.push_back(fv[i]);
        }
        simplex.swap(s2);
        fv.swap(f2);

        if (std::abs(fv[n] - fv[0]) <= opts.f_tol * (std::abs(fv[0]) + opts.f_tol)) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / double(n);

        auto affine = [&](double coef) {
            std::vector<double> v(n);
            for (std::size_t k = 0; k < n; ++k)
                v[k] = centroid[k] + coef * (simplex[n][k] - centroid[k]);
            return clamp_box(std::move(v), lower, upper);
        };

        auto reflect = affine(-1.0);
        double fr = f(reflect);
        if (fr < fv[0]) {
            auto expand = affine(-2.0);
            double fe = f(expand);
            if (fe < fr) {
                simplex[n] = expand;
                fv[n] = fe;
            } else {
                simplex[n] = reflect;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            simplex[n] = reflect;
            fv[n] = fr;
        } else {
            auto contract = affine(0.5);
            double fc = f(contract);
            if (fc < fv[n]) {
                simplex[n] = contract;
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t k = 0; k < n; ++k)
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    simplex[i] = clamp_box(std::move(simplex[i]), lower, upper);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    result.x = simplex[best];
    result.fx = fv[best];
    result.iterations = it;
    return result;
}

namespace {

Quadrature compute_gauss_legendre(int order) {
    // Newton refinement of Legendre roots on [-1,1], mapped to [0,1].
    Quadrature q;
    q.nodes.resize(order);
    q.weights.resize(order);
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - z * z) * pp * pp);
        q.nodes[i] = 0.5 * (1.0 - z);
        q.nodes[order - 1 - i] = 0.5 * (1.0 + z);
        q.weights[i] = 0.5 * w;
        q.weights[order - 1 - i] = 0.5 * w;
    }
    return q;
}

}  // namespace

const Quadrature& gauss_legendre_unit(int order) {
    if (order < 1) throw Error(errc::contract, "gauss_legendre_unit: order must be positive");
    static std::mutex mu;
    static std::map<int, Quadrature> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_gauss_legendre(order)).first;
    return it->second;
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth) {
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

std::vector<double> isotonic_fit(std::span<const double> y, std::span<const double> w) {
    if (y.size() != w.size()) throw Error(errc::contract, "isotonic_fit: size mismatch");
    const std::size_t n = y.size();
    std::vector<double> level(n), weight(n);
    std::vector<std::size_t> count(n);
    std::size_t blocks = 0;
    for (std::size_t i = 0; i < n; ++i) {
        level[blocks] = y[i];
        weight[blocks] = w[i];
        count[blocks] = 1;
        ++blocks;
        while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
            double tw = weight[blocks - 2] + weight[blocks - 1];
            double lv = tw > 0.0 ? (level[blocks - 2] * weight[blocks - 2] +
                                    level[blocks - 1] * weight[blocks - 1]) / tw
                                 : 0.5 * (level[blocks - 2] + level[blocks - 1]);
            level[blocks - 2] = lv;
            weight[blocks - 2] = tw;
            count[blocks - 2] += count[blocks - 1];
            --blocks;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < blocks; ++b)
        out.insert(out.end(), count[b], level[b]);
    return out;
}

PairwiseAccumulator::PairwiseAccumulator(std::size_t width) : width_(width) {}

void PairwiseAccumulator::push(std::vector<double>&& chunk_sum) {
    if (chunk_sum.size() != width_)
        throw Error(errc::contract, "PairwiseAccumulator: width mismatch");
    std::size_t level = 0;
    std::vector<double> carry = std::move(chunk_sum);
    while (level < levels_.size() && levels_[level].has_value()) {
        auto& held = *levels_[level];
        for (std::size_t i = 0; i < width_; ++i) carry[i] = held[i] + carry[i];
        levels_[level].reset();
        ++level;
    }
    if (level == levels_.size()) levels_.emplace_back();
    levels_[level] = std::move(carry);
}

std::vector<double> PairwiseAccumulator::finish() {
    std::vector<double> total(width_, 0.0);
    for (auto& slot : levels_) {
        if (!slot) continue;
        for (std::size_t i = 0; i < width_; ++i) total[i] += (*slot)[i];
        slot.reset();
    }
    levels_.clear();
    return total;
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double flo, double fhi, int iterations) {
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw Error(errc::contract, "bisect_root: interval does not bracket a root");
    for (int i = 0; i < iterations; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
        if (hi - lo <= 1e-15 * (1.0 + std::abs(lo))) break;
    }
    return 0.5 * (lo + hi);
}

double mean(std::span<const double> v) {
    if (v.empty()) throw Error(errc::insufficient_data, "mean of empty sequence");
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double variance(std::span<const double> v) {
    double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / double(v.size());
}

double median(std::vector<double> v) {
    if (v.empty()) throw Error(errc::insufficient_data, "median of empty sequence");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace hcr::num
