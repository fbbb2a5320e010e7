#include "hcr/crossdeps.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "hcr/errors.hpp"
#include "hcr/numerics.hpp"

namespace hcr {

PanelFrame::PanelFrame(std::vector<std::string> names_in, std::vector<NormalizedSeries> series_in)
    : names(std::move(names_in)), series(std::move(series_in)) {
    if (names.size() != series.size())
        throw Error(errc::shape_mismatch, "panel names and series count differ");
    for (std::size_t i = 1; i < series.size(); ++i)
        if (series[i].x.size() != series[0].x.size())
            throw Error(errc::misaligned_panel,
                        "panel column '" + names[i] + "' has length " +
                            std::to_string(series[i].x.size()) + ", expected " +
                            std::to_string(series[0].x.size()));
}

namespace {

// Basis values of one degree for every series, laid out series-major.
std::vector<std::vector<double>> panel_basis_values(const PanelFrame& p, int degree,
                                                    const OrthoBasis& basis) {
    std::vector<std::vector<double>> f(p.size());
    for (std::size_t a = 0; a < p.size(); ++a) {
        f[a].resize(p.length());
        for (std::size_t t = 0; t < p.length(); ++t)
            f[a][t] = basis.evaluate(degree, p.series[a].x[t]);
    }
    return f;
}

PairCoeffMatrix pair_matrix_impl(const PanelFrame& p, int j1, int j2, const OrthoBasis& basis,
                                 const std::vector<double>* time_factor) {
    if (p.size() < 2) throw Error(errc::insufficient_data, "panel needs at least 2 series");
    if (p.length() == 0) throw Error(errc::insufficient_data, "panel series are empty");
    if (j1 < 1 || j2 < 1)
        throw Error(errc::domain, "pair coefficient degrees must be at least 1");

    const auto f1 = panel_basis_values(p, j1, basis);
    const auto f2 = j1 == j2 ? f1 : panel_basis_values(p, j2, basis);
    const std::size_t k = p.size(), n = p.length();

    PairCoeffMatrix out;
    out.j1 = j1;
    out.j2 = j2;
    out.names = p.names;
    out.values = Eigen::MatrixXd::Zero(Eigen::Index(k), Eigen::Index(k));
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            if (a == b) {
                out.values(Eigen::Index(a), Eigen::Index(b)) = out.diagonal_fill;
                continue;
            }
            double s = 0.0;
            if (time_factor) {
                for (std::size_t t = 0; t < n; ++t)
                    s += f1[a][t] * f2[b][t] * (*time_factor)[t];
            } else {
                for (std::size_t t = 0; t < n; ++t) s += f1[a][t] * f2[b][t];
            }
            out.values(Eigen::Index(a), Eigen::Index(b)) = s / double(n);
        }
    }
    return out;
}

}  // namespace

PairCoeffMatrix pair_coeff_matrix(const PanelFrame& p, int j1, int j2, const OrthoBasis& basis) {
    return pair_matrix_impl(p, j1, j2, basis, nullptr);
}

PairCoeffMatrix pair_trend_matrix(const PanelFrame& p, int j1, int j2, const OrthoBasis& basis) {
    std::vector<double> time_factor(p.length());
    for (std::size_t t = 0; t < p.length(); ++t)
        time_factor[t] = basis.evaluate(1, (double(t) + 0.5) / double(p.length()));
    return pair_matrix_impl(p, j1, j2, basis, &time_factor);
}

EigenDecomposition eigendecompose(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw Error(errc::contract, "eigendecompose needs a square matrix");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error(errc::contract, "eigendecompose needs a symmetric matrix");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
        throw Error(errc::numeric, "symmetric eigendecomposition failed to converge");

    const Eigen::Index k = m.rows();
    EigenDecomposition out;
    out.values.resize(k);
    out.vectors.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {  // Eigen sorts ascending; flip
        out.values(i) = solver.eigenvalues()(k - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(k - 1 - i);
    }
    return out;
}

EigenDecomposition eigendecompose(const PairCoeffMatrix& m) { return eigendecompose(m.values); }

nlohmann::json EigenDecomposition::to_json() const {
    nlohmann::json values_j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < values.size(); ++i) values_j.push_back(values(i));
    nlohmann::json vectors_j = nlohmann::json::array();
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        nlohmann::json v = nlohmann::json::array();
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) v.push_back(vectors(r, c));
        vectors_j.push_back(std::move(v));
    }
    return nlohmann::json{{"values", values_j}, {"vectors", vectors_j}};
}

PcaResult covariance_pca(const std::vector<std::vector<double>>& raw,
                         std::vector<std::string> names, int top_q) {
    const std::size_t k = raw.size();
    if (k == 0) throw Error(errc::insufficient_data, "empty panel");
    if (names.size() != k) throw Error(errc::shape_mismatch, "panel names and series count differ");
    const std::size_t n = raw[0].size();
    if (n < 2) throw Error(errc::insufficient_data, "covariance needs at least 2 observations");
    for (std::size_t i = 1; i < k; ++i)
        if (raw[i].size() != n)
            throw Error(errc::misaligned_panel, "panel column '" + names[i] + "' has length " +
                                                    std::to_string(raw[i].size()) + ", expected " +
                                                    std::to_string(n));

    std::vector<double> means(k);
    for (std::size_t i = 0; i < k; ++i) means[i] = num::mean(raw[i]);

    PcaResult out;
    out.names = std::move(names);
    out.covariance.resize(Eigen::Index(k), Eigen::Index(k));
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t)
                s += (raw[a][t] - means[a]) * (raw[b][t] - means[b]);
            const double c = s / double(n);
            out.covariance(Eigen::Index(a), Eigen::Index(b)) = c;
            out.covariance(Eigen::Index(b), Eigen::Index(a)) = c;
        }

    for (std::size_t a = 0; a < k; ++a)
        if (!(out.covariance(Eigen::Index(a), Eigen::Index(a)) > 0.0))
            throw Error(errc::degenerate_scale,
                        "panel column '" + out.names[a] + "' has zero variance");

    out.correlation.resize(Eigen::Index(k), Eigen::Index(k));
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
            out.correlation(Eigen::Index(a), Eigen::Index(b)) =
                out.covariance(Eigen::Index(a), Eigen::Index(b)) /
                std::sqrt(out.covariance(Eigen::Index(a), Eigen::Index(a)) *
                          out.covariance(Eigen::Index(b), Eigen::Index(b)));

    EigenDecomposition eig = eigendecompose(out.covariance);
    out.eigenvalues = eig.values;
    const int q = std::min<int>(top_q, int(k));
    out.top_vectors = eig.vectors.leftCols(q);
    return out;
}

}  // namespace hcr
