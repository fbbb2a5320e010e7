#pragma once

// Cross-series dependency analysis for panels of time-aligned series:
// matrices of mixed product-basis coefficients for every pair, their linear
// time trends, symmetric eigendecomposition, and the classical
// covariance/correlation PCA baseline.

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "hcr/marginals.hpp"
#include "hcr/polybasis.hpp"

namespace hcr {

struct PanelFrame {
    std::vector<std::string> names;
    std::vector<NormalizedSeries> series;

    PanelFrame() = default;
    // Validates equal lengths; the error names the offending column.
    PanelFrame(std::vector<std::string> names, std::vector<NormalizedSeries> series);

    std::size_t size() const noexcept { return series.size(); }
    std::size_t length() const noexcept { return series.empty() ? 0 : series[0].x.size(); }
};

struct PairCoeffMatrix {
    int j1 = 1, j2 = 1;
    double diagonal_fill = 0.0;  // diagonal terms are meaningless in this method
    std::vector<std::string> names;
    Eigen::MatrixXd values;
};

// Entry (a,b) = mean_t f_{j1}(x_a^t) f_{j2}(x_b^t); symmetric when j1 == j2,
// generally asymmetric otherwise.
PairCoeffMatrix pair_coeff_matrix(const PanelFrame& p, int j1, int j2, const OrthoBasis& basis);

// Linear time trend of the same product: the extra factor is f_1 on the
// midpoint time grid (t + 1/2)/n.
PairCoeffMatrix pair_trend_matrix(const PanelFrame& p, int j1, int j2, const OrthoBasis& basis);

struct EigenDecomposition {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // orthonormal columns, aligned with values

    nlohmann::json to_json() const;
};

// Symmetric eigendecomposition; throws a contract error if the input is not
// symmetric.
EigenDecomposition eigendecompose(const Eigen::MatrixXd& m);
EigenDecomposition eigendecompose(const PairCoeffMatrix& m);

struct PcaResult {
    std::vector<std::string> names;
    Eigen::MatrixXd covariance;   // population normalization
    Eigen::MatrixXd correlation;
    Eigen::VectorXd eigenvalues;  // of the covariance matrix, descending
    Eigen::MatrixXd top_vectors;  // first q eigenvectors as columns
};

// Classical PCA baseline on a panel of raw (unnormalized) series.
PcaResult covariance_pca(const std::vector<std::vector<double>>& raw,
                         std::vector<std::string> names, int top_q);

}  // namespace hcr
