#pragma once

// End-to-end orchestration: ingest -> log returns -> marginal fit ->
// normalization -> windows -> coefficient estimation -> conditional
// prediction -> calibration -> evaluation, with every artifact written to
// the output directory and listed in a content-hashed manifest.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hcr/io.hpp"
#include "hcr/predict.hpp"

namespace hcr {

struct CalibrationConfig {
    // "none": raw polynomial values (may be negative).
    // "fixed": the piecewise-linear map below.
    // "empirical": ratio-of-densities fit from the run's own predictions.
    // "mle": maximum-likelihood fit within `family`.
    std::string mode = "fixed";
    double floor = 0.15;
    double slope = 0.15;
    double knee = 1.7;
    std::string family = "clamp";  // mle family: "clamp" or "piecewise_linear"
    int grid = 1000;               // empirical lattice size per polynomial
    double holdout_fraction = 0.0; // 0 = fit in-sample on all predictions
};

struct AdaptivityConfig {
    std::optional<double> lambda;   // exponential-decay online estimation
    std::optional<int> time_degree; // time-as-coordinate trend polynomial
    std::size_t stride = 100;       // snapshot decimation
};

struct EvaluationConfig {
    bool coverage = true;
    bool sorted_curve = true;
    bool gaussian_baseline = true;
    bool arch_baseline = false;
    int linear_predictor_order = 0;  // 0 disables
};

struct PipelineConfig {
    std::filesystem::path input;
    std::string column;  // CSV column selector; empty = auto
    std::string family = "laplace";
    int d = 4;                      // 1 + context length
    std::vector<int> degrees{4};    // per-coordinate, or one value broadcast
    std::string filter = "all";     // "all", "pairwise", "total_degree"
    int max_total_degree = 0;
    double prune_threshold = 0.0;   // in multiples of 1/sqrt(n); 0 keeps all
    CalibrationConfig calibration;
    AdaptivityConfig adaptivity;
    EvaluationConfig evaluation;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 1;
    double epd_kappa_min = 0.3;
    double epd_kappa_max = 4.0;
    bool arch_std_form = false;

    void validate() const;  // throws config errors; checks the input exists

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);

    std::string config_hash() const;
};

// Runs the full pipeline and writes: marginal.json, tensor.json,
// calibration.json, predictions.csv, coverage.csv, sorted_densities.csv,
// eval.json, optional adaptive/trend artifacts, and manifest.json. Returns
// the manifest. Deterministic for a fixed config and seed.
ArtifactManifest run_pipeline(const PipelineConfig& config);

}  // namespace hcr
