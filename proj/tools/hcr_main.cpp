// Command line front end: ingest CSV series, fit marginals, normalize,
// estimate joint-density coefficients, predict and calibrate conditional
// densities, run adaptive variants, analyse cross-series dependencies, and
// orchestrate the full pipeline.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "hcr/adaptive.hpp"
#include "hcr/crossdeps.hpp"
#include "hcr/errors.hpp"
#include "hcr/estimate.hpp"
#include "hcr/evalsuite.hpp"
#include "hcr/io.hpp"
#include "hcr/pipeline.hpp"
#include "hcr/predict.hpp"
#include "hcr/version.hpp"

namespace {

int exit_code_for(hcr::errc code) {
    switch (code) {
        case hcr::errc::config:
        case hcr::errc::unsupported_degree:
            return 2;
        case hcr::errc::io:
        case hcr::errc::insufficient_data:
        case hcr::errc::domain:
        case hcr::errc::degenerate_scale:
        case hcr::errc::misaligned_panel:
            return 3;
        default:
            return 4;
    }
}

struct CommonOpts {
    std::string input;
    std::string column;
    std::string out_dir = "out";
    std::string family = "laplace";
    bool normalized = false;  // input column already holds values in (0,1)
    int threads = 1;
    std::uint64_t seed = 0;
};

void add_io_options(CLI::App* cmd, CommonOpts& o, bool with_family = true) {
    cmd->add_option("--input", o.input, "input CSV file")->required();
    cmd->add_option("--column", o.column, "column name or 0-based index");
    cmd->add_option("--out", o.out_dir, "output directory");
    if (with_family) {
        cmd->add_option("--family", o.family, "marginal family: gaussian, laplace, epd");
        cmd->add_flag("--normalized", o.normalized,
                      "treat the input column as already normalized to (0,1)");
    }
    cmd->add_option("--threads", o.threads, "worker threads for estimation");
    cmd->add_option("--seed", o.seed, "random seed recorded in outputs");
}

hcr::MarginalModel fit_family(const std::string& family, const std::vector<double>& y) {
    if (family == "gaussian") return hcr::fit_gaussian(y);
    if (family == "laplace") return hcr::fit_laplace(y);
    if (family == "epd") return hcr::fit_epd(y);
    throw hcr::Error(hcr::errc::config, "unknown marginal family '" + family + "'");
}

// Series -> log returns -> fitted marginal -> normalized values. With
// --normalized the column is used directly and a placeholder model is
// returned.
struct LoadedSeries {
    hcr::SeriesFrame series;
    std::vector<double> returns;
    hcr::MarginalModel model;
    hcr::NormalizedSeries normalized;
};

LoadedSeries load_series(const CommonOpts& o) {
    LoadedSeries ls;
    const hcr::TableFrame table = hcr::ingest_csv(o.input);
    for (std::size_t line : table.rejected_lines)
        std::cerr << "warning: rejected unparseable row at line " << line << "\n";
    ls.series = hcr::to_series(table, o.column);
    if (o.normalized) {
        ls.model = hcr::MarginalModel{};
        ls.normalized.model = ls.model;
        ls.normalized.x = ls.series.values;
        for (double v : ls.normalized.x)
            if (!(v > 0.0 && v < 1.0))
                throw hcr::Error(hcr::errc::domain,
                                 "--normalized input must lie strictly inside (0,1)");
        return ls;
    }
    ls.returns = hcr::log_returns(ls.series);
    ls.model = fit_family(o.family, ls.returns);
    ls.normalized = hcr::normalize(ls.returns, ls.model);
    return ls;
}

hcr::IndexFilter parse_filter(const std::string& filter, int max_total) {
    if (filter == "all") return hcr::IndexFilter::all();
    if (filter == "pairwise") return hcr::IndexFilter::pairwise();
    if (filter == "total_degree") return hcr::IndexFilter::total_degree(max_total);
    throw hcr::Error(hcr::errc::config, "unknown index filter '" + filter + "'");
}

hcr::Calibration calibration_from_flags(const std::string& mode, double floor, double slope,
                                        double knee, const std::string& file) {
    if (!file.empty()) return hcr::Calibration::from_json(hcr::read_json_file(file));
    if (mode == "none") return hcr::Calibration::none();
    if (mode == "fixed") return hcr::Calibration::piecewise_linear(floor, slope, knee);
    if (mode == "clamp") return hcr::Calibration::clamp(floor);
    throw hcr::Error(hcr::errc::config, "unknown calibration mode '" + mode + "'");
}

int cmd_fit_marginal(const CommonOpts& o) {
    LoadedSeries ls = load_series(o);
    hcr::write_json_file(std::filesystem::path(o.out_dir) / "marginal.json",
                         ls.model.to_json());
    std::cout << "fitted " << hcr::family_name(ls.model.family) << ": mu="
              << hcr::format_double(ls.model.location)
              << " scale=" << hcr::format_double(ls.model.scale);
    if (ls.model.family == hcr::MarginalFamily::epd)
        std::cout << " kappa=" << hcr::format_double(ls.model.shape);
    std::cout << " (n=" << ls.returns.size() << ")\n";
    return 0;
}

int cmd_normalize(const CommonOpts& o, const std::string& model_file) {
    LoadedSeries ls;
    if (!model_file.empty()) {
        const hcr::TableFrame table = hcr::ingest_csv(o.input);
        ls.series = hcr::to_series(table, o.column);
        ls.returns = hcr::log_returns(ls.series);
        ls.model = hcr::MarginalModel::from_json(hcr::read_json_file(model_file));
        ls.normalized = hcr::normalize(ls.returns, ls.model);
    } else {
        ls = load_series(o);
    }
    hcr::write_text_file(std::filesystem::path(o.out_dir) / "normalized.csv",
                         hcr::curve_csv(ls.normalized.x, "x"));
    const hcr::CoverageCurve cov = hcr::coverage_curve(ls.normalized.x);
    std::cout << "normalized " << ls.normalized.x.size()
              << " values; coverage KS distance " << hcr::format_double(cov.ks_distance)
              << "\n";
    return 0;
}

int cmd_estimate(const CommonOpts& o, int d, std::vector<int> degrees,
                 const std::string& filter, int max_total, double prune_threshold) {
    LoadedSeries ls = load_series(o);
    if (degrees.empty()) degrees = {4};
    const int max_degree = *std::max_element(degrees.begin(), degrees.end());
    hcr::OrthoBasis basis(max_degree);
    hcr::WindowSet w = hcr::build_windows(ls.normalized, d);
    hcr::CoefficientTensor tensor = hcr::estimate_coefficients(
        w, basis, degrees, parse_filter(filter, max_total), o.threads);
    std::size_t dropped = 0;
    if (prune_threshold > 0.0) {
        hcr::PruneResult pr = hcr::prune(tensor, prune_threshold);
        tensor = std::move(pr.tensor);
        dropped = pr.dropped;
    }
    const auto out = std::filesystem::path(o.out_dir);
    hcr::write_json_file(out / "tensor.json", tensor.to_json());
    if (!o.normalized) hcr::write_json_file(out / "marginal.json", ls.model.to_json());
    std::cout << "estimated " << tensor.entry_count() << " coefficients from " << w.rows
              << " windows (noise sigma " << hcr::format_double(hcr::noise_sigma(w.rows).sigma)
              << ", pruned " << dropped << ")\n";
    return 0;
}

int cmd_predict(const CommonOpts& o, const std::string& tensor_file,
                const std::string& cal_mode, double floor, double slope, double knee,
                const std::string& cal_file) {
    LoadedSeries ls = load_series(o);
    hcr::CoefficientTensor tensor =
        hcr::CoefficientTensor::from_json(hcr::read_json_file(tensor_file));
    const int max_degree =
        *std::max_element(tensor.degrees().begin(), tensor.degrees().end());
    hcr::OrthoBasis basis(max_degree);
    hcr::Calibration cal = calibration_from_flags(cal_mode, floor, slope, knee, cal_file);
    hcr::WindowSet w = hcr::build_windows(ls.normalized, tensor.dim());

    std::string csv = "t";
    for (int i = 1; i < tensor.dim(); ++i) csv += ",context" + std::to_string(i);
    csv += ",raw_density_at_actual,calibrated_density_at_actual\n";
    std::size_t degenerate = 0;
    for (std::size_t t = 0; t < w.rows; ++t) {
        auto row = w.row(t);
        hcr::PredictedDensity1D pred{{1.0}};
        try {
            pred = hcr::condition(tensor, basis, row.subspan(1));
        } catch (const hcr::DegenerateContextError&) {
            ++degenerate;
        }
        const double raw = pred.raw_at(basis, row[0]);
        const double calv = cal.kind() == hcr::Calibration::Kind::none
                                ? raw
                                : hcr::predicted_density_at(pred, basis, row[0], cal);
        csv += std::to_string(t);
        for (int i = 1; i < tensor.dim(); ++i) {
            csv += ',';
            csv += hcr::format_double(row[std::size_t(i)]);
        }
        csv += ',';
        csv += hcr::format_double(raw);
        csv += ',';
        csv += hcr::format_double(calv);
        csv += '\n';
    }
    hcr::write_text_file(std::filesystem::path(o.out_dir) / "predictions.csv", csv);
    std::cout << "predicted " << w.rows << " densities (" << degenerate
              << " degenerate contexts fell back to uniform)\n";
    return 0;
}

int cmd_calibrate(const CommonOpts& o, const std::string& tensor_file, const std::string& mode,
                  const std::string& family, int grid) {
    LoadedSeries ls = load_series(o);
    hcr::CoefficientTensor tensor =
        hcr::CoefficientTensor::from_json(hcr::read_json_file(tensor_file));
    const int max_degree =
        *std::max_element(tensor.degrees().begin(), tensor.degrees().end());
    hcr::OrthoBasis basis(max_degree);
    hcr::WindowSet w = hcr::build_windows(ls.normalized, tensor.dim());

    std::vector<hcr::PredictedDensity1D> preds(w.rows);
    std::vector<double> actuals(w.rows);
    for (std::size_t t = 0; t < w.rows; ++t) {
        auto row = w.row(t);
        actuals[t] = row[0];
        try {
            preds[t] = hcr::condition(tensor, basis, row.subspan(1));
        } catch (const hcr::DegenerateContextError&) {
            preds[t] = hcr::PredictedDensity1D{{1.0}};
        }
    }

    nlohmann::json out;
    if (mode == "empirical") {
        out = hcr::calibrate_empirical(preds, actuals, basis, grid).to_json();
    } else if (mode == "mle") {
        const auto fam = family == "clamp" ? hcr::CalibrationFamily::clamp
                                           : hcr::CalibrationFamily::piecewise_linear;
        hcr::CalibrationFitResult fit = hcr::fit_calibration_mle(preds, actuals, basis, fam);
        out = fit.calibration.to_json();
        out["fit"] = {{"mean_log2_density", fit.mean_log2_density},
                      {"converged", fit.converged}};
    } else {
        throw hcr::Error(hcr::errc::config, "calibrate mode must be empirical or mle");
    }
    hcr::write_json_file(std::filesystem::path(o.out_dir) / "calibration.json", out);
    std::cout << "calibration written (" << mode << ")\n";
    return 0;
}

int cmd_adapt(const CommonOpts& o, int d, std::vector<int> degrees,
              std::optional<double> lambda, std::optional<int> time_degree, std::size_t stride,
              const std::vector<double>& at_times) {
    LoadedSeries ls = load_series(o);
    if (degrees.empty()) degrees = {4};
    const int value_degree = *std::max_element(degrees.begin(), degrees.end());
    const auto out = std::filesystem::path(o.out_dir);
    if (!lambda && !time_degree)
        throw hcr::Error(hcr::errc::config, "adapt needs --lambda and/or --time-degree");

    if (lambda) {
        hcr::OrthoBasis basis(value_degree);
        hcr::AdaptiveRunOptions opts;
        opts.snapshot_stride = stride;
        const hcr::AdaptiveRun run =
            hcr::run_adaptive(ls.normalized.x, d, degrees, *lambda, basis, opts);
        std::string csv = "t";
        for (int i = 0; i < d; ++i) csv += ",j" + std::to_string(i + 1);
        csv += ",coefficient\n";
        std::vector<int> multi(static_cast<std::size_t>(d));
        hcr::CoefficientTensor layout(run.degrees, 1, {}, {});
        const std::size_t tracked = std::min<std::size_t>(run.indices.size(), 4);
        for (const auto& snap : run.snapshots)
            for (std::size_t e = 0; e < tracked; ++e) {
                layout.decode(run.indices[e], multi);
                csv += std::to_string(snap.t);
                for (int j : multi) csv += ',' + std::to_string(j);
                csv += ',';
                csv += hcr::format_double(snap.coefficients[e]);
                csv += '\n';
            }
        hcr::write_text_file(out / "adaptive_coefficients.csv", csv);
        std::cout << "adaptive run: " << run.snapshots.size() << " snapshots, burn-in "
                  << run.burn_in_steps << " steps, "
                  << hcr::format_double(hcr::log_likelihood_bits(run.calibrated_at_actual))
                  << " bits\n";
    }
    if (time_degree) {
        const int basis_degree = std::max(value_degree, *time_degree);
        hcr::OrthoBasis basis(basis_degree);
        hcr::WindowSet w = hcr::build_windows(ls.normalized, d);
        const hcr::TrendTensor trend =
            hcr::fit_time_trend(w, *time_degree, degrees, basis);
        hcr::write_json_file(out / "trend_tensor.json", trend.joint.to_json());
        for (double tau : at_times) {
            if (tau < 0.0 || tau > 1.0)
                std::cerr << "warning: time " << tau
                          << " extrapolates outside [0,1]; polynomial boundary behavior is "
                             "unreliable\n";
            const hcr::CoefficientTensor slice = trend.coefficients_at(tau, basis);
            hcr::write_json_file(out / ("trend_slice_" + std::to_string(tau) + ".json"),
                                 slice.to_json());
        }
        std::cout << "trend tensor with time degree " << *time_degree << " written\n";
    }
    return 0;
}

int cmd_crossdeps(const CommonOpts& o, const std::vector<std::string>& columns,
                  const std::vector<std::string>& pairs, int top_q) {
    const hcr::TableFrame table = hcr::ingest_csv(o.input);
    const hcr::RawPanel raw = hcr::to_panel(table, columns);
    if (raw.columns.size() < 2)
        throw hcr::Error(hcr::errc::insufficient_data, "crossdeps needs at least two columns");

    // per-series log returns and marginal fits
    std::vector<std::vector<double>> returns(raw.columns.size());
    std::vector<hcr::NormalizedSeries> normalized(raw.columns.size());
    for (std::size_t i = 0; i < raw.columns.size(); ++i) {
        returns[i] = hcr::log_returns(raw.columns[i]);
        normalized[i] = hcr::normalize(returns[i], fit_family(o.family, returns[i]));
    }
    hcr::PanelFrame panel(raw.names, std::move(normalized));

    hcr::OrthoBasis basis(hcr::kMaxBasisDegree);
    const auto out = std::filesystem::path(o.out_dir);
    for (const std::string& pair : pairs) {
        if (pair.size() != 2 || !isdigit(pair[0]) || !isdigit(pair[1]))
            throw hcr::Error(hcr::errc::config, "pair spec must be two digits, e.g. 11");
        const int j1 = pair[0] - '0', j2 = pair[1] - '0';
        const hcr::PairCoeffMatrix avg = hcr::pair_coeff_matrix(panel, j1, j2, basis);
        const hcr::PairCoeffMatrix trend = hcr::pair_trend_matrix(panel, j1, j2, basis);
        hcr::write_text_file(out / ("pair_" + pair + ".csv"),
                             hcr::matrix_csv(avg.values, avg.names));
        hcr::write_text_file(out / ("pair_trend_" + pair + ".csv"),
                             hcr::matrix_csv(trend.values, trend.names));
        if (j1 == j2)
            hcr::write_json_file(out / ("eigen_" + pair + ".json"),
                                 hcr::eigendecompose(avg).to_json());
    }

    const hcr::PcaResult pca = hcr::covariance_pca(returns, raw.names, top_q);
    hcr::write_text_file(out / "covariance.csv", hcr::matrix_csv(pca.covariance, pca.names));
    hcr::write_text_file(out / "correlation.csv", hcr::matrix_csv(pca.correlation, pca.names));
    nlohmann::json pca_json;
    pca_json["eigenvalues"] = std::vector<double>(
        pca.eigenvalues.data(), pca.eigenvalues.data() + pca.eigenvalues.size());
    nlohmann::json vecs = nlohmann::json::array();
    for (Eigen::Index c = 0; c < pca.top_vectors.cols(); ++c) {
        nlohmann::json v = nlohmann::json::array();
        for (Eigen::Index r = 0; r < pca.top_vectors.rows(); ++r)
            v.push_back(pca.top_vectors(r, c));
        vecs.push_back(std::move(v));
    }
    pca_json["top_vectors"] = std::move(vecs);
    hcr::write_json_file(out / "pca.json", pca_json);
    std::cout << "crossdeps artifacts for " << raw.names.size() << " series written to "
              << out.string() << "\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& predictions_file,
                 const std::string& density_column) {
    const hcr::TableFrame table = hcr::ingest_csv(predictions_file);
    const hcr::SeriesFrame dens = hcr::to_series(table, density_column);
    const hcr::SortedPredictionCurve curve = hcr::sorted_prediction_curve(dens.values);
    nlohmann::json eval{{"n", dens.values.size()},
                        {"fraction_below_one", curve.fraction_below_one},
                        {"mean_log2_density", hcr::log_likelihood_bits(dens.values)}};
    const auto out = std::filesystem::path(o.out_dir);
    hcr::write_text_file(out / "sorted_densities.csv",
                         hcr::curve_csv(curve.sorted, "sorted_density"));
    if (!o.input.empty()) {
        const hcr::TableFrame norm_table = hcr::ingest_csv(o.input);
        const hcr::SeriesFrame norm = hcr::to_series(norm_table, o.column);
        const hcr::CoverageCurve cov = hcr::coverage_curve(norm.values);
        hcr::write_text_file(out / "coverage.csv",
                             hcr::curve_csv(cov.sorted, "sorted_normalized"));
        eval["coverage_ks"] = cov.ks_distance;
    }
    hcr::write_json_file(out / "eval.json", eval);
    std::cout << "mean log2 density " << hcr::format_double(eval["mean_log2_density"].get<double>())
              << " bits; fraction below 1: "
              << hcr::format_double(curve.fraction_below_one) << "\n";
    return 0;
}

int cmd_run(const std::string& config_file, const CommonOpts& o, bool check,
            bool have_input, bool have_out, bool have_threads, bool have_seed) {
    hcr::PipelineConfig config;
    if (!config_file.empty())
        config = hcr::PipelineConfig::from_json(hcr::read_json_file(config_file));
    if (have_input) config.input = o.input;
    if (have_out) config.out_dir = o.out_dir;
    if (have_threads) config.threads = o.threads;
    if (have_seed) config.seed = o.seed;
    if (!o.column.empty()) config.column = o.column;

    if (check) {
        const auto manifest_path = config.out_dir / "manifest.json";
        if (std::filesystem::exists(manifest_path)) {
            const hcr::ArtifactManifest manifest =
                hcr::ArtifactManifest::from_json(hcr::read_json_file(manifest_path));
            if (manifest.config_hash == config.config_hash() &&
                manifest.matches_directory(config.out_dir)) {
                std::cout << "up to date (config " << manifest.config_hash << ")\n";
                return 0;
            }
        }
    }
    const hcr::ArtifactManifest manifest = hcr::run_pipeline(config);
    std::cout << "wrote " << manifest.outputs.size() << " artifacts to "
              << config.out_dir.string() << " (config " << manifest.config_hash << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical correlation reconstruction for time series"};
    app.set_version_flag("--version", hcr::kVersionString);
    app.require_subcommand(1);

    CommonOpts common;

    auto* fit_marginal = app.add_subcommand("fit-marginal", "fit a marginal distribution");
    add_io_options(fit_marginal, common);

    auto* normalize = app.add_subcommand("normalize", "CDF-normalize log returns");
    add_io_options(normalize, common);
    std::string model_file;
    normalize->add_option("--model", model_file, "use a previously fitted marginal JSON");

    auto* estimate = app.add_subcommand("estimate", "estimate joint-density coefficients");
    add_io_options(estimate, common);
    int d = 4;
    std::vector<int> degrees;
    std::string filter = "all";
    int max_total = 0;
    double prune_threshold = 0.0;
    estimate->add_option("-d,--dimension", d, "window dimension (1 + context length)");
    estimate->add_option("-m,--degrees", degrees, "per-coordinate degrees (one value broadcasts)");
    estimate->add_option("--filter", filter, "index filter: all, pairwise, total_degree");
    estimate->add_option("--max-total-degree", max_total, "budget for --filter total_degree");
    estimate->add_option("--prune", prune_threshold, "drop |a_j| below this multiple of sigma");

    auto* predict = app.add_subcommand("predict", "conditional densities for each window");
    add_io_options(predict, common);
    std::string tensor_file;
    std::string cal_mode = "fixed";
    double cal_floor = 0.15, cal_slope = 0.15, cal_knee = 1.7;
    std::string cal_file;
    predict->add_option("--tensor", tensor_file, "coefficient tensor JSON")->required();
    predict->add_option("--cal-mode", cal_mode, "none, fixed, clamp");
    predict->add_option("--cal-floor", cal_floor, "calibration floor");
    predict->add_option("--cal-slope", cal_slope, "piecewise calibration slope");
    predict->add_option("--cal-knee", cal_knee, "piecewise calibration knee");
    predict->add_option("--calibration", cal_file, "calibration JSON file");

    auto* calibrate = app.add_subcommand("calibrate", "fit a calibration map");
    add_io_options(calibrate, common);
    std::string cal_fit_mode = "empirical";
    std::string cal_family = "clamp";
    int cal_grid = 1000;
    std::string cal_tensor;
    calibrate->add_option("--tensor", cal_tensor, "coefficient tensor JSON")->required();
    calibrate->add_option("--mode", cal_fit_mode, "empirical or mle");
    calibrate->add_option("--fit-family", cal_family, "mle family: clamp or piecewise_linear");
    calibrate->add_option("--grid", cal_grid, "lattice size for the empirical densities");

    auto* adapt = app.add_subcommand("adapt", "non-stationary estimation");
    add_io_options(adapt, common);
    std::optional<double> lambda;
    std::optional<int> time_degree;
    std::size_t stride = 100;
    std::vector<double> at_times;
    int adapt_d = 1;
    std::vector<int> adapt_degrees;
    adapt->add_option("-d,--dimension", adapt_d, "window dimension");
    adapt->add_option("-m,--degrees", adapt_degrees, "per-coordinate degrees");
    adapt->add_option("--lambda", lambda, "exponential-decay learning rate in (0,1)");
    adapt->add_option("--time-degree", time_degree, "time-as-coordinate polynomial degree");
    adapt->add_option("--stride", stride, "snapshot decimation stride");
    adapt->add_option("--at-time", at_times, "interpolate trend coefficients at these times");

    auto* crossdeps = app.add_subcommand("crossdeps", "pairwise dependency analysis of a panel");
    add_io_options(crossdeps, common);
    std::vector<std::string> panel_columns;
    std::vector<std::string> pairs{"11", "12", "22"};
    int top_q = 5;
    crossdeps->add_option("--columns", panel_columns, "subset of panel columns");
    crossdeps->add_option("--pairs", pairs, "basis-degree pairs, e.g. 11 12 22");
    crossdeps->add_option("--top-q", top_q, "eigenvectors kept in the PCA baseline");

    auto* evaluate = app.add_subcommand("evaluate", "score a predictions CSV");
    std::string predictions_file;
    std::string density_column = "calibrated_density_at_actual";
    evaluate->add_option("--predictions", predictions_file, "predictions CSV")->required();
    evaluate->add_option("--density-column", density_column, "density column to score");
    evaluate->add_option("--input", common.input, "normalized values CSV for the coverage curve");
    evaluate->add_option("--column", common.column, "column in the normalized CSV");
    evaluate->add_option("--out", common.out_dir, "output directory");

    auto* run = app.add_subcommand("run", "full pipeline from a config file");
    std::string config_file;
    bool check = false;
    run->add_option("--config", config_file, "pipeline config JSON");
    auto* run_input = run->add_option("--input", common.input, "override input file");
    auto* run_out = run->add_option("--out", common.out_dir, "override output directory");
    auto* run_threads = run->add_option("--threads", common.threads, "override thread count");
    auto* run_seed = run->add_option("--seed", common.seed, "override seed");
    run->add_option("--column", common.column, "override column selector");
    run->add_flag("--check", check, "skip the run when the manifest is up to date");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (fit_marginal->parsed()) return cmd_fit_marginal(common);
        if (normalize->parsed()) return cmd_normalize(common, model_file);
        if (estimate->parsed())
            return cmd_estimate(common, d, degrees, filter, max_total, prune_threshold);
        if (predict->parsed())
            return cmd_predict(common, tensor_file, cal_mode, cal_floor, cal_slope, cal_knee,
                               cal_file);
        if (calibrate->parsed())
            return cmd_calibrate(common, cal_tensor, cal_fit_mode, cal_family, cal_grid);
        if (adapt->parsed())
            return cmd_adapt(common, adapt_d, adapt_degrees, lambda, time_degree, stride,
                             at_times);
        if (crossdeps->parsed()) return cmd_crossdeps(common, panel_columns, pairs, top_q);
        if (evaluate->parsed()) return cmd_evaluate(common, predictions_file, density_column);
        if (run->parsed())
            return cmd_run(config_file, common, check, run_input->count() > 0,
                           run_out->count() > 0, run_threads->count() > 0,
                           run_seed->count() > 0);
    } catch (const hcr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
