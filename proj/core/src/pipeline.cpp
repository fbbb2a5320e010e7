#include "hcr/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "hcr/adaptive.hpp"
#include "hcr/errors.hpp"
#include "hcr/estimate.hpp"
#include "hcr/evalsuite.hpp"
#include "hcr/version.hpp"

namespace hcr {

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw Error(errc::config, "unknown key '" + it.key() + "' in " + where);
    }
}

IndexFilter make_filter(const PipelineConfig& c) {
    if (c.filter == "all") return IndexFilter::all();
    if (c.filter == "pairwise") return IndexFilter::pairwise();
    if (c.filter == "total_degree") return IndexFilter::total_degree(c.max_total_degree);
    throw Error(errc::config, "unknown index filter '" + c.filter + "'");
}

}  // namespace

void PipelineConfig::validate() const {
    if (input.empty()) throw Error(errc::config, "input path is required");
    if (!std::filesystem::exists(input))
        throw Error(errc::config, "input file '" + input.string() + "' does not exist");
    if (family != "laplace" && family != "gaussian" && family != "epd")
        throw Error(errc::config, "unknown marginal family '" + family + "'");
    if (d < 1) throw Error(errc::config, "d must be at least 1");
    if (degrees.empty()) throw Error(errc::config, "degrees must not be empty");
    if (degrees.size() != 1 && int(degrees.size()) != d)
        throw Error(errc::config, "degrees must have one entry or d entries");
    for (int m : degrees)
        if (m < 0 || m > kMaxBasisDegree)
            throw Error(errc::config,
                        "degree " + std::to_string(m) + " outside [0, " +
                            std::to_string(kMaxBasisDegree) + "]");
    if (filter != "all" && filter != "pairwise" && filter != "total_degree")
        throw Error(errc::config, "unknown index filter '" + filter + "'");
    if (prune_threshold < 0.0) throw Error(errc::config, "prune threshold must be nonnegative");
    if (calibration.mode != "none" && calibration.mode != "fixed" &&
        calibration.mode != "empirical" && calibration.mode != "mle")
        throw Error(errc::config, "unknown calibration mode '" + calibration.mode + "'");
    if (calibration.family != "clamp" && calibration.family != "piecewise_linear")
        throw Error(errc::config, "unknown calibration family '" + calibration.family + "'");
    if (calibration.holdout_fraction < 0.0 || calibration.holdout_fraction > 0.9)
        throw Error(errc::config, "holdout fraction must lie in [0, 0.9]");
    if (adaptivity.lambda && !(*adaptivity.lambda > 0.0 && *adaptivity.lambda < 1.0))
        throw Error(errc::config, "lambda must lie strictly inside (0,1)");
    if (adaptivity.time_degree &&
        (*adaptivity.time_degree < 0 || *adaptivity.time_degree > kMaxBasisDegree))
        throw Error(errc::config, "time degree outside the supported range");
    if (threads < 1) throw Error(errc::config, "threads must be at least 1");
    if (!(epd_kappa_min > 0.0 && epd_kappa_max > epd_kappa_min))
        throw Error(errc::config, "EPD kappa search range is empty");
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j{
        {"input", input.string()},
        {"column", column},
        {"family", family},
        {"d", d},
        {"degrees", degrees},
        {"filter", filter},
        {"max_total_degree", max_total_degree},
        {"prune_threshold", prune_threshold},
        {"calibration",
         {{"mode", calibration.mode},
          {"floor", calibration.floor},
          {"slope", calibration.slope},
          {"knee", calibration.knee},
          {"family", calibration.family},
          {"grid", calibration.grid},
          {"holdout_fraction", calibration.holdout_fraction}}},
        {"adaptivity", nlohmann::json::object()},
        {"evaluation",
         {{"coverage", evaluation.coverage},
          {"sorted_curve", evaluation.sorted_curve},
          {"gaussian_baseline", evaluation.gaussian_baseline},
          {"arch_baseline", evaluation.arch_baseline},
          {"linear_predictor_order", evaluation.linear_predictor_order}}},
        {"out_dir", out_dir.string()},
        {"seed", seed},
        {"threads", threads},
        {"epd_kappa_min", epd_kappa_min},
        {"epd_kappa_max", epd_kappa_max},
        {"arch_std_form", arch_std_form}};
    j["adaptivity"]["stride"] = adaptivity.stride;
    if (adaptivity.lambda) j["adaptivity"]["lambda"] = *adaptivity.lambda;
    if (adaptivity.time_degree) j["adaptivity"]["time_degree"] = *adaptivity.time_degree;
    return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    check_keys(j, {"input", "column", "family", "d", "degrees", "filter", "max_total_degree",
                   "prune_threshold", "calibration", "adaptivity", "evaluation", "out_dir",
                   "seed", "threads", "epd_kappa_min", "epd_kappa_max", "arch_std_form"},
               "pipeline config");
    PipelineConfig c;
    try {
        if (j.contains("input")) c.input = j["input"].get<std::string>();
        if (j.contains("column")) c.column = j["column"].get<std::string>();
        if (j.contains("family")) c.family = j["family"].get<std::string>();
        if (j.contains("d")) c.d = j["d"].get<int>();
        if (j.contains("degrees")) {
            if (j["degrees"].is_array())
                c.degrees = j["degrees"].get<std::vector<int>>();
            else
                c.degrees = {j["degrees"].get<int>()};
        }
        if (j.contains("filter")) c.filter = j["filter"].get<std::string>();
        if (j.contains("max_total_degree")) c.max_total_degree = j["max_total_degree"].get<int>();
        if (j.contains("prune_threshold"))
            c.prune_threshold = j["prune_threshold"].get<double>();
        if (j.contains("calibration")) {
            const auto& cal = j["calibration"];
            check_keys(cal, {"mode", "floor", "slope", "knee", "family", "grid",
                             "holdout_fraction"},
                       "calibration config");
            if (cal.contains("mode")) c.calibration.mode = cal["mode"].get<std::string>();
            if (cal.contains("floor")) c.calibration.floor = cal["floor"].get<double>();
            if (cal.contains("slope")) c.calibration.slope = cal["slope"].get<double>();
            if (cal.contains("knee")) c.calibration.knee = cal["knee"].get<double>();
            if (cal.contains("family")) c.calibration.family = cal["family"].get<std::string>();
            if (cal.contains("grid")) c.calibration.grid = cal["grid"].get<int>();
            if (cal.contains("holdout_fraction"))
                c.calibration.holdout_fraction = cal["holdout_fraction"].get<double>();
        }
        if (j.contains("adaptivity")) {
            const auto& ada = j["adaptivity"];
            check_keys(ada, {"lambda", "time_degree", "stride"}, "adaptivity config");
            if (ada.contains("lambda")) c.adaptivity.lambda = ada["lambda"].get<double>();
            if (ada.contains("time_degree"))
                c.adaptivity.time_degree = ada["time_degree"].get<int>();
            if (ada.contains("stride")) c.adaptivity.stride = ada["stride"].get<std::size_t>();
        }
        if (j.contains("evaluation")) {
            const auto& ev = j["evaluation"];
            check_keys(ev, {"coverage", "sorted_curve", "gaussian_baseline", "arch_baseline",
                            "linear_predictor_order"},
                       "evaluation config");
            if (ev.contains("coverage")) c.evaluation.coverage = ev["coverage"].get<bool>();
            if (ev.contains("sorted_curve"))
                c.evaluation.sorted_curve = ev["sorted_curve"].get<bool>();
            if (ev.contains("gaussian_baseline"))
                c.evaluation.gaussian_baseline = ev["gaussian_baseline"].get<bool>();
            if (ev.contains("arch_baseline"))
                c.evaluation.arch_baseline = ev["arch_baseline"].get<bool>();
            if (ev.contains("linear_predictor_order"))
                c.evaluation.linear_predictor_order = ev["linear_predictor_order"].get<int>();
        }
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("threads")) c.threads = j["threads"].get<int>();
        if (j.contains("epd_kappa_min")) c.epd_kappa_min = j["epd_kappa_min"].get<double>();
        if (j.contains("epd_kappa_max")) c.epd_kappa_max = j["epd_kappa_max"].get<double>();
        if (j.contains("arch_std_form")) c.arch_std_form = j["arch_std_form"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::config, std::string("malformed pipeline config: ") + e.what());
    }
    return c;
}

std::string PipelineConfig::config_hash() const { return fnv1a64_hex(to_json().dump()); }

ArtifactManifest run_pipeline(const PipelineConfig& config) {
    config.validate();
    const auto& out_dir = config.out_dir;
    std::filesystem::create_directories(out_dir);

    // ingest and normalize
    const TableFrame table = ingest_csv(config.input);
    const SeriesFrame series = to_series(table, config.column);
    const std::vector<double> returns = log_returns(series);

    MarginalModel model;
    if (config.family == "laplace")
        model = fit_laplace(returns);
    else if (config.family == "gaussian")
        model = fit_gaussian(returns);
    else {
        EpdFitOptions epd;
        epd.kappa_min = config.epd_kappa_min;
        epd.kappa_max = config.epd_kappa_max;
        model = fit_epd(returns, epd);
    }
    const NormalizedSeries normalized = normalize(returns, model);

    // estimate the joint tensor
    std::vector<int> degrees = config.degrees;
    if (degrees.size() == 1 && config.d > 1) degrees.assign(std::size_t(config.d), degrees[0]);
    const int max_degree = *std::max_element(degrees.begin(), degrees.end());
    const OrthoBasis basis(max_degree);
    const WindowSet windows = build_windows(normalized, config.d);
    CoefficientTensor tensor =
        estimate_coefficients(windows, basis, degrees, make_filter(config), config.threads);
    std::size_t pruned_away = 0;
    if (config.prune_threshold > 0.0) {
        PruneResult pr = prune(tensor, config.prune_threshold);
        tensor = std::move(pr.tensor);
        pruned_away = pr.dropped;
    }

    // per-window conditional predictions
    const std::size_t n = windows.rows;
    std::vector<PredictedDensity1D> preds(n);
    std::vector<double> actuals(n);
    std::vector<double> raw_at_actual(n);
    std::size_t degenerate = 0;
    const PredictedDensity1D uniform{{1.0}};
    for (std::size_t t = 0; t < n; ++t) {
        auto row = windows.row(t);
        actuals[t] = row[0];
        try {
            preds[t] = condition(tensor, basis, row.subspan(1));
        } catch (const DegenerateContextError&) {
            preds[t] = uniform;
            ++degenerate;
        }
        raw_at_actual[t] = preds[t].raw_at(basis, actuals[t]);
    }

    // calibration
    Calibration cal = Calibration::none();
    nlohmann::json cal_info;
    const std::size_t fit_count = config.calibration.holdout_fraction > 0.0
                                      ? std::size_t(double(n) * (1.0 - config.calibration.holdout_fraction))
                                      : n;
    if (config.calibration.mode == "fixed") {
        cal = Calibration::piecewise_linear(config.calibration.floor, config.calibration.slope,
                                            config.calibration.knee);
    } else if (config.calibration.mode == "empirical") {
        cal = calibrate_empirical(std::span(preds).subspan(0, fit_count),
                                  std::span(actuals).subspan(0, fit_count), basis,
                                  config.calibration.grid);
    } else if (config.calibration.mode == "mle") {
        const auto family = config.calibration.family == "clamp"
                                ? CalibrationFamily::clamp
                                : CalibrationFamily::piecewise_linear;
        CalibrationFitResult fit =
            fit_calibration_mle(std::span(preds).subspan(0, fit_count),
                                std::span(actuals).subspan(0, fit_count), basis, family);
        cal = fit.calibration;
        cal_info["fit_mean_log2_density"] = fit.mean_log2_density;
        cal_info["converged"] = fit.converged;
    }

    std::vector<double> cal_at_actual(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (cal.kind() == Calibration::Kind::none)
            cal_at_actual[t] = raw_at_actual[t];
        else
            cal_at_actual[t] = CalibratedDensity(preds[t], basis, cal)(actuals[t]);
    }

    // artifacts
    ArtifactManifest manifest;
    manifest.tool_version = kVersionString;
    manifest.config_hash = config.config_hash();
    manifest.seed = config.seed;
    std::vector<std::string> files;

    write_json_file(out_dir / "marginal.json", model.to_json());
    files.push_back("marginal.json");

    write_json_file(out_dir / "tensor.json", tensor.to_json());
    files.push_back("tensor.json");

    nlohmann::json cal_json = cal.to_json();
    if (!cal_info.is_null()) cal_json["fit"] = cal_info;
    write_json_file(out_dir / "calibration.json", cal_json);
    files.push_back("calibration.json");

    {
        std::string csv = "t";
        for (int i = 1; i < config.d; ++i) csv += ",context" + std::to_string(i);
        csv += ",raw_density_at_actual,calibrated_density_at_actual\n";
        for (std::size_t t = 0; t < n; ++t) {
            csv += std::to_string(t);
            auto row = windows.row(t);
            for (int i = 1; i < config.d; ++i) {
                csv += ',';
                csv += format_double(row[std::size_t(i)]);
            }
            csv += ',';
            csv += format_double(raw_at_actual[t]);
            csv += ',';
            csv += format_double(cal_at_actual[t]);
            csv += '\n';
        }
        write_text_file(out_dir / "predictions.csv", csv);
        files.push_back("predictions.csv");
    }

    nlohmann::json eval{{"n", n},
                        {"series", series.name},
                        {"returns", returns.size()},
                        {"degenerate_contexts", degenerate},
                        {"pruned_entries", pruned_away},
                        {"tensor_entries", tensor.entry_count()},
                        {"noise_sigma", noise_sigma(n).sigma}};
    if (config.evaluation.coverage) {
        const CoverageCurve cov = coverage_curve(normalized.x);
        write_text_file(out_dir / "coverage.csv", curve_csv(cov.sorted, "sorted_normalized"));
        files.push_back("coverage.csv");
        eval["coverage_ks"] = cov.ks_distance;
    }
    if (config.evaluation.sorted_curve) {
        const SortedPredictionCurve curve = sorted_prediction_curve(cal_at_actual);
        write_text_file(out_dir / "sorted_densities.csv",
                        curve_csv(curve.sorted, "sorted_calibrated_density"));
        files.push_back("sorted_densities.csv");
        eval["fraction_below_one"] = curve.fraction_below_one;
    }
    if (cal.kind() != Calibration::Kind::none)
        eval["mean_log2_calibrated"] = log_likelihood_bits(cal_at_actual);
    if (config.calibration.holdout_fraction > 0.0 && fit_count < n) {
        std::vector<double> holdout(cal_at_actual.begin() + std::ptrdiff_t(fit_count),
                                    cal_at_actual.end());
        if (cal.kind() != Calibration::Kind::none)
            eval["mean_log2_calibrated_holdout"] = log_likelihood_bits(holdout);
    }
    if (config.evaluation.gaussian_baseline) {
        const MarginalModel g = fit_gaussian(returns);
        const MarginalModel l = fit_laplace(returns);
        double gb = 0.0, lb = 0.0, mb = 0.0;
        for (double y : returns) {
            gb += g.log_pdf(y);
            lb += l.log_pdf(y);
            mb += model.log_pdf(y);
        }
        const double to_bits = 1.0 / std::log(2.0);
        eval["mean_log2_gaussian"] = gb * to_bits / double(returns.size());
        eval["mean_log2_laplace"] = lb * to_bits / double(returns.size());
        eval["mean_log2_marginal"] = mb * to_bits / double(returns.size());
    }
    if (config.evaluation.arch_baseline) {
        ArchFitOptions arch;
        arch.std_form = config.arch_std_form;
        const ArchFit fit = fit_arch01(returns, arch);
        eval["mean_log2_arch01"] = fit.mean_log2_density;
        eval["arch_alpha0"] = fit.model.alpha0;
        eval["arch_alpha1"] = fit.model.alpha1;
    }
    if (config.evaluation.linear_predictor_order > 0) {
        const LinearPredictor lp =
            fit_linear_predictor(series.values, config.evaluation.linear_predictor_order);
        eval["linear_predictor_beta"] = lp.beta;
    }

    // adaptivity
    if (config.adaptivity.lambda) {
        AdaptiveRunOptions opts;
        opts.snapshot_stride = config.adaptivity.stride;
        opts.calibration = cal.kind() == Calibration::Kind::none
                               ? Calibration::piecewise_linear(0.15, 0.15, 1.7)
                               : cal;
        const AdaptiveRun run = run_adaptive(normalized.x, config.d, degrees,
                                             *config.adaptivity.lambda, basis, opts);
        // long format: one row per (snapshot, tracked index)
        std::string csv = "t";
        for (int i = 0; i < config.d; ++i) csv += ",j" + std::to_string(i + 1);
        csv += ",coefficient\n";
        const std::size_t tracked = std::min<std::size_t>(run.indices.size(), 4);
        std::vector<int> multi(static_cast<std::size_t>(config.d));
        CoefficientTensor layout(degrees, 1, {}, {});
        for (const auto& snap : run.snapshots) {
            for (std::size_t e = 0; e < tracked; ++e) {
                layout.decode(run.indices[e], multi);
                csv += std::to_string(snap.t);
                for (int j : multi) csv += ',' + std::to_string(j);
                csv += ',';
                csv += format_double(snap.coefficients[e]);
                csv += '\n';
            }
        }
        write_text_file(out_dir / "adaptive_coefficients.csv", csv);
        files.push_back("adaptive_coefficients.csv");
        eval["adaptive_burn_in_steps"] = run.burn_in_steps;
        eval["adaptive_degenerate_contexts"] = run.degenerate_contexts;
        eval["mean_log2_adaptive"] = log_likelihood_bits(run.calibrated_at_actual);
    }
    if (config.adaptivity.time_degree) {
        const TrendTensor trend =
            fit_time_trend(windows, *config.adaptivity.time_degree, degrees, basis,
                           make_filter(config), config.threads);
        write_json_file(out_dir / "trend_tensor.json", trend.joint.to_json());
        files.push_back("trend_tensor.json");
    }

    write_json_file(out_dir / "eval.json", eval);
    files.push_back("eval.json");

    for (const auto& f : files) manifest.outputs.push_back(hash_file(out_dir, f));
    write_json_file(out_dir / "manifest.json", manifest.to_json());
    return manifest;
}

}  // namespace hcr
