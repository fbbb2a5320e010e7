#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "hcr/errors.hpp"
#include "hcr/io.hpp"
#include "hcr/pipeline.hpp"

using namespace hcr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("hcr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path write_prices(const fs::path& dir, std::size_t n, std::uint64_t seed,
                      bool header = true) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0002, 0.01);
    std::string csv = header ? "price\n" : "";
    double v = 100.0;
    for (std::size_t i = 0; i < n; ++i) {
        v *= std::exp(g(rng));
        csv += format_double(v) + "\n";
    }
    const fs::path p = dir / "prices.csv";
    write_text_file(p, csv);
    return p;
}

}  // namespace

TEST_CASE("single-column ingestion with and without header") {
    TempDir tmp;
    write_text_file(tmp.path / "a.csv", "price\n1.5\n2.5\n3.5\n");
    const TableFrame ta = ingest_csv(tmp.path / "a.csv");
    CHECK(ta.names == std::vector<std::string>{"price"});
    CHECK(ta.columns[0] == std::vector<double>{1.5, 2.5, 3.5});

    write_text_file(tmp.path / "b.csv", "1\n2\n3\n4\n5\n6\n7\n8\n9\n10\n");
    const TableFrame tb = ingest_csv(tmp.path / "b.csv");
    CHECK(tb.names == std::vector<std::string>{"c0"});
    CHECK(tb.columns[0].size() == 10);
    const SeriesFrame s = to_series(tb);
    CHECK(s.values.size() == 10);
}

TEST_CASE("timestamp-value pairs are recognized") {
    TempDir tmp;
    write_text_file(tmp.path / "tv.csv", "1,10.5\n2,11.0\n3,12.25\n");
    const SeriesFrame s = to_series(ingest_csv(tmp.path / "tv.csv"));
    CHECK(s.timestamps == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(s.values == std::vector<double>{10.5, 11.0, 12.25});
}

TEST_CASE("ambiguous multi-column tables require a selector") {
    TempDir tmp;
    write_text_file(tmp.path / "p.csv", "a,b,c\n1,2,3\n4,5,6\n");
    const TableFrame t = ingest_csv(tmp.path / "p.csv");
    CHECK_THROWS_AS(to_series(t), Error);
    CHECK(to_series(t, "b").values == std::vector<double>{2.0, 5.0});
    CHECK(to_series(t, "2").values == std::vector<double>{3.0, 6.0});
    CHECK_THROWS_AS(to_series(t, "zz"), Error);
}

TEST_CASE("unparseable rows are rejected with their line numbers") {
    TempDir tmp;
    write_text_file(tmp.path / "bad.csv", "v\n1.0\nnot_a_number\n3.0\nnan?\n5.0\n");
    const TableFrame t = ingest_csv(tmp.path / "bad.csv");
    CHECK(t.columns[0] == std::vector<double>{1.0, 3.0, 5.0});
    CHECK(t.rejected_lines == std::vector<std::size_t>{3, 5});
}

TEST_CASE("ragged panels raise an alignment error naming the column") {
    TempDir tmp;
    write_text_file(tmp.path / "ragged.csv", "a,b,c\n1,2,3\n4,5\n");
    try {
        ingest_csv(tmp.path / "ragged.csv");
        FAIL("expected alignment error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::misaligned_panel);
        CHECK(std::string(e.what()).find("'c'") != std::string::npos);
    }
}

TEST_CASE("empty files are a clean io error") {
    TempDir tmp;
    write_text_file(tmp.path / "empty.csv", "");
    CHECK_THROWS_AS(ingest_csv(tmp.path / "empty.csv"), Error);
    write_text_file(tmp.path / "header_only.csv", "price\n");
    CHECK_THROWS_AS(ingest_csv(tmp.path / "header_only.csv"), Error);
    CHECK_THROWS_AS(ingest_csv(tmp.path / "missing.csv"), Error);
}

TEST_CASE("double formatting round trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -0.0072})
        CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("panel extraction by selectors") {
    TempDir tmp;
    write_text_file(tmp.path / "p.csv", "a,b,c\n1,2,3\n4,5,6\n");
    const RawPanel all = to_panel(ingest_csv(tmp.path / "p.csv"));
    CHECK(all.names.size() == 3);
    const RawPanel sub = to_panel(ingest_csv(tmp.path / "p.csv"), {"c", "a"});
    CHECK(sub.names == std::vector<std::string>{"c", "a"});
    CHECK(sub.columns[0] == std::vector<double>{3.0, 6.0});
}

TEST_CASE("config JSON round trip and validation") {
    PipelineConfig c;
    c.input = "x.csv";
    c.d = 3;
    c.degrees = {4, 2, 2};
    c.adaptivity.lambda = 0.999;
    const PipelineConfig back = PipelineConfig::from_json(c.to_json());
    CHECK(back.d == 3);
    CHECK(back.degrees == std::vector<int>{4, 2, 2});
    CHECK(back.adaptivity.lambda.has_value());
    CHECK(back.config_hash() == c.config_hash());

    SUBCASE("unknown keys are rejected") {
        nlohmann::json j = c.to_json();
        j["tyop"] = 1;
        CHECK_THROWS_AS(PipelineConfig::from_json(j), Error);
    }
    SUBCASE("invalid lambda is rejected") {
        PipelineConfig bad = c;
        bad.adaptivity.lambda = 1.5;
        TempDir tmp;
        bad.input = write_prices(tmp.path, 50, 1);
        CHECK_THROWS_AS(bad.validate(), Error);
    }
    SUBCASE("missing input file is rejected") {
        PipelineConfig bad = c;
        bad.input = "/nonexistent/path.csv";
        CHECK_THROWS_AS(bad.validate(), Error);
    }
    SUBCASE("out-of-range degree is rejected") {
        PipelineConfig bad = c;
        TempDir tmp;
        bad.input = write_prices(tmp.path, 50, 1);
        bad.degrees = {13};
        CHECK_THROWS_AS(bad.validate(), Error);
    }
}

TEST_CASE("pipeline writes all artifacts plus a complete manifest") {
    TempDir tmp;
    PipelineConfig c;
    c.input = write_prices(tmp.path, 1500, 42);
    c.out_dir = tmp.path / "out";
    c.d = 3;
    c.degrees = {3};
    c.evaluation.arch_baseline = true;
    c.evaluation.linear_predictor_order = 2;
    const ArtifactManifest manifest = run_pipeline(c);

    for (const char* f : {"marginal.json", "tensor.json", "calibration.json",
                          "predictions.csv", "coverage.csv", "sorted_densities.csv",
                          "eval.json", "manifest.json"})
        CHECK(fs::exists(c.out_dir / f));

    // every listed output verifies against its hash
    CHECK(manifest.matches_directory(c.out_dir));
    CHECK(manifest.outputs.size() == 7);

    const nlohmann::json eval = read_json_file(c.out_dir / "eval.json");
    CHECK(eval["n"] == 1497);  // n1 - d + 1 with n1 = 1499, d = 3
    CHECK(eval.contains("coverage_ks"));
    CHECK(eval.contains("fraction_below_one"));
    CHECK(eval.contains("mean_log2_arch01"));
    CHECK(eval["linear_predictor_beta"].size() == 3);

    SUBCASE("tampering breaks the manifest check") {
        write_text_file(c.out_dir / "eval.json", "{}");
        CHECK_FALSE(manifest.matches_directory(c.out_dir));
    }
}

TEST_CASE("pipeline reruns are byte-identical") {
    TempDir tmp;
    PipelineConfig c;
    c.input = write_prices(tmp.path, 900, 77);
    c.d = 2;
    c.degrees = {4};
    c.calibration.mode = "mle";
    c.seed = 9;

    c.out_dir = tmp.path / "out1";
    run_pipeline(c);
    c.out_dir = tmp.path / "out2";
    run_pipeline(c);

    for (const char* f : {"marginal.json", "tensor.json", "calibration.json",
                          "predictions.csv", "eval.json"})
        CHECK(read_text_file(tmp.path / "out1" / f) == read_text_file(tmp.path / "out2" / f));
}

TEST_CASE("adaptive and trend artifacts appear when configured") {
    TempDir tmp;
    PipelineConfig c;
    c.input = write_prices(tmp.path, 1200, 78);
    c.out_dir = tmp.path / "out";
    c.d = 1;
    c.degrees = {4};
    c.adaptivity.lambda = 0.99;
    c.adaptivity.time_degree = 3;
    c.adaptivity.stride = 100;
    run_pipeline(c);
    CHECK(fs::exists(c.out_dir / "adaptive_coefficients.csv"));
    CHECK(fs::exists(c.out_dir / "trend_tensor.json"));
    const nlohmann::json eval = read_json_file(c.out_dir / "eval.json");
    CHECK(eval["adaptive_burn_in_steps"] == 100);
    CHECK(eval.contains("mean_log2_adaptive"));
}

TEST_CASE("holdout calibration reports a separate score") {
    TempDir tmp;
    PipelineConfig c;
    c.input = write_prices(tmp.path, 1000, 79);
    c.out_dir = tmp.path / "out";
    c.d = 2;
    c.degrees = {3};
    c.calibration.mode = "mle";
    c.calibration.holdout_fraction = 0.3;
    run_pipeline(c);
    const nlohmann::json eval = read_json_file(c.out_dir / "eval.json");
    CHECK(eval.contains("mean_log2_calibrated_holdout"));
}

TEST_CASE("fnv1a64 is stable") {
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64("a") != fnv1a64("b"));
}
