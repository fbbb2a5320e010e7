#pragma once

// File-format surface: CSV ingestion with per-line rejection reporting,
// plot-ready CSV/JSON writers with stable 17-significant-digit formatting,
// and the run manifest with content hashes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "hcr/marginals.hpp"

namespace hcr {

struct TableFrame {
    std::vector<std::string> names;           // from the header row or c0, c1, ...
    std::vector<std::vector<double>> columns;  // equal lengths
    std::vector<std::size_t> rejected_lines;   // 1-based lines with unparseable cells
};

// Parses a comma-separated table. A first row that fails numeric parsing is
// treated as the header. Rows with unparseable numeric cells are rejected
// (and reported by line number); a row with the wrong cell count is a
// misaligned-panel error naming the first missing column.
TableFrame ingest_csv(const std::filesystem::path& path);

// Column selection: empty selects a single-column table or the value column
// of a (timestamp, value) pair; otherwise a column name or 0-based index.
SeriesFrame to_series(const TableFrame& table, const std::string& selector = "");

// All columns (or the named/indexed subset) as raw aligned series.
struct RawPanel {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
};
RawPanel to_panel(const TableFrame& table, const std::vector<std::string>& selectors = {});

std::string format_double(double v);  // %.17g, round-trip exact

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names);
std::string curve_csv(const std::vector<double>& values, const std::string& column_name);

// FNV-1a 64-bit content hash, rendered as 16 hex digits.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

struct ManifestEntry {
    std::string path;  // relative to the manifest directory
    std::uint64_t bytes = 0;
    std::string hash;
};

struct ArtifactManifest {
    std::string tool_version;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> outputs;

    nlohmann::json to_json() const;
    static ArtifactManifest from_json(const nlohmann::json& j);

    // True when every listed output exists under `dir` with matching size
    // and content hash.
    bool matches_directory(const std::filesystem::path& dir) const;
};

ManifestEntry hash_file(const std::filesystem::path& dir, const std::string& relative);

}  // namespace hcr
