#include "hcr/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hcr/errors.hpp"

namespace hcr {

namespace {

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        cells.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

TableFrame ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io, "cannot open '" + path.string() + "'");

    TableFrame table;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header_or_row = false;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<std::string> cells = split_cells(line);

        if (!saw_header_or_row) {
            saw_header_or_row = true;
            width = cells.size();
            std::vector<double> row(width);
            bool numeric = true;
            for (std::size_t c = 0; c < width; ++c)
                if (!parse_double(cells[c], row[c])) {
                    numeric = false;
                    break;
                }
            table.columns.resize(width);
            if (numeric) {
                for (std::size_t c = 0; c < width; ++c) {
                    table.names.push_back("c" + std::to_string(c));
                    table.columns[c].push_back(row[c]);
                }
            } else {
                table.names = cells;  // header row
            }
            continue;
        }

        if (cells.size() != width) {
            const std::size_t missing = std::min(cells.size(), width - 1);
            const std::string col = missing < table.names.size() ? table.names[missing]
                                                                 : "c" + std::to_string(missing);
            throw Error(errc::misaligned_panel,
                        "line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(width) + " (column '" + col + "')");
        }

        std::vector<double> row(width);
        bool ok = true;
        for (std::size_t c = 0; c < width; ++c)
            if (!parse_double(cells[c], row[c])) {
                ok = false;
                break;
            }
        if (!ok) {
            table.rejected_lines.push_back(line_no);
            continue;
        }
        for (std::size_t c = 0; c < width; ++c) table.columns[c].push_back(row[c]);
    }

    if (!saw_header_or_row) throw Error(errc::io, "'" + path.string() + "' is empty");
    if (table.columns.empty() || table.columns[0].empty())
        throw Error(errc::io, "'" + path.string() + "' contains no usable data rows");
    return table;
}

namespace {

std::size_t find_column(const TableFrame& table, const std::string& selector) {
    for (std::size_t c = 0; c < table.names.size(); ++c)
        if (table.names[c] == selector) return c;
    // fall back to a numeric index
    double idx = 0.0;
    if (parse_double(selector, idx) && idx >= 0 && idx < double(table.columns.size()) &&
        idx == double(std::size_t(idx)))
        return std::size_t(idx);
    throw Error(errc::config, "no column named '" + selector + "'");
}

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

}  // namespace

SeriesFrame to_series(const TableFrame& table, const std::string& selector) {
    SeriesFrame s;
    if (!selector.empty()) {
        const std::size_t c = find_column(table, selector);
        s.name = table.names[c];
        s.values = table.columns[c];
        return s;
    }
    if (table.columns.size() == 1) {
        s.name = table.names[0];
        s.values = table.columns[0];
        return s;
    }
    if (table.columns.size() == 2 && strictly_increasing(table.columns[0])) {
        // (timestamp, value) pairs
        s.name = table.names[1];
        s.timestamps = table.columns[0];
        s.values = table.columns[1];
        return s;
    }
    throw Error(errc::config,
                "table has " + std::to_string(table.columns.size()) +
                    " columns; specify which one to use");
}

RawPanel to_panel(const TableFrame& table, const std::vector<std::string>& selectors) {
    RawPanel p;
    if (selectors.empty()) {
        p.names = table.names;
        p.columns = table.columns;
        return p;
    }
    for (const auto& sel : selectors) {
        const std::size_t c = find_column(table, sel);
        p.names.push_back(table.names[c]);
        p.columns.push_back(table.columns[c]);
    }
    return p;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(errc::io, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error(errc::io, "short write to '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::io, "malformed JSON in '" + path.string() + "': " + e.what());
    }
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
    if (names.size() != std::size_t(m.rows()))
        throw Error(errc::shape_mismatch, "matrix and name count differ");
    std::string out;
    for (const auto& n : names) {
        out += ',';
        out += n;
    }
    out += '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out += names[std::size_t(r)];
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out += ',';
            out += format_double(m(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string curve_csv(const std::vector<double>& values, const std::string& column_name) {
    std::string out = "index," + column_name + "\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        out += std::to_string(i) + "," + format_double(values[i]) + "\n";
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

nlohmann::json ArtifactManifest::to_json() const {
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& e : outputs)
        outs.push_back({{"path", e.path}, {"bytes", e.bytes}, {"fnv1a64", e.hash}});
    return nlohmann::json{{"tool", "hcr"},
                          {"version", tool_version},
                          {"config_hash", config_hash},
                          {"seed", seed},
                          {"outputs", outs}};
}

ArtifactManifest ArtifactManifest::from_json(const nlohmann::json& j) {
    ArtifactManifest m;
    try {
        m.tool_version = j.at("version").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& e : j.at("outputs"))
            m.outputs.push_back({e.at("path").get<std::string>(),
                                 e.at("bytes").get<std::uint64_t>(),
                                 e.at("fnv1a64").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::io, std::string("malformed manifest JSON: ") + e.what());
    }
    return m;
}

bool ArtifactManifest::matches_directory(const std::filesystem::path& dir) const {
    for (const auto& e : outputs) {
        const auto p = dir / e.path;
        std::error_code ec;
        if (!std::filesystem::is_regular_file(p, ec)) return false;
        const std::string content = read_text_file(p);
        if (content.size() != e.bytes || fnv1a64_hex(content) != e.hash) return false;
    }
    return true;
}

ManifestEntry hash_file(const std::filesystem::path& dir, const std::string& relative) {
    const std::string content = read_text_file(dir / relative);
    return ManifestEntry{relative, content.size(), fnv1a64_hex(content)};
}

}  // namespace hcr
