#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sideband/series.hpp"

namespace sideband {

inline constexpr const char* kToolVersion = "0.1.0";

// Writes to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// Column names carry their unit as a suffix: freq_hz, psd_quanta, ...
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row);
    std::size_t column(const std::string& name) const;  // throws InputError when absent
};

std::string to_csv(const Table& t);
void write_csv(const std::filesystem::path& path, const Table& t);
Table read_csv(const std::filesystem::path& path);
// {"columns": [...], "data": {name: [...]}}
nlohmann::json table_json(const Table& t);

// Raw little-endian float64 samples at <base>.f64 plus <base>.json describing them.
void write_series(const std::filesystem::path& base, const TimeSeries& s, const std::string& units,
                  const std::string& config_hash);
// Accepts the sidecar, the .f64 file, or the common base path.
TimeSeries read_series(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();

struct OutputFile {
    std::string path;  // relative to the output directory
    std::string sha256;
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string tool_version = kToolVersion;
    std::optional<std::uint64_t> seed;
    std::string started_utc;
    std::string finished_utc;
    std::vector<OutputFile> outputs;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

struct ErrorRecord {
    std::string type;  // usage_error, input_error, ill_conditioned, divergence, internal_error
    std::string message;
    std::string command;
    std::string config_hash;
    int exit_code = 1;

    nlohmann::json to_json() const;
};

}  // namespace sideband
