#include "sideband/io.hpp"

#include <bit>
#include <charconv>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include <openssl/evp.h>

#include "sideband/diagnostics.hpp"

namespace sideband {

namespace fs = std::filesystem;
using nlohmann::json;

void write_atomic(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw InputError("short write to " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + " is not valid JSON: " + e.what());
    }
}

void Table::add_row(std::vector<double> row) {
    if (row.size() != columns.size())
        throw std::invalid_argument("Table row has " + std::to_string(row.size()) + " values for " +
                                    std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw InputError("table has no column '" + name + "'");
}

namespace {

// Shortest representation that round-trips; identical bytes for identical doubles.
void append_number(std::string& out, double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    out.append(buf, end);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) parts.push_back(cur);
    if (!line.empty() && line.back() == sep) parts.emplace_back();
    return parts;
}

}  // namespace

std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) out += ',';
        out += t.columns[i];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            append_number(out, row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const fs::path& path, const Table& t) { write_atomic(path, to_csv(t)); }

Table read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    Table t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto parts = split(line, ',');
        if (t.columns.empty()) {
            t.columns = parts;
            continue;
        }
        if (parts.size() != t.columns.size())
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(t.columns.size()) + " fields, got " + std::to_string(parts.size()));
        std::vector<double> row;
        for (const auto& p : parts) {
            double v = 0;
            auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
            if (ec != std::errc{} || ptr != p.data() + p.size())
                throw InputError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + p + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw InputError(path.string() + " has no header row");
    return t;
}

json table_json(const Table& t) {
    json data = json::object();
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        json col = json::array();
        for (const auto& r : t.rows) col.push_back(r[c]);
        data[t.columns[c]] = std::move(col);
    }
    return {{"columns", t.columns}, {"data", std::move(data)}};
}

void write_series(const fs::path& base, const TimeSeries& s, const std::string& units, const std::string& config_hash) {
    std::string bytes(s.samples.size() * sizeof(double), '\0');
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(bytes.data(), s.samples.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < s.samples.size(); ++i) {
            auto u = std::bit_cast<std::uint64_t>(s.samples[i]);
            for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((u >> (8 * b)) & 0xff);
        }
    }
    fs::path data = base;
    data += ".f64";
    fs::path meta = base;
    meta += ".json";
    write_atomic(data, bytes);
    write_json(meta, {{"data_file", data.filename().string()},
                      {"dtype", "float64"},
                      {"endianness", "little"},
                      {"fs_hz", s.fs},
                      {"n_samples", s.samples.size()},
                      {"t0_s", s.t0},
                      {"units", units},
                      {"sha256", sha256_hex(bytes)},
                      {"config_hash", config_hash}});
}

TimeSeries read_series(const fs::path& path) {
    fs::path meta = path;
    if (path.extension() == ".f64")
        meta.replace_extension(".json");
    else if (path.extension() != ".json")
        meta += ".json";
    const json m = read_json(meta);
    for (const char* key : {"data_file", "fs_hz", "n_samples"})
        if (!m.contains(key)) throw InputError(meta.string() + ": sidecar lacks '" + key + "'");
    if (m.value("dtype", "float64") != "float64" || m.value("endianness", "little") != "little")
        throw InputError(meta.string() + ": only little-endian float64 is supported");
    const fs::path data = meta.parent_path() / m["data_file"].get<std::string>();
    const auto n = m["n_samples"].get<std::size_t>();
    std::ifstream in(data, std::ios::binary);
    if (!in) throw InputError("cannot open " + data.string());
    std::string bytes(n * sizeof(double), '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size())
        throw InputError(data.string() + ": expected " + std::to_string(n) + " samples");
    TimeSeries s{m["fs_hz"].get<double>(), RealBuffer(n), m.value("t0_s", 0.0)};
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(s.samples.data(), bytes.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t u = 0;
            for (int b = 0; b < 8; ++b) u |= std::uint64_t(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
            s.samples[i] = std::bit_cast<double>(u);
        }
    }
    s.validate();
    return s;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::ostringstream o;
    o << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) o << std::setw(2) << static_cast<int>(digest[i]);
    return o.str();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json RunManifest::to_json() const {
    json outs = json::array();
    for (const auto& o : outputs) outs.push_back({{"path", o.path}, {"sha256", o.sha256}});
    return {{"command", command},
            {"config_hash", config_hash},
            {"tool_version", tool_version},
            {"seed", seed ? json(*seed) : json(nullptr)},
            {"started_utc", started_utc},
            {"finished_utc", finished_utc},
            {"outputs", outs},
            {"warnings", warnings}};
}

json ErrorRecord::to_json() const {
    return {{"error", {{"type", type}, {"message", message}}},
            {"command", command},
            {"config_hash", config_hash},
            {"exit_code", exit_code},
            {"tool_version", kToolVersion}};
}

}  // namespace sideband
