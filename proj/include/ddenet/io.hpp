#pragma once

// Text formats: the sectioned key-value configuration, numeric CSV matrices, node-grid and
// profile tables, and atomic file output.

#include "ddenet/dde_sim.hpp"
#include "ddenet/error.hpp"
#include "ddenet/format.hpp"
#include "ddenet/modulation.hpp"
#include "ddenet/time_grid.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace ddenet::io {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',')
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(sep, start);
        const auto piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        out.emplace_back(piece);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (out.size() == 1 && out.front().empty()) out.clear();
    return out;
}

inline double parse_real(std::string_view text, std::string_view what)
{
    const auto t = trim(text);
    double value = 0.0;
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    if (!t.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || t.empty())
        throw ConfigError("cannot parse '" + std::string(t) + "' as a number for " + std::string(what));
    return value;
}

inline std::uint64_t parse_unsigned(std::string_view text, std::string_view what)
{
    const auto t = trim(text);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError("cannot parse '" + std::string(t) + "' as a non-negative integer for " + std::string(what));
    return value;
}

/// `[section]` headers, `key = value` lines, `#` or `;` comments. Keys are unique per section.
class Config {
public:
    static Config parse(std::string_view text, std::filesystem::path base_dir = {})
    {
        Config cfg;
        cfg.base_dir_ = std::move(base_dir);
        std::string section;
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto end = text.find('\n', start);
            std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
            ++line_no;
            start = end == std::string_view::npos ? text.size() + 1 : end + 1;

            if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError(fmt::format("line {}: unterminated section header", line_no));
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (section.empty()) throw ConfigError(fmt::format("line {}: empty section name", line_no));
                cfg.sections_[section];
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
            if (section.empty()) throw ConfigError(fmt::format("line {}: key outside any section", line_no));
            const std::string key(trim(line.substr(0, eq)));
            if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", line_no));
            auto& entries = cfg.sections_[section];
            if (!entries.emplace(key, std::string(trim(line.substr(eq + 1)))).second)
                throw ConfigError(fmt::format("line {}: duplicate key '{}' in [{}]", line_no, key, section));
        }
        return cfg;
    }

    static Config load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.parent_path());
    }

    bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

    bool has(const std::string& section, const std::string& key) const
    {
        const auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) const
    {
        const auto s = sections_.find(section);
        if (s == sections_.end()) return std::nullopt;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }

    std::string require(const std::string& section, const std::string& key) const
    {
        if (auto v = get(section, key)) return *v;
        throw ConfigError("missing [" + section + "] " + key);
    }

    std::string string_or(const std::string& section, const std::string& key, std::string fallback) const
    {
        return get(section, key).value_or(std::move(fallback));
    }

    double real(const std::string& section, const std::string& key) const
    {
        return parse_real(require(section, key), "[" + section + "] " + key);
    }

    double real_or(const std::string& section, const std::string& key, double fallback) const
    {
        const auto v = get(section, key);
        return v ? parse_real(*v, "[" + section + "] " + key) : fallback;
    }

    std::uint64_t integer(const std::string& section, const std::string& key) const
    {
        return parse_unsigned(require(section, key), "[" + section + "] " + key);
    }

    std::uint64_t integer_or(const std::string& section, const std::string& key, std::uint64_t fallback) const
    {
        const auto v = get(section, key);
        return v ? parse_unsigned(*v, "[" + section + "] " + key) : fallback;
    }

    std::vector<double> reals(const std::string& section, const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& item : split_list(require(section, key))) out.push_back(parse_real(item, "[" + section + "] " + key));
        return out;
    }

    std::vector<std::uint64_t> integers(const std::string& section, const std::string& key) const
    {
        std::vector<std::uint64_t> out;
        for (const auto& item : split_list(require(section, key)))
            out.push_back(parse_unsigned(item, "[" + section + "] " + key));
        return out;
    }

    /// A referenced file, resolved against the directory of the config file.
    std::filesystem::path path(const std::string& section, const std::string& key) const
    {
        return resolve(require(section, key));
    }

    std::filesystem::path resolve(const std::string& relative) const
    {
        std::filesystem::path p(relative);
        if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
        return p;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::filesystem::path base_dir_;
};

// ---------------------------------------------------------------------------------------------
// CSV

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Rows of comma-separated numbers; blank lines and `#` lines are skipped.
inline Eigen::MatrixXd parse_matrix_csv(std::string_view text, const std::string& origin = "matrix")
{
    std::vector<std::vector<double>> rows;
    std::size_t start = 0, line_no = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        const auto line = trim(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        ++line_no;
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        if (line.empty() || line.front() == '#') continue;
        std::vector<double> row;
        for (const auto& cell : split_list(line)) row.push_back(parse_real(cell, origin + " line " + std::to_string(line_no)));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError(origin + " line " + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path)
{
    return parse_matrix_csv(read_text(path), path.string());
}

inline std::string matrix_csv(const Eigen::MatrixXd& m)
{
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out += ',';
            out += format_real(m(i, j));
        }
        out += '\n';
    }
    return out;
}

/// `segment,node,time,value`, one row per node in time order.
inline std::string node_grid_csv(const TimeGrid& grid, const NodeGrid& values)
{
    std::string out = "segment,node,time,value\n";
    for (std::size_t l = 1; l <= values.segments(); ++l)
        for (std::size_t n = 1; n <= values.nodes(); ++n)
            out += fmt::format("{},{},{},{}\n", l, n, format_real(node_time(grid, {l, n})), format_real(values(l, n)));
    return out;
}

/// `index,value` rows of an output vector.
inline std::string output_csv(const Eigen::VectorXd& y)
{
    std::string out = "index,value\n";
    for (Eigen::Index p = 0; p < y.size(); ++p) out += fmt::format("{},{}\n", p + 1, format_real(y(p)));
    return out;
}

/// Nonzero step heights as `segment,delay,node,value` with the delay in grid units. Recurrent
/// tables use segment 0 for the periodic table; segment 1 rows carry a first-segment override.
inline std::string profile_csv(const ModulationProfile& profile, const DelaySet& delays)
{
    std::string out = "segment,delay,node,value\n";
    auto emit = [&](std::size_t segment, const ModulationTable& t) {
        for (Eigen::Index d = 0; d < t.rows(); ++d)
            for (Eigen::Index n = 0; n < t.cols(); ++n)
                if (t(d, n) != 0.0)
                    out += fmt::format("{},{},{},{}\n", segment, delays[static_cast<std::size_t>(d)], n + 1, format_real(t(d, n)));
    };
    if (profile.first_segment()) emit(1, *profile.first_segment());
    if (profile.mode() == Mode::Recurrent)
        emit(0, profile.table(0));
    else
        for (std::size_t i = 0; i < profile.table_count(); ++i) emit(i + 2, profile.table(i));
    return out;
}

inline ModulationProfile parse_profile_csv(std::string_view text, Mode mode, const DelaySet& delays, const TimeGrid& grid,
                                           const std::string& origin = "profile")
{
    const auto D = static_cast<Eigen::Index>(delays.size());
    const auto N = static_cast<Eigen::Index>(grid.nodes());
    ModulationProfile profile = ModulationProfile::zeros(mode, delays.size(), grid.nodes(), grid.segments());
    std::optional<ModulationTable> first;
    std::size_t start = 0, line_no = 0;
    bool header_seen = false;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        const auto line = trim(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        ++line_no;
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (line == "segment,delay,node,value") continue;
        }
        const auto cells = split_list(line);
        const std::string where = origin + " line " + std::to_string(line_no);
        if (cells.size() != 4) throw ConfigError(where + ": expected segment,delay,node,value");
        const auto segment = parse_unsigned(cells[0], where);
        const auto units = parse_unsigned(cells[1], where);
        const auto node = parse_unsigned(cells[2], where);
        const double value = parse_real(cells[3], where);
        const auto d = delays.find(units);
        if (!d) throw ConfigError(where + ": delay " + std::to_string(units) + " not in the delay set");
        if (node < 1 || node > grid.nodes()) throw ConfigError(where + ": node out of range");
        const auto row = static_cast<Eigen::Index>(*d);
        const auto col = static_cast<Eigen::Index>(node - 1);
        if (segment == 1) {
            if (!first) first = ModulationTable::Zero(D, N);
            (*first)(row, col) = value;
        }
        else if (mode == Mode::Recurrent) {
            if (segment != 0) throw ConfigError(where + ": recurrent profiles use segment 0 (periodic) or 1");
            profile.table(0)(row, col) = value;
        }
        else {
            if (segment < 2 || segment > grid.segments()) throw ConfigError(where + ": segment out of range");
            profile.table(segment - 2)(row, col) = value;
        }
    }
    if (first) profile.set_first_segment(std::move(*first));
    return profile;
}

/// Writes through a temporary file in the same directory and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot rename into " + path.string());
    }
}

inline std::string summary_text(const std::vector<std::pair<std::string, std::string>>& entries)
{
    std::string out;
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    return out;
}

}  // namespace ddenet::io
