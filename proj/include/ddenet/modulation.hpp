#pragma once

// Delay sets, theta-step modulation profiles and drive signals, and the translation between
// modulation step heights and network weight matrices.
//
// Index conventions: segments and nodes are 1-based (NodeIndex), delay positions d are
// 0-based into the DelaySet. A delay of n_d grid units connects source node j of the
// previous segment to target node n when j = n - (n_d - N); with the forced zeros every
// delay fills one diagonal of the N x N block at offset j - n = N - n_d.

#include "ddenet/error.hpp"
#include "ddenet/time_grid.hpp"

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <string>
#include <utility>
#include <vector>

namespace ddenet {

enum class Mode { FeedForward, Recurrent };

inline const char* to_string(Mode m) { return m == Mode::FeedForward ? "feedforward" : "recurrent"; }

/// Delays in grid units n_d (tau_d = n_d * theta). Not validated on construction so that
/// validate() can report malformed sets; operations that index by delay call check().
class DelaySet {
public:
    DelaySet() = default;
    explicit DelaySet(std::vector<std::size_t> units) : units_(std::move(units)) {}

    std::size_t size() const noexcept { return units_.size(); }
    bool empty() const noexcept { return units_.empty(); }
    std::size_t operator[](std::size_t d) const { return units_.at(d); }
    const std::vector<std::size_t>& units() const noexcept { return units_; }

    /// n'_d = n_d - N.
    std::int64_t shifted(std::size_t d, std::size_t nodes_per_layer) const
    {
        return static_cast<std::int64_t>(units_.at(d)) - static_cast<std::int64_t>(nodes_per_layer);
    }

    /// Position of the delay with n_d == units, if present.
    std::optional<std::size_t> find(std::size_t units) const
    {
        for (std::size_t d = 0; d < units_.size(); ++d)
            if (units_[d] == units) return d;
        return std::nullopt;
    }

    bool well_formed(std::size_t nodes_per_layer) const noexcept
    {
        for (std::size_t d = 0; d < units_.size(); ++d) {
            if (units_[d] < 1 || units_[d] >= 2 * nodes_per_layer) return false;
            if (d > 0 && units_[d] <= units_[d - 1]) return false;
        }
        return true;
    }

    void check(std::size_t nodes_per_layer) const
    {
        if (!well_formed(nodes_per_layer))
            throw DomainError("delay set must be strictly increasing within (0, 2N), N = "
                              + std::to_string(nodes_per_layer));
    }

    friend bool operator==(const DelaySet&, const DelaySet&) = default;

private:
    std::vector<std::size_t> units_;
};

/// The delay set (1, 2, ..., 2N-1) that makes every N x N coupling realizable.
inline DelaySet full_delay_set(std::size_t nodes_per_layer)
{
    if (nodes_per_layer < 1) throw DomainError("full_delay_set: N must be >= 1");
    std::vector<std::size_t> units(2 * nodes_per_layer - 1);
    for (std::size_t d = 0; d < units.size(); ++d) units[d] = d + 1;
    return DelaySet(std::move(units));
}

/// True when delay n_d can feed target node n from the previous segment, i.e. the
/// source column j = n - n_d + N lies in [1, N]. Everywhere else the step height is forced to 0.
inline bool legal_position(std::size_t node, std::size_t delay_units, std::size_t nodes_per_layer)
{
    return !(delay_units < node || nodes_per_layer + node <= delay_units);
}

/// Source column j (1-based) of the connection carried by delay n_d into target node n,
/// or nullopt when it falls outside [1, N].
inline std::optional<std::size_t> source_column(std::size_t node, std::size_t delay_units,
                                                std::size_t nodes_per_layer)
{
    const auto j = static_cast<std::int64_t>(node) + static_cast<std::int64_t>(nodes_per_layer)
                   - static_cast<std::int64_t>(delay_units);
    if (j < 1 || j > static_cast<std::int64_t>(nodes_per_layer)) return std::nullopt;
    return static_cast<std::size_t>(j);
}

/// Step heights of one segment: row d, column n-1.
using ModulationTable = Eigen::MatrixXd;

class ModulationProfile {
public:
    /// One table per hidden layer l = 2..L; segment 1 is zero.
    static ModulationProfile feed_forward(std::vector<ModulationTable> hidden_layers)
    {
        return ModulationProfile(Mode::FeedForward, std::move(hidden_layers));
    }

    /// A single T-periodic table applied on every segment k >= 2; segment 1 is zero.
    static ModulationProfile recurrent(ModulationTable periodic)
    {
        std::vector<ModulationTable> tables;
        tables.push_back(std::move(periodic));
        return ModulationProfile(Mode::Recurrent, std::move(tables));
    }

    static ModulationProfile zeros(Mode mode, std::size_t delays, std::size_t nodes, std::size_t segments)
    {
        if (mode == Mode::Recurrent)
            return recurrent(ModulationTable::Zero(static_cast<Eigen::Index>(delays),
                                                   static_cast<Eigen::Index>(nodes)));
        std::vector<ModulationTable> layers(
            segments > 0 ? segments - 1 : 0,
            ModulationTable::Zero(static_cast<Eigen::Index>(delays), static_cast<Eigen::Index>(nodes)));
        return feed_forward(std::move(layers));
    }

    Mode mode() const noexcept { return mode_; }
    std::size_t delay_count() const noexcept { return rows_; }
    std::size_t nodes() const noexcept { return cols_; }

    /// FeedForward: hidden layers covered (L - 1). Recurrent: 1.
    std::size_t table_count() const noexcept { return tables_.size(); }

    const ModulationTable& table(std::size_t i) const { return tables_.at(i); }
    ModulationTable& table(std::size_t i) { return tables_.at(i); }

    /// Table driving segment `segment` (>= 2).
    const ModulationTable& segment_table(std::size_t segment) const
    {
        if (segment < 2) throw DomainError("segment 1 has no modulation table");
        if (mode_ == Mode::Recurrent) return tables_.front();
        if (segment - 2 >= tables_.size())
            throw DomainError("segment " + std::to_string(segment) + " beyond modulation profile");
        return tables_[segment - 2];
    }

    /// Step height v of delay d on sub-interval I_{l,n}.
    double value(std::size_t d, NodeIndex idx) const
    {
        const auto row = static_cast<Eigen::Index>(d);
        const auto col = static_cast<Eigen::Index>(idx.node - 1);
        if (idx.segment == 1) return first_segment_ ? (*first_segment_)(row, col) : 0.0;
        return segment_table(idx.segment)(row, col);
    }

    /// Installs nonzero step heights on segment 1. This breaks the zero-first-segment
    /// requirement and exists for negative controls; validate() reports it.
    void set_first_segment(ModulationTable table) { first_segment_ = std::move(table); }
    const std::optional<ModulationTable>& first_segment() const noexcept { return first_segment_; }

    /// Number of segments a feed-forward profile spans (L); recurrent profiles span any K.
    std::size_t spanned_segments() const noexcept { return tables_.size() + 1; }

private:
    ModulationProfile(Mode mode, std::vector<ModulationTable> tables) : mode_(mode), tables_(std::move(tables))
    {
        if (!tables_.empty()) {
            rows_ = static_cast<std::size_t>(tables_.front().rows());
            cols_ = static_cast<std::size_t>(tables_.front().cols());
        }
        for (const auto& t : tables_)
            if (static_cast<std::size_t>(t.rows()) != rows_ || static_cast<std::size_t>(t.cols()) != cols_)
                throw DimensionError("modulation tables must share one D x N shape");
    }

    Mode mode_;
    std::vector<ModulationTable> tables_;
    std::optional<ModulationTable> first_segment_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

/// Drive z(t) as a theta-step function: row l-1 holds z on I_l. Feed-forward rows are the
/// input segment J followed by the hidden-layer biases; recurrent rows are the per-step inputs.
class DriveSignal {
public:
    static DriveSignal feed_forward(const Eigen::VectorXd& input_segment, const Eigen::MatrixXd& biases)
    {
        if (biases.rows() > 0 && biases.cols() != input_segment.size())
            throw DimensionError("bias rows must have N entries");
        Eigen::MatrixXd v(biases.rows() + 1, input_segment.size());
        v.row(0) = input_segment.transpose();
        if (biases.rows() > 0) v.bottomRows(biases.rows()) = biases;
        return DriveSignal(Mode::FeedForward, std::move(v));
    }

    static DriveSignal recurrent(Eigen::MatrixXd steps) { return DriveSignal(Mode::Recurrent, std::move(steps)); }

    static DriveSignal zeros(Mode mode, std::size_t nodes, std::size_t segments)
    {
        return DriveSignal(mode, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(segments),
                                                       static_cast<Eigen::Index>(nodes)));
    }

    Mode mode() const noexcept { return mode_; }
    std::size_t segments() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t nodes() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    const Eigen::MatrixXd& values() const noexcept { return values_; }

    Eigen::VectorXd input_segment() const { return values_.row(0).transpose(); }
    Eigen::MatrixXd biases() const { return values_.bottomRows(values_.rows() - 1); }

    double at(NodeIndex idx) const
    {
        if (idx.segment < 1 || idx.segment > segments() || idx.node < 1 || idx.node > nodes())
            throw DomainError("drive signal does not cover node (" + std::to_string(idx.segment) + ", "
                              + std::to_string(idx.node) + ")");
        return values_(static_cast<Eigen::Index>(idx.segment - 1), static_cast<Eigen::Index>(idx.node - 1));
    }

private:
    DriveSignal(Mode mode, Eigen::MatrixXd values) : mode_(mode), values_(std::move(values)) {}

    Mode mode_;
    Eigen::MatrixXd values_;
};

// ---------------------------------------------------------------------------------------------
// Validation

struct Violation {
    std::string property;  ///< "I", "III", "IV", "VIII" or "shape"
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }

    bool violates(std::string_view property) const
    {
        for (const auto& v : violations)
            if (v.property == property) return true;
        return false;
    }

    std::string summary() const
    {
        std::string s;
        for (const auto& v : violations) s += "property (" + v.property + "): " + v.detail + "\n";
        return s;
    }
};

namespace detail {

inline void check_table(const ModulationTable& table, const DelaySet& delays, std::size_t nodes,
                        const std::string& where, ValidationReport& report)
{
    for (std::size_t d = 0; d < delays.size(); ++d) {
        for (std::size_t n = 1; n <= nodes; ++n) {
            const double v = table(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n - 1));
            if (!std::isfinite(v)) {
                report.violations.push_back({"shape", where + ": non-finite value at delay " + std::to_string(d)
                                                          + ", node " + std::to_string(n)});
            }
            else if (v != 0.0 && !legal_position(n, delays[d], nodes)) {
                report.violations.push_back({"III", where + ": nonzero v at delay n_d=" + std::to_string(delays[d])
                                                        + ", node " + std::to_string(n)});
            }
        }
    }
}

}  // namespace detail

inline ValidationReport validate(const ModulationProfile& profile, const DelaySet& delays, const TimeGrid& grid)
{
    ValidationReport report;
    const std::size_t nodes = grid.nodes();
    for (std::size_t d = 0; d < delays.size(); ++d) {
        if (delays[d] < 1 || delays[d] >= 2 * nodes)
            report.violations.push_back({"I", "delay " + std::to_string(d) + " = " + std::to_string(delays[d])
                                                  + " outside (0, 2N)"});
        if (d > 0 && delays[d] <= delays[d - 1])
            report.violations.push_back({"I", "delays not strictly increasing at position " + std::to_string(d)});
    }
    if (delays.empty()) report.violations.push_back({"I", "delay set is empty"});
    if (!report.ok()) return report;

    if (profile.table_count() > 0 && (profile.delay_count() != delays.size() || profile.nodes() != nodes)) {
        report.violations.push_back({"shape", "profile tables are " + std::to_string(profile.delay_count()) + " x "
                                                  + std::to_string(profile.nodes()) + ", expected D x N = "
                                                  + std::to_string(delays.size()) + " x " + std::to_string(nodes)});
        return report;
    }
    if (profile.mode() == Mode::FeedForward && profile.spanned_segments() != grid.segments())
        report.violations.push_back({"shape", "feed-forward profile spans " + std::to_string(profile.spanned_segments())
                                                  + " layers, grid has " + std::to_string(grid.segments())});
    if (profile.mode() == Mode::Recurrent && profile.table_count() != 1)
        report.violations.push_back({"VIII", "recurrent profile must hold exactly one periodic table"});

    for (std::size_t i = 0; i < profile.table_count(); ++i) {
        const std::string where = profile.mode() == Mode::FeedForward ? "layer " + std::to_string(i + 2) : "periodic table";
        detail::check_table(profile.table(i), delays, nodes, where, report);
    }

    if (const auto& first = profile.first_segment()) {
        if (static_cast<std::size_t>(first->rows()) != delays.size() || static_cast<std::size_t>(first->cols()) != nodes) {
            report.violations.push_back({"shape", "segment-1 table has wrong shape"});
        }
        else {
            for (Eigen::Index d = 0; d < first->rows(); ++d)
                for (Eigen::Index n = 0; n < first->cols(); ++n)
                    if ((*first)(d, n) != 0.0)
                        report.violations.push_back({"IV", "nonzero v on segment 1 at delay " + std::to_string(d)
                                                               + ", node " + std::to_string(n + 1)});
        }
    }
    return report;
}

/// Shape and finiteness of a drive signal against the grid.
inline ValidationReport validate(const DriveSignal& drive, const TimeGrid& grid)
{
    ValidationReport report;
    if (drive.nodes() != grid.nodes() || drive.segments() != grid.segments())
        report.violations.push_back({"shape", "drive is " + std::to_string(drive.segments()) + " x "
                                                  + std::to_string(drive.nodes()) + ", grid is "
                                                  + std::to_string(grid.segments()) + " x " + std::to_string(grid.nodes())});
    else if (!drive.values().allFinite())
        report.violations.push_back({"shape", "drive contains non-finite values"});
    return report;
}

inline double modulation_at(const ModulationProfile& profile, const DelaySet& delays, const TimeGrid& grid,
                            std::size_t d, double t)
{
    if (d >= delays.size()) throw DomainError("delay position " + std::to_string(d) + " out of range");
    const NodeIndex idx = grid.index_of_unit(grid.unit_containing(t));
    return profile.value(d, idx);
}

// ---------------------------------------------------------------------------------------------
// Modulation <-> weights

/// Weight block from one table: w(n, j) = v(d, n) where j = n - n'_d, zero elsewhere.
/// With a bias the result gains column N+1.
inline Eigen::MatrixXd assemble_from_table(const ModulationTable& table, const DelaySet& delays, std::size_t nodes,
                                           std::optional<std::span<const double>> bias = std::nullopt,
                                           bool bias_column = false)
{
    delays.check(nodes);
    if (static_cast<std::size_t>(table.rows()) != delays.size() || static_cast<std::size_t>(table.cols()) != nodes)
        throw DimensionError("modulation table must be D x N");
    const auto N = static_cast<Eigen::Index>(nodes);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N, (bias || bias_column) ? N + 1 : N);
    for (std::size_t d = 0; d < delays.size(); ++d) {
        for (std::size_t n = 1; n <= nodes; ++n) {
            const auto j = source_column(n, delays[d], nodes);
            if (!j) continue;
            // Distinct delays have distinct diagonal offsets, so no cell is written twice.
            assert(w(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(*j - 1)) == 0.0);
            w(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(*j - 1)) =
                table(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n - 1));
        }
    }
    if (bias) {
        if (bias->size() != nodes) throw DimensionError("bias must have N entries");
        for (std::size_t n = 0; n < nodes; ++n) w(static_cast<Eigen::Index>(n), N) = (*bias)[n];
    }
    return w;
}

/// W^l for a feed-forward segment (N x (N+1)) or the recurrent W (N x N).
inline Eigen::MatrixXd assemble_weight_matrix(const ModulationProfile& profile, const DelaySet& delays,
                                              const TimeGrid& grid, std::size_t segment,
                                              std::optional<std::span<const double>> bias = std::nullopt)
{
    if (profile.mode() == Mode::FeedForward) {
        if (segment < 2) throw DomainError("feed-forward weight matrices exist for layers l >= 2");
        return assemble_from_table(profile.segment_table(segment), delays, grid.nodes(), bias, true);
    }
    return assemble_from_table(profile.segment_table(2), delays, grid.nodes(), bias, false);
}

struct CompiledLayer {
    ModulationTable table;  ///< D x N step heights
    Eigen::VectorXd bias;   ///< column N+1 of the target, empty for N x N targets
};

/// Inverse of assemble_from_table. Every nonzero w(n, j), j <= N, must be carried by the delay
/// n_d = N + n - j; all unsupported entries are collected before throwing.
inline CompiledLayer compile_weights(const Eigen::MatrixXd& target, const DelaySet& delays, const TimeGrid& grid)
{
    const std::size_t nodes = grid.nodes();
    delays.check(nodes);
    const auto N = static_cast<Eigen::Index>(nodes);
    if (target.rows() != N || (target.cols() != N && target.cols() != N + 1))
        throw DimensionError("target weight matrix must be N x N or N x (N+1)");

    CompiledLayer out;
    out.table = ModulationTable::Zero(static_cast<Eigen::Index>(delays.size()), N);
    std::vector<UnrealizableWeights::Entry> unsupported;
    for (Eigen::Index n = 0; n < N; ++n) {
        for (Eigen::Index j = 0; j < N; ++j) {
            const double w = target(n, j);
            if (w == 0.0) continue;
            const auto units = static_cast<std::size_t>(N + n - j);  // N + (n+1) - (j+1)
            if (const auto d = delays.find(units))
                out.table(static_cast<Eigen::Index>(*d), n) = w;
            else
                unsupported.push_back({static_cast<std::size_t>(n + 1), static_cast<std::size_t>(j + 1)});
        }
    }
    if (!unsupported.empty()) {
        std::string msg = "unrealizable weights: no delay supports entries";
        for (const auto& e : unsupported)
            msg += " (" + std::to_string(e.row) + "," + std::to_string(e.column) + ")";
        throw UnrealizableWeights(msg, std::move(unsupported));
    }
    if (target.cols() == N + 1) out.bias = target.col(N);
    return out;
}

struct CompiledNetwork {
    ModulationProfile profile;
    Eigen::MatrixXd biases;  ///< (L-1) x N, row l-2 holds b^l
};

inline CompiledNetwork compile_feed_forward(const std::vector<Eigen::MatrixXd>& hidden_weights,
                                            const DelaySet& delays, const TimeGrid& grid)
{
    std::vector<ModulationTable> tables;
    Eigen::MatrixXd biases = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(hidden_weights.size()),
                                                   static_cast<Eigen::Index>(grid.nodes()));
    std::vector<UnrealizableWeights::Entry> unsupported;
    std::string msg;
    for (std::size_t i = 0; i < hidden_weights.size(); ++i) {
        try {
            auto layer = compile_weights(hidden_weights[i], delays, grid);
            tables.push_back(std::move(layer.table));
            if (layer.bias.size() > 0) biases.row(static_cast<Eigen::Index>(i)) = layer.bias.transpose();
        }
        catch (const UnrealizableWeights& e) {
            msg += "layer " + std::to_string(i + 2) + ": " + e.what() + "\n";
            unsupported.insert(unsupported.end(), e.entries().begin(), e.entries().end());
        }
    }
    if (!unsupported.empty()) throw UnrealizableWeights(msg, std::move(unsupported));
    return {ModulationProfile::feed_forward(std::move(tables)), std::move(biases)};
}

inline ModulationProfile compile_recurrent(const Eigen::MatrixXd& weights, const DelaySet& delays, const TimeGrid& grid)
{
    if (weights.cols() != static_cast<Eigen::Index>(grid.nodes()))
        throw DimensionError("recurrent weight matrix must be N x N");
    return ModulationProfile::recurrent(compile_weights(weights, delays, grid).table);
}

enum class Direction { Up, Horizontal, Down };

inline const char* to_string(Direction d)
{
    switch (d) {
    case Direction::Up: return "up";
    case Direction::Horizontal: return "horizontal";
    case Direction::Down: return "down";
    }
    return "?";
}

struct TopologyPattern {
    Direction direction;
    std::size_t count;

    friend bool operator==(const TopologyPattern&, const TopologyPattern&) = default;
};

/// Parallel connections induced by a single delay of n_d grid units between neighbouring segments.
inline TopologyPattern topology_pattern(std::size_t delay_units, std::size_t nodes_per_layer)
{
    check_delay_units(delay_units, nodes_per_layer);
    if (delay_units < nodes_per_layer) return {Direction::Up, delay_units};
    if (delay_units == nodes_per_layer) return {Direction::Horizontal, nodes_per_layer};
    return {Direction::Down, 2 * nodes_per_layer - delay_units};
}

}  // namespace ddenet
