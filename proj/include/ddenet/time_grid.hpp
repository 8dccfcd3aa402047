#pragma once

// Temporal discretization: clock cycles of length T split into N sub-intervals of length
// theta = T/N. Node (l, n) sits at the right endpoint (l-1)T + n*theta of its sub-interval.
// All index arithmetic runs in integer grid units (multiples of theta); real times are
// produced only by node_time().

#include "ddenet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

namespace ddenet {

/// 1-based (segment, node) pair. Segment is a layer in feed-forward mode, a step in recurrent mode.
struct NodeIndex {
    std::size_t segment = 1;
    std::size_t node = 1;

    friend bool operator==(const NodeIndex&, const NodeIndex&) = default;
};

class TimeGrid {
public:
    TimeGrid(double clock_cycle, std::size_t nodes_per_layer, std::size_t segment_count)
        : clock_cycle_(clock_cycle), nodes_(nodes_per_layer), segments_(segment_count)
    {
        if (!(clock_cycle > 0.0) || !std::isfinite(clock_cycle))
            throw DomainError("TimeGrid: clock cycle must be positive and finite");
        if (nodes_per_layer < 1)
            throw DomainError("TimeGrid: nodes per layer must be >= 1");
        if (segment_count < 1)
            throw DomainError("TimeGrid: segment count must be >= 1");
        theta_ = clock_cycle_ / static_cast<double>(nodes_);
    }

    double clock_cycle() const noexcept { return clock_cycle_; }
    std::size_t nodes() const noexcept { return nodes_; }
    std::size_t segments() const noexcept { return segments_; }
    double theta() const noexcept { return theta_; }
    std::size_t node_count() const noexcept { return nodes_ * segments_; }

    bool contains(NodeIndex idx) const noexcept
    {
        return idx.segment >= 1 && idx.segment <= segments_ && idx.node >= 1 && idx.node <= nodes_;
    }

    void check(NodeIndex idx) const
    {
        if (!contains(idx))
            throw DomainError("node index (" + std::to_string(idx.segment) + ", "
                              + std::to_string(idx.node) + ") outside grid");
    }

    /// Grid units from t = 0: (l-1)N + n.
    std::int64_t unit(NodeIndex idx) const
    {
        check(idx);
        return static_cast<std::int64_t>((idx.segment - 1) * nodes_ + idx.node);
    }

    /// Inverse of unit() for units in [1, N * segments].
    NodeIndex index_of_unit(std::int64_t unit) const
    {
        if (unit < 1 || unit > static_cast<std::int64_t>(node_count()))
            throw DomainError("grid unit " + std::to_string(unit) + " outside grid");
        const auto u = static_cast<std::size_t>(unit - 1);
        return {u / nodes_ + 1, u % nodes_ + 1};
    }

    double time_of_unit(std::int64_t unit) const noexcept { return static_cast<double>(unit) * theta_; }

    double horizon() const noexcept { return time_of_unit(static_cast<std::int64_t>(node_count())); }

    /// Sub-interval ((u-1)theta, u*theta] containing t, as a grid unit. Right-closed: a time
    /// on a boundary belongs to the earlier sub-interval.
    std::int64_t unit_containing(double t) const
    {
        if (!(t > 0.0) || t > horizon() * (1.0 + 1e-15))
            throw DomainError("time " + std::to_string(t) + " outside simulated horizon");
        const double scaled = t / theta_;
        auto unit = static_cast<std::int64_t>(std::ceil(scaled));
        // Snap values within rounding of a boundary onto that boundary.
        const double nearest = std::round(scaled);
        if (std::abs(scaled - nearest) <= 1e-12 * std::max(1.0, std::abs(scaled)))
            unit = static_cast<std::int64_t>(nearest);
        if (unit < 1) unit = 1;
        if (unit > static_cast<std::int64_t>(node_count())) unit = static_cast<std::int64_t>(node_count());
        return unit;
    }

private:
    double clock_cycle_;
    std::size_t nodes_;
    std::size_t segments_;
    double theta_ = 0.0;
};

/// Absolute time (l-1)T + n*theta, evaluated as ((l-1)N + n) * theta.
inline double node_time(const TimeGrid& grid, NodeIndex idx)
{
    return grid.time_of_unit(grid.unit(idx));
}

enum class SourceCase { SameSegment, PreviousSegment, TwoBack, History };

inline const char* to_string(SourceCase c)
{
    switch (c) {
    case SourceCase::SameSegment: return "same-segment";
    case SourceCase::PreviousSegment: return "previous-segment";
    case SourceCase::TwoBack: return "two-back";
    case SourceCase::History: return "history";
    }
    return "?";
}

/// Where the delayed sample x(t_n^l - n_d theta) lives.
struct SourceRef {
    SourceCase kind = SourceCase::SameSegment;
    NodeIndex source{};              ///< valid unless kind == History
    std::int64_t history_offset = 0; ///< grid units <= 0, valid only for History (0 means x(0))
};

/// Which of the three delay-interval cases holds, ignoring the history override.
inline SourceCase delay_case(std::size_t node, std::size_t delay_units, std::size_t nodes_per_layer)
{
    if (delay_units < node) return SourceCase::SameSegment;
    if (delay_units < nodes_per_layer + node) return SourceCase::PreviousSegment;
    return SourceCase::TwoBack;
}

inline void check_delay_units(std::size_t delay_units, std::size_t nodes_per_layer)
{
    if (delay_units < 1 || delay_units >= 2 * nodes_per_layer)
        throw DomainError("delay of " + std::to_string(delay_units)
                          + " grid units outside (0, 2N) for N = " + std::to_string(nodes_per_layer));
}

inline SourceRef delayed_source(const TimeGrid& grid, NodeIndex idx, std::size_t delay_units)
{
    check_delay_units(delay_units, grid.nodes());
    const std::int64_t target = grid.unit(idx);
    const std::int64_t origin = target - static_cast<std::int64_t>(delay_units);
    SourceRef ref;
    if (origin <= 0) {
        ref.kind = SourceCase::History;
        ref.history_offset = origin;
        return ref;
    }
    ref.kind = delay_case(idx.node, delay_units, grid.nodes());
    ref.source = grid.index_of_unit(origin);
    return ref;
}

}  // namespace ddenet
