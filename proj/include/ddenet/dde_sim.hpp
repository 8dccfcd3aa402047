#pragma once

// Integrators for the scalar modulated delay system
//
//     x'(t) = f(x(t), z(t), M_1(t) x(t - tau_1), ..., M_D(t) x(t - tau_D))
//
// sampled on the theta grid, plus the semilinear family x' = -alpha x + f(a(t)) and a
// fine-step reference integrator for that family.

#include "ddenet/activation.hpp"
#include "ddenet/error.hpp"
#include "ddenet/modulation.hpp"
#include "ddenet/time_grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ddenet {

/// Nodes leaving this envelope abort the run.
inline constexpr double kBlowupLimit = 1e12;

/// Right-hand side f(x, z, s_1..s_D) with s_d = M_d(t) x(t - tau_d).
struct GeneralRHS {
    using Function = std::function<double(double x, double z, std::span<const double> s)>;

    std::string name;
    Function f;
    std::optional<std::size_t> arity;  ///< required D, if the form fixes one

    double operator()(double x, double z, std::span<const double> s) const { return f(x, z, s); }

    static GeneralRHS zero()
    {
        return {"zero", [](double, double, std::span<const double>) { return 0.0; }, std::nullopt};
    }

    /// -x + z + sum_d s_d
    static GeneralRHS linear_decay()
    {
        return {"linear_decay",
                [](double x, double z, std::span<const double> s) {
                    double acc = -x + z;
                    for (double v : s) acc += v;
                    return acc;
                },
                std::nullopt};
    }

    /// sum_d s_d
    static GeneralRHS slots_only()
    {
        return {"slots_only",
                [](double, double, std::span<const double> s) {
                    double acc = 0.0;
                    for (double v : s) acc += v;
                    return acc;
                },
                std::nullopt};
    }

    /// -x + tanh(z) + sum_d s_d / (1 + s_d^2): nonlinear in every slot separately.
    static GeneralRHS saturating()
    {
        return {"saturating",
                [](double x, double z, std::span<const double> s) {
                    double acc = -x + std::tanh(z);
                    for (double v : s) acc += v / (1.0 + v * v);
                    return acc;
                },
                std::nullopt};
    }
};

struct SemilinearParams {
    double alpha = 1.0;
    Activation nonlinearity = Activation::sine();

    void check() const
    {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("semilinear alpha must be positive");
        if (!nonlinearity.elementwise()) throw DomainError("semilinear nonlinearity must be element-wise");
    }

    /// e^{-alpha h}
    double decay(double h) const { return std::exp(-alpha * h); }
    /// alpha^{-1} (1 - e^{-alpha h}), computed without cancellation for small alpha h.
    double gain(double h) const { return -std::expm1(-alpha * h) / alpha; }

    /// The same system as a GeneralRHS: -alpha x + f(z + sum_d s_d).
    GeneralRHS as_rhs() const
    {
        return {"semilinear",
                [a = alpha, f = nonlinearity](double x, double z, std::span<const double> s) {
                    double act = z;
                    for (double v : s) act += v;
                    return -a * x + f(act);
                },
                std::nullopt};
    }
};

/// x(0) and optional values x(-k theta) = table[k-1].
struct History {
    double x0 = 0.0;
    std::vector<double> table;

    /// Value at grid offset `offset` <= 0.
    double at(std::int64_t offset) const
    {
        if (offset == 0) return x0;
        const auto k = static_cast<std::size_t>(-offset);
        if (offset > 0 || k > table.size())
            throw HistoryRequired("history value x(" + std::to_string(offset)
                                  + " theta) needed by a nonzero-modulated delay term but not supplied");
        return table[k - 1];
    }
};

/// Node values x^l_n (row l-1, column n-1) plus the initial value.
struct NodeGrid {
    Eigen::MatrixXd values;
    double x0 = 0.0;

    NodeGrid() = default;
    NodeGrid(std::size_t segments, std::size_t nodes, double initial)
        : values(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(segments), static_cast<Eigen::Index>(nodes))),
          x0(initial)
    {}

    std::size_t segments() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t nodes() const noexcept { return static_cast<std::size_t>(values.cols()); }

    double& operator()(std::size_t segment, std::size_t node)
    {
        return values(static_cast<Eigen::Index>(segment - 1), static_cast<Eigen::Index>(node - 1));
    }
    double operator()(std::size_t segment, std::size_t node) const
    {
        return values(static_cast<Eigen::Index>(segment - 1), static_cast<Eigen::Index>(node - 1));
    }
    double at(NodeIndex idx) const { return (*this)(idx.segment, idx.node); }

    /// x^l_{n-1} with x^l_0 = x^{l-1}_N and x^1_0 = x0.
    double predecessor(std::size_t segment, std::size_t node) const
    {
        if (node > 1) return (*this)(segment, node - 1);
        if (segment > 1) return (*this)(segment - 1, nodes());
        return x0;
    }

    Eigen::VectorXd segment_vector(std::size_t segment) const
    {
        return values.row(static_cast<Eigen::Index>(segment - 1)).transpose();
    }
};

namespace detail {

inline void guard_value(double x, std::size_t segment, std::size_t node)
{
    if (!std::isfinite(x) || std::abs(x) > kBlowupLimit)
        throw NumericalBlowup("numerical blowup at node (" + std::to_string(segment) + ", " + std::to_string(node)
                                  + "): x = " + std::to_string(x),
                              segment, node);
}

inline void check_inputs(const DriveSignal& drive, const ModulationProfile& profile, const DelaySet& delays,
                         const TimeGrid& grid)
{
    delays.check(grid.nodes());
    if (drive.nodes() != grid.nodes() || drive.segments() < grid.segments())
        throw DimensionError("drive signal does not cover the grid");
    if (profile.table_count() > 0 && (profile.delay_count() != delays.size() || profile.nodes() != grid.nodes()))
        throw DimensionError("modulation profile shape does not match D x N");
    if (profile.mode() == Mode::FeedForward && grid.segments() > profile.spanned_segments())
        throw DimensionError("feed-forward profile covers fewer layers than the grid");
}

/// Shared node loop: gathers s_d = v * x(t - tau_d), skipping the fetch where v == 0, and
/// hands (x^l_{n-1}, z(t^l_n), s) to `step`.
template <class Step>
NodeGrid run_nodes(const DriveSignal& drive, const ModulationProfile& profile, const DelaySet& delays,
                   const TimeGrid& grid, const History& hist, Step&& step)
{
    check_inputs(drive, profile, delays, grid);
    NodeGrid out(grid.segments(), grid.nodes(), hist.x0);
    std::vector<double> slots(delays.size(), 0.0);
    for (std::size_t l = 1; l <= grid.segments(); ++l) {
        for (std::size_t n = 1; n <= grid.nodes(); ++n) {
            const NodeIndex idx{l, n};
            for (std::size_t d = 0; d < delays.size(); ++d) {
                const double v = profile.value(d, idx);
                if (v == 0.0) {
                    slots[d] = 0.0;
                    continue;
                }
                const SourceRef src = delayed_source(grid, idx, delays[d]);
                const double delayed = src.kind == SourceCase::History ? hist.at(src.history_offset) : out.at(src.source);
                slots[d] = v * delayed;
            }
            const double x = step(out.predecessor(l, n), drive.at(idx), std::span<const double>(slots));
            guard_value(x, l, n);
            out(l, n) = x;
        }
    }
    return out;
}

}  // namespace detail

/// Mixed forward/backward Euler: x^l_n = x^l_{n-1} + theta f(x^l_{n-1}, z(t^l_n), s(t^l_n)).
inline NodeGrid integrate_general(const GeneralRHS& rhs, const DriveSignal& drive, const ModulationProfile& profile,
                                  const DelaySet& delays, const TimeGrid& grid, const History& hist)
{
    if (rhs.arity && *rhs.arity != delays.size())
        throw DimensionError("right-hand side '" + rhs.name + "' expects " + std::to_string(*rhs.arity) + " delays");
    const double theta = grid.theta();
    return detail::run_nodes(drive, profile, delays, grid, hist,
                             [&](double prev, double z, std::span<const double> s) {
                                 return prev + theta * rhs(prev, z, s);
                             });
}

/// Exact step for piecewise-constant activation:
/// x^l_n = e^{-alpha theta} x^l_{n-1} + alpha^{-1}(1 - e^{-alpha theta}) f(z + sum_d s_d).
inline NodeGrid integrate_semilinear(const SemilinearParams& params, const DriveSignal& drive,
                                     const ModulationProfile& profile, const DelaySet& delays, const TimeGrid& grid,
                                     const History& hist)
{
    params.check();
    const double decay = params.decay(grid.theta());
    const double gain = params.gain(grid.theta());
    const Activation f = params.nonlinearity;
    return detail::run_nodes(drive, profile, delays, grid, hist,
                             [&](double prev, double z, std::span<const double> s) {
                                 double a = z;
                                 for (double v : s) a += v;
                                 return decay * prev + gain * f(a);
                             });
}

// ---------------------------------------------------------------------------------------------
// Reference integrator

/// Semilinear problem with drive and modulations given as functions of absolute time.
/// Delays are absolute (tau_d); any gating of M_d must be folded into the modulation functions.
struct ContinuousProblem {
    SemilinearParams params;
    double x0 = 0.0;
    std::vector<double> delays;
    std::function<double(double)> drive;
    std::vector<std::function<double(double)>> modulation;
};

namespace detail {

/// Two-point Gauss-Legendre abscissae on (0, 1).
inline constexpr double kGaussLo = 0.5 - 0.28867513459481288225;
inline constexpr double kGaussHi = 0.5 + 0.28867513459481288225;

/// (alpha h + expm1(-alpha h)) / alpha^2 = int_0^h s e^{-alpha (h - s)} ds
inline double ramp_weight(double alpha, double h)
{
    const double y = alpha * h;
    if (y < 1e-3) {
        // y^2/2 - y^3/6 + y^4/24 - y^5/120
        return h * h * (0.5 - y / 6.0 + y * y / 24.0 - y * y * y / 120.0);
    }
    return (y + std::expm1(-y)) / (alpha * alpha);
}

/// Fine-grid exponential integrator. Over each sub-step the forcing f(a(t)) is replaced by the
/// line through its values at the two interior Gauss points and integrated exactly, giving
/// second order for smooth forcing and exactness for forcing constant on the sub-step.
/// `activation(i, c, lookup)` returns a at time (i + c) h, reading delayed values through
/// `lookup(position)` where position is measured in fine steps (may be fractional or negative).
template <class ActivationAt, class EarlyValue>
NodeGrid reference_core(const SemilinearParams& params, const TimeGrid& grid, std::size_t substeps, double x0,
                        ActivationAt&& activation, EarlyValue&& early)
{
    params.check();
    if (substeps < 1) throw DomainError("reference integrator needs at least one substep");
    const double h = grid.theta() / static_cast<double>(substeps);
    const std::size_t steps = grid.node_count() * substeps;
    const double decay = params.decay(h);
    const double phi0 = params.gain(h);
    const double phi1 = ramp_weight(params.alpha, h);
    const Activation f = params.nonlinearity;

    std::vector<double> xs(steps + 1);
    xs[0] = x0;
    std::size_t current = 0;

    auto lookup = [&](double position) -> double {
        if (position < 0.0) return early(position);
        const double fl = std::floor(position);
        const auto i0 = static_cast<std::size_t>(fl);
        const double frac = position - fl;
        if (i0 >= current) {
            if (i0 == current && frac == 0.0) return xs[current];
            throw DomainError("reference integrator read a value from the future");
        }
        return xs[i0] + frac * (xs[i0 + 1] - xs[i0]);
    };

    for (std::size_t i = 0; i < steps; ++i) {
        current = i;
        const double g_lo = f(activation(i, kGaussLo, lookup));
        const double g_hi = f(activation(i, kGaussHi, lookup));
        const double slope = (g_hi - g_lo) / ((kGaussHi - kGaussLo) * h);
        const double start = g_lo - slope * kGaussLo * h;
        const double x = decay * xs[i] + phi0 * start + phi1 * slope;
        if (!std::isfinite(x) || std::abs(x) > kBlowupLimit) {
            const NodeIndex idx = grid.index_of_unit(static_cast<std::int64_t>(i / substeps) + 1);
            guard_value(x, idx.segment, idx.node);
        }
        xs[i + 1] = x;
    }

    NodeGrid out(grid.segments(), grid.nodes(), x0);
    for (std::size_t u = 1; u <= grid.node_count(); ++u) {
        const NodeIndex idx = grid.index_of_unit(static_cast<std::int64_t>(u));
        out(idx.segment, idx.node) = xs[u * substeps];
    }
    return out;
}

}  // namespace detail

/// Reference solution of x' = -alpha x + f(a(t)) for theta-step drive and modulation,
/// with sub-step h = theta / substeps, sampled at the node times.
inline NodeGrid integrate_reference(const SemilinearParams& params, const DriveSignal& drive,
                                    const ModulationProfile& profile, const DelaySet& delays, const TimeGrid& grid,
                                    const History& hist, std::size_t substeps)
{
    detail::check_inputs(drive, profile, delays, grid);
    const auto m = static_cast<double>(substeps);
    std::vector<double> lags(delays.size());
    for (std::size_t d = 0; d < delays.size(); ++d) lags[d] = static_cast<double>(delays[d]) * m;

    auto activation = [&](std::size_t i, double c, auto& lookup) {
        const NodeIndex idx = grid.index_of_unit(static_cast<std::int64_t>(i / substeps) + 1);
        double a = drive.at(idx);
        for (std::size_t d = 0; d < delays.size(); ++d) {
            const double v = profile.value(d, idx);
            if (v == 0.0) continue;
            a += v * lookup(static_cast<double>(i) + c - lags[d]);
        }
        return a;
    };
    // Before t = 0: linear interpolation of the theta-grid history table.
    auto early = [&](double position) {
        const double units = position / m;
        const double fl = std::floor(units);
        const double frac = units - fl;
        const auto lo = static_cast<std::int64_t>(fl);
        const double a = hist.at(lo);
        return frac == 0.0 ? a : a + frac * (hist.at(lo + 1) - a);
    };
    return detail::reference_core(params, grid, substeps, hist.x0, activation, early);
}

/// Reference solution of a continuous-time problem, sampled at the node times of `samples`
/// with sub-step h = theta / substeps. Every delay must be at least one sub-step.
inline NodeGrid integrate_reference(const ContinuousProblem& problem, const TimeGrid& samples, std::size_t substeps)
{
    if (problem.modulation.size() != problem.delays.size())
        throw DimensionError("continuous problem needs one modulation function per delay");
    if (!problem.drive) throw DimensionError("continuous problem has no drive function");
    const double h = samples.theta() / static_cast<double>(substeps);
    std::vector<double> lags(problem.delays.size());
    for (std::size_t d = 0; d < lags.size(); ++d) {
        double lag = problem.delays[d] / h;
        const double nearest = std::round(lag);
        if (std::abs(lag - nearest) <= 1e-9 * std::max(1.0, lag)) lag = nearest;
        if (!(lag >= 1.0)) throw DomainError("delay shorter than one reference sub-step");
        lags[d] = lag;
    }

    auto activation = [&](std::size_t i, double c, auto& lookup) {
        const double t = (static_cast<double>(i) + c) * h;
        double a = problem.drive(t);
        for (std::size_t d = 0; d < lags.size(); ++d) {
            const double v = problem.modulation[d](t);
            if (v == 0.0) continue;
            a += v * lookup(static_cast<double>(i) + c - lags[d]);
        }
        return a;
    };
    auto early = [](double) -> double {
        throw HistoryRequired("continuous problem reads before t = 0 with nonzero modulation");
    };
    return detail::reference_core(problem.params, samples, substeps, problem.x0, activation, early);
}

}  // namespace ddenet
