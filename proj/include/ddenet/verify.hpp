#pragma once

// Verification harness: DDE-versus-network equivalence, the map-limit and small-theta sweeps,
// history independence, and single-delay topology checks. Every randomized check is driven by
// an explicit seed so reports are reproducible.

#include "ddenet/dde_sim.hpp"
#include "ddenet/error.hpp"
#include "ddenet/format.hpp"
#include "ddenet/modulation.hpp"
#include "ddenet/time_grid.hpp"
#include "ddenet/unfolded_net.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace ddenet {

// ---------------------------------------------------------------------------------------------
// Reports

struct EquivalenceReport {
    double max_abs_error = 0.0;
    double max_rel_error = 0.0;
    NodeIndex argmax{};
    double tolerance = 0.0;
    bool pass = true;
    std::uint64_t seed = 0;
};

/// Below this magnitude the relative error falls back to the absolute error.
inline constexpr double kRelativeScaleFloor = 1e-8;

inline EquivalenceReport compare_grids(const NodeGrid& lhs, const NodeGrid& rhs, double tolerance, std::uint64_t seed = 0)
{
    if (lhs.segments() != rhs.segments() || lhs.nodes() != rhs.nodes())
        throw DimensionError("node grids differ in shape");
    EquivalenceReport r;
    r.tolerance = tolerance;
    r.seed = seed;
    for (std::size_t l = 1; l <= lhs.segments(); ++l) {
        for (std::size_t n = 1; n <= lhs.nodes(); ++n) {
            const double a = lhs(l, n), b = rhs(l, n);
            const double err = std::abs(a - b);
            const double scale = std::max(std::abs(a), std::abs(b));
            const double rel = scale < kRelativeScaleFloor ? err : err / scale;
            r.max_abs_error = std::max(r.max_abs_error, err);
            if (rel > r.max_rel_error) {
                r.max_rel_error = rel;
                r.argmax = {l, n};
            }
        }
    }
    r.pass = r.max_rel_error <= tolerance;
    return r;
}

/// Bitwise comparison; pass iff every node (and x0) has the identical bit pattern.
inline EquivalenceReport compare_bitwise(const NodeGrid& lhs, const NodeGrid& rhs, std::uint64_t seed = 0)
{
    EquivalenceReport r = compare_grids(lhs, rhs, 0.0, seed);
    bool identical = std::bit_cast<std::uint64_t>(lhs.x0) == std::bit_cast<std::uint64_t>(rhs.x0);
    for (Eigen::Index i = 0; i < lhs.values.size() && identical; ++i)
        identical = std::bit_cast<std::uint64_t>(lhs.values.data()[i]) == std::bit_cast<std::uint64_t>(rhs.values.data()[i]);
    r.pass = identical;
    return r;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;  ///< max |y - (slope x + intercept)|
    double range = 0.0;         ///< max y - min y
};

/// Ordinary least squares on at least four points.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) throw DimensionError("fit_line: x and y sizes differ");
    if (x.size() < 4) throw DomainError("fit_line: need at least 4 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("fit_line: x values are all equal");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    fit.range = *hi - *lo;
    for (std::size_t i = 0; i < x.size(); ++i)
        fit.max_residual = std::max(fit.max_residual, std::abs(y[i] - (fit.slope * x[i] + fit.intercept)));
    return fit;
}

struct SweepPoint {
    double parameter = 0.0;
    double error = 0.0;
    bool exact = false;  ///< error == 0, excluded from the fit
};

struct SweepReport {
    std::string parameter;
    std::vector<SweepPoint> points;
    std::optional<LineFit> fit;  ///< empty when fewer than four inexact points remain
    double expected = 0.0;       ///< slope or order the sweep is checked against
    bool all_exact = false;
    bool pass = false;
    std::size_t reference_substeps = 0;  ///< convergence sweeps only
    double reference_self_difference = 0.0;

    /// Residual as a fraction of the fitted log-error range.
    double residual_fraction() const
    {
        if (!fit || fit->range == 0.0) return 0.0;
        return fit->max_residual / fit->range;
    }
};

/// Maximum fraction of the log-error range a fit residual may reach.
inline constexpr double kMaxResidualFraction = 0.2;

// ---------------------------------------------------------------------------------------------
// Seeded random configurations

/// Deterministic uniform reals from the raw 64-bit engine output (library distributions are
/// implementation-defined).
class SeededRandom {
public:
    explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Integer in [lo, hi].
    std::size_t index(std::size_t lo, std::size_t hi)
    {
        const std::uint64_t span = hi - lo + 1;
        return lo + static_cast<std::size_t>(engine_() % span);
    }

    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols, double scale)
    {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * uniform(-1.0, 1.0);
        return m;
    }

private:
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
};

/// D distinct delays drawn from [1, 2N-1], sorted.
inline DelaySet random_delay_set(SeededRandom& rng, std::size_t nodes, std::size_t count)
{
    const std::size_t available = 2 * nodes - 1;
    count = std::clamp<std::size_t>(count, 1, available);
    std::vector<std::size_t> pool(available);
    for (std::size_t i = 0; i < available; ++i) pool[i] = i + 1;
    for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[rng.index(i, available - 1)]);
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return DelaySet(std::move(pool));
}

/// Weight block realizable under `delays`: legal positions U[-1,1]/sqrt(N), plus an optional bias column.
inline Eigen::MatrixXd random_realizable_weights(SeededRandom& rng, const DelaySet& delays, std::size_t nodes,
                                                 bool bias_column)
{
    const double scale = 1.0 / std::sqrt(static_cast<double>(nodes));
    ModulationTable table = ModulationTable::Zero(static_cast<Eigen::Index>(delays.size()), static_cast<Eigen::Index>(nodes));
    for (std::size_t d = 0; d < delays.size(); ++d)
        for (std::size_t n = 1; n <= nodes; ++n)
            if (legal_position(n, delays[d], nodes))
                table(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n - 1)) = scale * rng.uniform(-1.0, 1.0);
    if (!bias_column) return assemble_from_table(table, delays, nodes);
    std::vector<double> bias(nodes);
    for (auto& b : bias) b = scale * rng.uniform(-1.0, 1.0);
    return assemble_from_table(table, delays, nodes, std::span<const double>(bias), true);
}

struct RandomCaseLimits {
    std::size_t max_nodes = 16;
    std::size_t max_segments = 5;
    std::size_t inputs = 3;   ///< M
    std::size_t outputs = 2;  ///< P
};

/// A single weight perturbation applied to the network side of an equivalence check.
struct Corruption {
    std::size_t segment = 2;  ///< hidden layer l >= 2 (ignored for recurrent networks)
    std::size_t row = 1;      ///< 1-based n
    std::size_t column = 1;   ///< 1-based j
    double delta = 1e-6;
};

struct FeedForwardCase {
    NetworkSpec spec;
    DelaySet delays;
    Eigen::VectorXd input;  ///< u including the trailing 1
    std::uint64_t seed = 0;
    std::optional<Corruption> corruption;
};

struct RecurrentCase {
    RecurrentNetwork net;
    Eigen::MatrixXd inputs;  ///< K x (M+1)
    std::uint64_t seed = 0;
    std::optional<Corruption> corruption;
};

inline FeedForwardCase random_feed_forward_case(std::uint64_t seed, const RandomCaseLimits& limits = {},
                                                const SemilinearParams& params = {})
{
    SeededRandom rng(seed);
    const std::size_t N = rng.index(1, limits.max_nodes);
    const std::size_t L = rng.index(1, limits.max_segments);
    const std::size_t D = rng.index(1, 2 * N - 1);
    const double clock_cycle = rng.uniform(0.5, 2.0);
    FeedForwardCase c{NetworkSpec{TimeGrid(clock_cycle, N, L), {}, {}, {}, Activation::tanh(), Activation::identity(),
                                  Activation::identity(), params, rng.uniform(-0.5, 0.5)},
                      random_delay_set(rng, N, D), {}, seed, std::nullopt};
    const auto M = static_cast<Eigen::Index>(limits.inputs);
    c.spec.input_weights = rng.matrix(static_cast<Eigen::Index>(N), M + 1, 1.0);
    for (std::size_t l = 2; l <= L; ++l) c.spec.hidden_weights.push_back(random_realizable_weights(rng, c.delays, N, true));
    c.spec.output_weights = rng.matrix(static_cast<Eigen::Index>(limits.outputs), static_cast<Eigen::Index>(N) + 1, 1.0);
    Eigen::VectorXd u(M);
    for (Eigen::Index m = 0; m < M; ++m) u(m) = rng.uniform(-1.0, 1.0);
    c.input = with_bias_entry(u);
    return c;
}

/// Explicit-size variant used by fixed-shape checks.
inline FeedForwardCase random_feed_forward_case(std::uint64_t seed, std::size_t nodes, std::size_t layers,
                                                std::size_t delay_count, const SemilinearParams& params = {})
{
    FeedForwardCase c = random_feed_forward_case(seed, RandomCaseLimits{}, params);
    SeededRandom rng(seed ^ 0x9e3779b97f4a7c15ULL);
    c.spec.grid = TimeGrid(c.spec.grid.clock_cycle(), nodes, layers);
    c.delays = random_delay_set(rng, nodes, delay_count);
    c.spec.input_weights = rng.matrix(static_cast<Eigen::Index>(nodes), c.spec.input_weights.cols(), 1.0);
    c.spec.hidden_weights.clear();
    for (std::size_t l = 2; l <= layers; ++l)
        c.spec.hidden_weights.push_back(random_realizable_weights(rng, c.delays, nodes, true));
    c.spec.output_weights = rng.matrix(c.spec.output_weights.rows(), static_cast<Eigen::Index>(nodes) + 1, 1.0);
    return c;
}

/// Random recurrent network. With `full_delays` the internal matrix is dense.
inline RecurrentCase random_recurrent_case(std::uint64_t seed, std::size_t nodes, std::size_t steps, bool full_delays,
                                           std::size_t inputs = 2)
{
    SeededRandom rng(seed);
    const DelaySet delays = full_delays ? full_delay_set(nodes) : random_delay_set(rng, nodes, rng.index(1, 2 * nodes - 1));
    RecurrentCase c{RecurrentNetwork{TimeGrid(rng.uniform(0.5, 2.0), nodes, steps), delays,
                                     random_realizable_weights(rng, delays, nodes, false),
                                     rng.matrix(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(inputs) + 1, 1.0),
                                     Activation::tanh(), rng.uniform(-0.5, 0.5)},
                    Eigen::MatrixXd(), seed, std::nullopt};
    c.inputs = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(inputs) + 1);
    for (Eigen::Index k = 0; k < c.inputs.rows(); ++k)
        for (Eigen::Index m = 0; m < static_cast<Eigen::Index>(inputs); ++m) c.inputs(k, m) = rng.uniform(-1.0, 1.0);
    return c;
}

// ---------------------------------------------------------------------------------------------
// Equivalence

/// Default tolerance of the DDE-versus-network comparison.
inline constexpr double kEquivalenceTolerance = 1e-12;

enum class Scheme { General, Semilinear, MapLimit };

inline const char* to_string(Scheme s)
{
    switch (s) {
    case Scheme::General: return "general";
    case Scheme::Semilinear: return "semilinear";
    case Scheme::MapLimit: return "maplimit";
    }
    return "?";
}

namespace detail {

inline NetworkSpec corrupted(const NetworkSpec& spec, const std::optional<Corruption>& c)
{
    NetworkSpec out = spec;
    if (!c) return out;
    if (c->segment < 2 || c->segment > out.layers()) throw DomainError("corruption targets a missing layer");
    out.hidden_weights[c->segment - 2](static_cast<Eigen::Index>(c->row - 1), static_cast<Eigen::Index>(c->column - 1)) +=
        c->delta;
    return out;
}

}  // namespace detail

/// Runs the DDE integrator on the compiled modulation profile and the network evaluator on the
/// (possibly corrupted) weights, and compares every node.
inline EquivalenceReport check_dde_vs_network(const FeedForwardCase& c, Scheme scheme, const GeneralRHS& rhs = {},
                                              double tolerance = kEquivalenceTolerance)
{
    const NetworkSpec& spec = c.spec;
    spec.check();
    const CompiledNetwork dde_side = compile_feed_forward(spec.hidden_weights, c.delays, spec.grid);
    const NetworkSpec net_spec = detail::corrupted(spec, c.corruption);
    const History hist{spec.x0, {}};
    switch (scheme) {
    case Scheme::General: {
        if (!rhs.f) throw ConfigError("general scheme needs a right-hand side");
        const NodeGrid dde = integrate_general(rhs, general_drive(spec, c.input), dde_side.profile, c.delays, spec.grid, hist);
        const CompiledNetwork net_side = compile_feed_forward(net_spec.hidden_weights, c.delays, spec.grid);
        const NodeGrid net = forward_general(rhs, net_spec, net_side.profile, c.delays, c.input);
        return compare_grids(dde, net, tolerance, c.seed);
    }
    case Scheme::Semilinear: {
        const NodeGrid dde = integrate_semilinear(spec.semilinear_params(), semilinear_drive(spec, c.input),
                                                  dde_side.profile, c.delays, spec.grid, hist);
        return compare_grids(dde, forward_semilinear(net_spec, c.input).states, tolerance, c.seed);
    }
    case Scheme::MapLimit: break;
    }
    throw ConfigError("the map limit has no DDE counterpart to compare against");
}

inline EquivalenceReport check_dde_vs_network(const RecurrentCase& c, Scheme scheme, const SemilinearParams& params = {},
                                              const GeneralRHS& rhs = {}, double tolerance = kEquivalenceTolerance)
{
    const ModulationProfile profile = compile_recurrent(c.net.weights, c.net.delays, c.net.grid);
    const DriveSignal drive = recurrent_drive(c.net, c.inputs);
    RecurrentNetwork net = c.net;
    if (c.corruption)
        net.weights(static_cast<Eigen::Index>(c.corruption->row - 1), static_cast<Eigen::Index>(c.corruption->column - 1)) +=
            c.corruption->delta;
    const History hist{c.net.x0, {}};
    switch (scheme) {
    case Scheme::General: {
        if (!rhs.f) throw ConfigError("general scheme needs a right-hand side");
        const NodeGrid dde = integrate_general(rhs, drive, profile, c.net.delays, c.net.grid, hist);
        return compare_grids(dde, forward_recurrent(net, c.inputs, rhs), tolerance, c.seed);
    }
    case Scheme::Semilinear: {
        const NodeGrid dde = integrate_semilinear(params, drive, profile, c.net.delays, c.net.grid, hist);
        return compare_grids(dde, forward_recurrent(net, c.inputs, params), tolerance, c.seed);
    }
    case Scheme::MapLimit: break;
    }
    throw ConfigError("the map limit has no recurrent counterpart");
}

// ---------------------------------------------------------------------------------------------
// Map limit

/// Relative tolerance on the fitted slope against -alpha.
inline constexpr double kMapLimitSlopeTolerance = 0.10;

/// Max node difference between the semilinear maps and the map limit at node distance theta.
inline double map_limit_error(const NetworkSpec& base, const Eigen::VectorXd& u, double theta)
{
    NetworkSpec spec = base;
    spec.grid = TimeGrid(theta * static_cast<double>(base.nodes()), base.nodes(), base.layers());
    const ForwardResult semi = forward_semilinear(spec, u);
    const ForwardResult limit = forward_map_limit(spec, u);
    return (semi.states.values - limit.states.values).cwiseAbs().maxCoeff();
}

/// Fits log(error) against theta; the expected slope is -alpha.
inline SweepReport map_limit_sweep(const NetworkSpec& spec, const Eigen::VectorXd& u, const std::vector<double>& thetas)
{
    const double alpha = spec.semilinear_params().alpha;
    if (thetas.size() < 4) throw DomainError("map-limit sweep needs at least 4 theta values");
    for (double t : thetas)
        if (!(t > 1.0 / alpha)) throw DomainError("map-limit sweep needs theta > 1/alpha");

    SweepReport report;
    report.parameter = "theta";
    report.expected = -alpha;
    std::vector<double> xs, ys;
    for (double theta : thetas) {
        const double err = map_limit_error(spec, u, theta);
        report.points.push_back({theta, err, err == 0.0});
        if (err > 0.0) {
            xs.push_back(theta);
            ys.push_back(std::log(err));
        }
    }
    report.all_exact = xs.empty();
    if (xs.size() >= 4) report.fit = fit_line(xs, ys);
    report.pass = report.all_exact
                  || (report.fit && std::abs(report.fit->slope - report.expected) <= kMapLimitSlopeTolerance * alpha
                      && report.residual_fraction() < kMaxResidualFraction);
    return report;
}

// ---------------------------------------------------------------------------------------------
// Small-theta convergence

/// Minimum accepted convergence order of the exact-step scheme.
inline constexpr double kMinConvergenceOrder = 0.9;
/// Self-difference the reference must reach between m and 2m substeps.
inline constexpr double kReferenceCertification = 1e-10;
/// Errors at or below this level count as exact.
inline constexpr double kExactErrorFloor = 1e-13;

/// Fixed-T semilinear feed-forward problem with drive and modulations given in absolute time.
/// Delays are fractions of T; each N in a sweep must make every delay a whole number of nodes.
struct ConvergenceProblem {
    double clock_cycle = 1.0;
    std::size_t segments = 3;
    SemilinearParams params;
    double x0 = 0.0;
    std::vector<double> delays_in_cycles;
    std::function<double(double)> drive;
    std::vector<std::function<double(double)>> modulation;  ///< ungated M_d(t)
};

namespace detail {

/// Whether delay tau may act at time t: not on the first segment, and only when t - tau
/// falls in the previous segment (right-closed intervals).
inline bool modulation_gate(double t, double tau, double clock_cycle)
{
    const double segment = std::ceil(t / clock_cycle);  // t in ((segment-1)T, segment T]
    if (segment < 2.0) return false;
    const double origin = t - tau;
    return origin > (segment - 2.0) * clock_cycle && origin <= (segment - 1.0) * clock_cycle;
}

inline std::size_t delay_units_for(double delay_in_cycles, std::size_t nodes)
{
    const double units = delay_in_cycles * static_cast<double>(nodes);
    const double nearest = std::round(units);
    if (std::abs(units - nearest) > 1e-9 * std::max(1.0, units) || nearest < 1.0)
        throw DomainError("delay is not a whole number of nodes for N = " + std::to_string(nodes));
    return static_cast<std::size_t>(nearest);
}

}  // namespace detail

/// Gated continuous-time version of the problem, consumed by the reference integrator.
inline ContinuousProblem continuous_form(const ConvergenceProblem& p)
{
    ContinuousProblem c;
    c.params = p.params;
    c.x0 = p.x0;
    c.drive = p.drive;
    for (std::size_t d = 0; d < p.delays_in_cycles.size(); ++d) {
        const double tau = p.delays_in_cycles[d] * p.clock_cycle;
        c.delays.push_back(tau);
        c.modulation.push_back([m = p.modulation.at(d), tau, T = p.clock_cycle](double t) {
            return detail::modulation_gate(t, tau, T) ? m(t) : 0.0;
        });
    }
    return c;
}

/// Theta-step discretization of the problem on N nodes per cycle: drive and modulation are
/// sampled at the right endpoint of every sub-interval, forced zeros applied.
struct Discretization {
    TimeGrid grid;
    DelaySet delays;
    ModulationProfile profile;
    DriveSignal drive;
};

inline Discretization discretize(const ConvergenceProblem& p, std::size_t nodes)
{
    const TimeGrid grid(p.clock_cycle, nodes, p.segments);
    std::vector<std::size_t> units;
    for (double c : p.delays_in_cycles) units.push_back(detail::delay_units_for(c, nodes));
    DelaySet delays(std::move(units));
    delays.check(nodes);

    ModulationProfile profile = ModulationProfile::zeros(Mode::FeedForward, delays.size(), nodes, p.segments);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(p.segments), static_cast<Eigen::Index>(nodes));
    for (std::size_t l = 1; l <= p.segments; ++l) {
        for (std::size_t n = 1; n <= nodes; ++n) {
            const double t = node_time(grid, {l, n});
            z(static_cast<Eigen::Index>(l - 1), static_cast<Eigen::Index>(n - 1)) = p.drive(t);
            if (l == 1) continue;
            for (std::size_t d = 0; d < delays.size(); ++d)
                if (legal_position(n, delays[d], nodes))
                    profile.table(l - 2)(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n - 1)) = p.modulation.at(d)(t);
        }
    }
    DriveSignal drive = DriveSignal::feed_forward(z.row(0).transpose(), z.bottomRows(z.rows() - 1));
    return {grid, std::move(delays), std::move(profile), std::move(drive)};
}

struct CertifiedReference {
    NodeGrid samples;
    std::size_t substeps = 0;
    double self_difference = 0.0;
};

/// Doubles the substep count until ref(m) and ref(2m) agree to `threshold` at every sample.
inline CertifiedReference certify_reference(const ContinuousProblem& problem, const TimeGrid& samples,
                                            std::size_t initial_substeps = 16, std::size_t max_substeps = 1u << 16,
                                            double threshold = kReferenceCertification)
{
    std::size_t m = std::max<std::size_t>(initial_substeps, 1);
    NodeGrid coarse = integrate_reference(problem, samples, m);
    double diff = HUGE_VAL;
    while (2 * m <= max_substeps) {
        NodeGrid fine = integrate_reference(problem, samples, 2 * m);
        diff = (fine.values - coarse.values).cwiseAbs().maxCoeff();
        m *= 2;
        coarse = std::move(fine);
        if (diff <= threshold) return {std::move(coarse), m, diff};
    }
    throw OracleFailure("reference integrator self-difference " + format_real(diff) + " above "
                        + format_real(threshold) + " at " + std::to_string(m) + " substeps");
}

/// Error of the exact-step scheme against the certified reference, at the node times of the
/// coarsest grid, for each N; fits log(error) against log(theta). Expected order >= 0.9.
inline SweepReport theta_convergence_sweep(const ConvergenceProblem& p, std::vector<std::size_t> node_counts,
                                           std::size_t initial_substeps = 16)
{
    if (node_counts.size() < 4) throw DomainError("convergence sweep needs at least 4 values of N");
    std::sort(node_counts.begin(), node_counts.end());
    const std::size_t coarsest = node_counts.front(), finest = node_counts.back();
    for (std::size_t n : node_counts)
        if (n % coarsest != 0 || finest % n != 0) throw DomainError("convergence sweep needs nested grids (e.g. doubling N)");

    const TimeGrid fine_grid(p.clock_cycle, finest, p.segments);
    const CertifiedReference ref = certify_reference(continuous_form(p), fine_grid, initial_substeps);

    SweepReport report;
    report.parameter = "theta";
    report.expected = kMinConvergenceOrder;
    report.reference_substeps = ref.substeps;
    report.reference_self_difference = ref.self_difference;
    std::vector<double> xs, ys;
    for (std::size_t nodes : node_counts) {
        const Discretization disc = discretize(p, nodes);
        const NodeGrid semi = integrate_semilinear(p.params, disc.drive, disc.profile, disc.delays, disc.grid, History{p.x0, {}});
        const std::size_t stride = nodes / coarsest, ref_stride = finest / coarsest;
        double err = 0.0;
        for (std::size_t u = 1; u <= coarsest * p.segments; ++u) {
            const NodeIndex a = disc.grid.index_of_unit(static_cast<std::int64_t>(u * stride));
            const NodeIndex b = fine_grid.index_of_unit(static_cast<std::int64_t>(u * ref_stride));
            err = std::max(err, std::abs(semi.at(a) - ref.samples.at(b)));
        }
        const bool exact = err <= kExactErrorFloor;
        const double theta = disc.grid.theta();
        report.points.push_back({theta, err, exact});
        if (!exact) {
            xs.push_back(std::log(theta));
            ys.push_back(std::log(err));
        }
    }
    report.all_exact = xs.empty();
    if (xs.size() >= 4) report.fit = fit_line(xs, ys);
    report.pass = report.all_exact
                  || (report.fit && report.fit->slope >= kMinConvergenceOrder
                      && report.residual_fraction() < kMaxResidualFraction);
    return report;
}

// ---------------------------------------------------------------------------------------------
// History independence

/// Integrates the same configuration under two histories; passes iff the node grids are
/// bitwise identical.
inline EquivalenceReport history_independence_check(const SemilinearParams& params, const DriveSignal& drive,
                                                    const ModulationProfile& profile, const DelaySet& delays,
                                                    const TimeGrid& grid, const History& first, const History& second,
                                                    std::uint64_t seed = 0)
{
    const NodeGrid a = integrate_semilinear(params, drive, profile, delays, grid, first);
    const NodeGrid b = integrate_semilinear(params, drive, profile, delays, grid, second);
    return compare_bitwise(a, b, seed);
}

/// History table of `length` values U[-1, 1] with the given x0.
inline History random_history(std::uint64_t seed, double x0, std::size_t length)
{
    SeededRandom rng(seed);
    History h{x0, std::vector<double>(length)};
    for (auto& v : h.table) v = rng.uniform(-1.0, 1.0);
    return h;
}

// ---------------------------------------------------------------------------------------------
// Topology

struct TopologyEntry {
    std::size_t delay_units = 0;
    TopologyPattern predicted{};
    std::size_t observed_count = 0;
    bool on_predicted_diagonal = true;  ///< all nonzeros at offset j - n = N - n_d
    bool pass = false;
};

struct TopologyReport {
    std::vector<TopologyEntry> entries;
    std::size_t combined_nonzeros = 0;  ///< nnz of the superposed matrix over all delays
    std::size_t combined_expected = 0;  ///< sum of predicted counts
    bool pass = false;
};

/// Assembles each delay alone (every step height 1) and compares the nonzero positions with
/// the predicted pattern; then checks the superposition of all delays.
inline TopologyReport topology_check(const DelaySet& delays, const TimeGrid& grid)
{
    const std::size_t N = grid.nodes();
    delays.check(N);
    TopologyReport report;
    report.pass = true;
    const ModulationTable ones_row = ModulationTable::Ones(1, static_cast<Eigen::Index>(N));
    for (std::size_t d = 0; d < delays.size(); ++d) {
        const std::size_t nd = delays[d];
        TopologyEntry e;
        e.delay_units = nd;
        e.predicted = topology_pattern(nd, N);
        const Eigen::MatrixXd w = assemble_from_table(ones_row, DelaySet({nd}), N);
        const auto offset = static_cast<std::int64_t>(N) - static_cast<std::int64_t>(nd);
        for (Eigen::Index n = 0; n < w.rows(); ++n)
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                if (w(n, j) != 0.0) {
                    ++e.observed_count;
                    if (j - n != offset) e.on_predicted_diagonal = false;
                }
        const Direction observed_direction = offset > 0 ? Direction::Up : (offset == 0 ? Direction::Horizontal : Direction::Down);
        e.pass = e.on_predicted_diagonal && e.observed_count == e.predicted.count && observed_direction == e.predicted.direction;
        report.pass = report.pass && e.pass;
        report.combined_expected += e.predicted.count;
        report.entries.push_back(e);
    }
    const Eigen::MatrixXd combined = assemble_from_table(
        ModulationTable::Ones(static_cast<Eigen::Index>(delays.size()), static_cast<Eigen::Index>(N)), delays, N);
    report.combined_nonzeros = static_cast<std::size_t>((combined.array() != 0.0).count());
    report.pass = report.pass && report.combined_nonzeros == report.combined_expected;
    return report;
}

// ---------------------------------------------------------------------------------------------
// Key-value summaries

using Summary = std::vector<std::pair<std::string, std::string>>;

inline Summary summarize(const EquivalenceReport& r)
{
    return {{"max_abs_error", format_real(r.max_abs_error)},
            {"max_rel_error", format_real(r.max_rel_error)},
            {"argmax_segment", std::to_string(r.argmax.segment)},
            {"argmax_node", std::to_string(r.argmax.node)},
            {"tolerance", format_real(r.tolerance)},
            {"seed", std::to_string(r.seed)},
            {"pass", r.pass ? "true" : "false"}};
}

inline Summary summarize(const SweepReport& r)
{
    Summary s{{"parameter", r.parameter}, {"points", std::to_string(r.points.size())}, {"expected", format_real(r.expected)}};
    if (r.fit) {
        s.emplace_back("slope", format_real(r.fit->slope));
        s.emplace_back("intercept", format_real(r.fit->intercept));
        s.emplace_back("max_residual", format_real(r.fit->max_residual));
        s.emplace_back("residual_fraction", format_real(r.residual_fraction()));
    }
    if (r.reference_substeps > 0) {
        s.emplace_back("reference_substeps", std::to_string(r.reference_substeps));
        s.emplace_back("reference_self_difference", format_real(r.reference_self_difference));
    }
    s.emplace_back("all_exact", r.all_exact ? "true" : "false");
    s.emplace_back("pass", r.pass ? "true" : "false");
    return s;
}

inline Summary summarize(const TopologyReport& r)
{
    Summary s{{"delays", std::to_string(r.entries.size())},
              {"combined_nonzeros", std::to_string(r.combined_nonzeros)},
              {"combined_expected", std::to_string(r.combined_expected)}};
    for (const auto& e : r.entries)
        s.emplace_back("delay_" + std::to_string(e.delay_units),
                       std::string(to_string(e.predicted.direction)) + " " + std::to_string(e.predicted.count) + " observed "
                           + std::to_string(e.observed_count) + (e.pass ? " ok" : " FAIL"));
    s.emplace_back("pass", r.pass ? "true" : "false");
    return s;
}

}  // namespace ddenet
