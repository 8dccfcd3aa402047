#pragma once

// Direct evaluation of the networks a modulated delay system unfolds into: feed-forward maps
// for the general and semilinear systems, the matrix form of a semilinear hidden layer, the
// large-theta map limit, the recurrent network, and input/output layers.

#include "ddenet/activation.hpp"
#include "ddenet/dde_sim.hpp"
#include "ddenet/error.hpp"
#include "ddenet/modulation.hpp"
#include "ddenet/time_grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ddenet {

/// Layer state x_1..x_N; the bias slot x_{N+1} = 1 is implicit.
using LayerState = Eigen::VectorXd;

struct NetworkSpec {
    TimeGrid grid;
    Eigen::MatrixXd input_weights;               ///< N x (M+1), last column multiplies u_{M+1} = 1
    std::vector<Eigen::MatrixXd> hidden_weights; ///< L-1 matrices, N x (N+1), last column = biases
    Eigen::MatrixXd output_weights;              ///< P x (N+1); P = 0 means no output layer
    Activation input_activation = Activation::identity();       ///< f^in, general scheme
    Activation first_layer_activation = Activation::identity(); ///< g, semilinear schemes
    Activation output_activation = Activation::identity();      ///< f^out
    std::optional<SemilinearParams> semilinear;
    double x0 = 0.0;

    std::size_t nodes() const noexcept { return grid.nodes(); }
    std::size_t layers() const noexcept { return grid.segments(); }

    void check() const
    {
        const auto N = static_cast<Eigen::Index>(nodes());
        if (input_weights.rows() != N || input_weights.cols() < 1)
            throw DimensionError("input weights must be N x (M+1)");
        if (hidden_weights.size() + 1 != layers())
            throw DimensionError("expected " + std::to_string(layers() - 1) + " hidden weight matrices, got "
                                 + std::to_string(hidden_weights.size()));
        for (const auto& w : hidden_weights)
            if (w.rows() != N || w.cols() != N + 1) throw DimensionError("hidden weight matrices must be N x (N+1)");
        if (output_weights.rows() > 0 && output_weights.cols() != N + 1)
            throw DimensionError("output weights must be P x (N+1)");
    }

    /// The embedded zero pattern of columns 1..N must agree across hidden layers.
    bool shares_sparsity_pattern() const
    {
        if (hidden_weights.empty()) return true;
        const auto N = static_cast<Eigen::Index>(nodes());
        const auto& first = hidden_weights.front();
        for (const auto& w : hidden_weights)
            for (Eigen::Index n = 0; n < N; ++n)
                for (Eigen::Index j = 0; j < N; ++j)
                    if ((w(n, j) == 0.0) != (first(n, j) == 0.0)) return false;
        return true;
    }

    const SemilinearParams& semilinear_params() const
    {
        if (!semilinear) throw ConfigError("network has no semilinear parameters");
        return *semilinear;
    }
};

struct ForwardResult {
    NodeGrid states;
    Eigen::VectorXd output;
};

namespace detail {

inline Eigen::VectorXd input_preactivation(const Eigen::MatrixXd& input_weights, const Eigen::VectorXd& u)
{
    if (u.size() != input_weights.cols())
        throw DimensionError("input vector has " + std::to_string(u.size()) + " entries, W^in expects "
                             + std::to_string(input_weights.cols()));
    if (u.size() == 0 || u(u.size() - 1) != 1.0) throw DimensionError("input vector must end with the fixed entry 1");
    return input_weights * u;
}

/// b_n + sum_j w_nj x_j using the N x (N+1) layout; j runs from N down to 1 so that nonzero
/// terms are accumulated in increasing-delay order.
inline double hidden_activation(const Eigen::MatrixXd& w, const Eigen::VectorXd& prev, Eigen::Index n, double start)
{
    double a = start;
    for (Eigen::Index j = prev.size() - 1; j >= 0; --j) {
        const double wj = w(n, j);
        if (wj != 0.0) a += wj * prev(j);
    }
    return a;
}

}  // namespace detail

/// u with the fixed trailing 1 appended.
inline Eigen::VectorXd with_bias_entry(const Eigen::VectorXd& values)
{
    Eigen::VectorXd u(values.size() + 1);
    u.head(values.size()) = values;
    u(values.size()) = 1.0;
    return u;
}

/// J = f^in(W^in u)
inline Eigen::VectorXd input_layer(const NetworkSpec& spec, const Eigen::VectorXd& u)
{
    if (!spec.input_activation.elementwise()) throw DomainError("input activation must be element-wise");
    return spec.input_activation.apply(detail::input_preactivation(spec.input_weights, u));
}

/// a^1 = g(W^in u)
inline Eigen::VectorXd first_layer_input(const NetworkSpec& spec, const Eigen::VectorXd& u)
{
    if (!spec.first_layer_activation.elementwise()) throw DomainError("first-layer activation must be element-wise");
    return spec.first_layer_activation.apply(detail::input_preactivation(spec.input_weights, u));
}

inline Eigen::MatrixXd hidden_biases(const NetworkSpec& spec)
{
    const auto N = static_cast<Eigen::Index>(spec.nodes());
    Eigen::MatrixXd b(static_cast<Eigen::Index>(spec.hidden_weights.size()), N);
    for (std::size_t i = 0; i < spec.hidden_weights.size(); ++i)
        b.row(static_cast<Eigen::Index>(i)) = spec.hidden_weights[i].col(N).transpose();
    return b;
}

/// Drive for the general scheme: J = f^in(W^in u) on segment 1, biases afterwards.
inline DriveSignal general_drive(const NetworkSpec& spec, const Eigen::VectorXd& u)
{
    spec.check();
    return DriveSignal::feed_forward(input_layer(spec, u), hidden_biases(spec));
}

/// Drive for the semilinear schemes: a^1 = g(W^in u) on segment 1, biases afterwards.
inline DriveSignal semilinear_drive(const NetworkSpec& spec, const Eigen::VectorXd& u)
{
    spec.check();
    return DriveSignal::feed_forward(first_layer_input(spec, u), hidden_biases(spec));
}

/// y = f^out(W^out (x^L, 1))
inline Eigen::VectorXd output_layer(const LayerState& last, const Eigen::MatrixXd& output_weights,
                                    const Activation& output_activation)
{
    if (output_weights.rows() == 0) return Eigen::VectorXd();
    if (output_weights.cols() != last.size() + 1) throw DimensionError("output weights must be P x (N+1)");
    const Eigen::Index N = last.size();
    Eigen::VectorXd a = output_weights.leftCols(N) * last + output_weights.col(N);
    return output_activation.apply(a);
}

// ---------------------------------------------------------------------------------------------
// General feed-forward maps

/// x^1_n = x^1_{n-1} + theta f(x^1_{n-1}, J_n, 0, ..., 0);
/// x^l_n = x^l_{n-1} + theta f(x^l_{n-1}, b^l_n, v^l_{1,n} x^{l-1}_{n-n'_1}, ...), l >= 2,
/// with sources outside [1, N] contributing 0.
inline NodeGrid forward_general(const GeneralRHS& rhs, const TimeGrid& grid, const ModulationProfile& profile,
                                const DelaySet& delays, const DriveSignal& drive, double x0)
{
    delays.check(grid.nodes());
    if (rhs.arity && *rhs.arity != delays.size()) throw DimensionError("right-hand side arity does not match D");
    if (profile.mode() != Mode::FeedForward) throw DomainError("forward_general needs a feed-forward profile");
    if (profile.spanned_segments() < grid.segments()) throw DimensionError("profile covers fewer layers than the grid");
    if (drive.nodes() != grid.nodes() || drive.segments() < grid.segments())
        throw DimensionError("drive signal does not cover the grid");

    const std::size_t N = grid.nodes();
    const double theta = grid.theta();
    NodeGrid out(grid.segments(), N, x0);
    std::vector<double> slots(delays.size(), 0.0);
    for (std::size_t l = 1; l <= grid.segments(); ++l) {
        for (std::size_t n = 1; n <= N; ++n) {
            for (std::size_t d = 0; d < delays.size(); ++d) {
                slots[d] = 0.0;
                if (l == 1) continue;
                const double v = profile.value(d, {l, n});
                const auto j = source_column(n, delays[d], N);
                if (v != 0.0 && j) slots[d] = v * out(l - 1, *j);
            }
            const double prev = out.predecessor(l, n);
            const double x = prev + theta * rhs(prev, drive.at({l, n}), std::span<const double>(slots));
            detail::guard_value(x, l, n);
            out(l, n) = x;
        }
    }
    return out;
}

inline NodeGrid forward_general(const GeneralRHS& rhs, const NetworkSpec& spec, const ModulationProfile& profile,
                                const DelaySet& delays, const Eigen::VectorXd& u)
{
    return forward_general(rhs, spec.grid, profile, delays, general_drive(spec, u), spec.x0);
}

// ---------------------------------------------------------------------------------------------
// Semilinear feed-forward maps

inline ForwardResult forward_semilinear(const NetworkSpec& spec, const Eigen::VectorXd& u)
{
    spec.check();
    const SemilinearParams& params = spec.semilinear_params();
    params.check();
    const auto& f = params.nonlinearity;
    const double decay = params.decay(spec.grid.theta());
    const double gain = params.gain(spec.grid.theta());
    const std::size_t N = spec.nodes();

    ForwardResult result{NodeGrid(spec.layers(), N, spec.x0), {}};
    NodeGrid& x = result.states;
    const Eigen::VectorXd a1 = first_layer_input(spec, u);
    for (std::size_t n = 1; n <= N; ++n) {
        x(1, n) = decay * x.predecessor(1, n) + gain * f(a1(static_cast<Eigen::Index>(n - 1)));
        detail::guard_value(x(1, n), 1, n);
    }
    for (std::size_t l = 2; l <= spec.layers(); ++l) {
        const Eigen::MatrixXd& w = spec.hidden_weights[l - 2];
        const Eigen::VectorXd prev = x.segment_vector(l - 1);
        for (std::size_t n = 1; n <= N; ++n) {
            const auto row = static_cast<Eigen::Index>(n - 1);
            const double a = detail::hidden_activation(w, prev, row, w(row, static_cast<Eigen::Index>(N)));
            x(l, n) = decay * x.predecessor(l, n) + gain * f(a);
            detail::guard_value(x(l, n), l, n);
        }
    }
    result.output = output_layer(x.segment_vector(spec.layers()), spec.output_weights, spec.output_activation);
    return result;
}

/// A (shift with e^{-alpha theta} on the first subdiagonal) and E = (Id - A)^{-1}, built from its
/// closed form E_ij = e^{-(i-j) alpha theta}, i >= j.
struct PropagatorMatrices {
    Eigen::MatrixXd shift;
    Eigen::MatrixXd propagator;
    double decay = 0.0;
    double gain = 0.0;

    static PropagatorMatrices build(std::size_t nodes, const SemilinearParams& params, double theta)
    {
        params.check();
        const auto N = static_cast<Eigen::Index>(nodes);
        PropagatorMatrices m;
        m.decay = params.decay(theta);
        m.gain = params.gain(theta);
        m.shift = Eigen::MatrixXd::Zero(N, N);
        for (Eigen::Index i = 1; i < N; ++i) m.shift(i, i - 1) = m.decay;
        m.propagator = Eigen::MatrixXd::Zero(N, N);
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index j = 0; j <= i; ++j)
                m.propagator(i, j) = std::exp(-static_cast<double>(i - j) * params.alpha * theta);
        return m;
    }

    /// ||(Id - A) E - Id||_inf
    double inverse_residual() const
    {
        const auto N = shift.rows();
        const Eigen::MatrixXd r = (Eigen::MatrixXd::Identity(N, N) - shift) * propagator - Eigen::MatrixXd::Identity(N, N);
        return r.cwiseAbs().rowwise().sum().maxCoeff();
    }
};

/// x^l = (e^{-alpha theta} x^{l-1}_N, ..., e^{-N alpha theta} x^{l-1}_N) + gain * E f(W^l (x^{l-1}, 1))
inline LayerState hidden_layer_matrix_form(const LayerState& prev, const Eigen::MatrixXd& weights,
                                           const SemilinearParams& params, const PropagatorMatrices& m)
{
    const Eigen::Index N = prev.size();
    if (weights.rows() != N || weights.cols() != N + 1) throw DimensionError("hidden weights must be N x (N+1)");
    if (m.propagator.rows() != N) throw DimensionError("propagator matrices built for a different N");
    const Eigen::VectorXd a = weights.leftCols(N) * prev + weights.col(N);
    const Eigen::VectorXd fa = params.nonlinearity.apply(a);
    Eigen::VectorXd carry(N);
    double c = prev(N - 1);
    for (Eigen::Index i = 0; i < N; ++i) {
        c *= m.decay;
        carry(i) = c;
    }
    return carry + m.gain * (m.propagator * fa);
}

/// x^1 = alpha^{-1} f(g(W^in u)), x^l = alpha^{-1} f(W^l (x^{l-1}, 1)): a plain multilayer
/// perceptron with output scaling alpha^{-1}.
inline ForwardResult forward_map_limit(const NetworkSpec& spec, const Eigen::VectorXd& u)
{
    spec.check();
    const SemilinearParams& params = spec.semilinear_params();
    params.check();
    const double scale = 1.0 / params.alpha;
    const auto N = static_cast<Eigen::Index>(spec.nodes());

    ForwardResult result{NodeGrid(spec.layers(), spec.nodes(), spec.x0), {}};
    Eigen::VectorXd x = scale * params.nonlinearity.apply(first_layer_input(spec, u));
    result.states.values.row(0) = x.transpose();
    for (std::size_t l = 2; l <= spec.layers(); ++l) {
        const Eigen::MatrixXd& w = spec.hidden_weights[l - 2];
        const Eigen::VectorXd a = w.leftCols(N) * x + w.col(N);
        x = scale * params.nonlinearity.apply(a);
        result.states.values.row(static_cast<Eigen::Index>(l - 1)) = x.transpose();
    }
    result.output = output_layer(x, spec.output_weights, spec.output_activation);
    return result;
}

// ---------------------------------------------------------------------------------------------
// Recurrent network

struct RecurrentNetwork {
    TimeGrid grid;                    ///< segments = K steps
    DelaySet delays;
    Eigen::MatrixXd weights;          ///< N x N internal matrix
    Eigen::MatrixXd input_weights;    ///< N x (M+1)
    Activation input_activation = Activation::identity();
    double x0 = 0.0;
};

/// Rows z^k = f^in(W^in u(k)); `inputs` is K x (M+1) with a trailing column of ones.
inline DriveSignal recurrent_drive(const RecurrentNetwork& net, const Eigen::MatrixXd& inputs)
{
    if (static_cast<std::size_t>(inputs.rows()) != net.grid.segments())
        throw DimensionError("need one input vector per step");
    if (net.input_weights.rows() != static_cast<Eigen::Index>(net.grid.nodes()))
        throw DimensionError("input weights must be N x (M+1)");
    Eigen::MatrixXd z(inputs.rows(), static_cast<Eigen::Index>(net.grid.nodes()));
    for (Eigen::Index k = 0; k < inputs.rows(); ++k) {
        const Eigen::VectorXd u = inputs.row(k).transpose();
        z.row(k) = net.input_activation.apply(detail::input_preactivation(net.input_weights, u)).transpose();
    }
    return DriveSignal::recurrent(std::move(z));
}

/// Semilinear recurrent maps: x^k_n = e^{-alpha theta} x^k_{n-1} + gain f(z^k_n + sum_j w_nj x^{k-1}_j)
/// for k >= 2; step 1 sees only x0 and z^1.
inline NodeGrid forward_recurrent(const RecurrentNetwork& net, const Eigen::MatrixXd& inputs,
                                  const SemilinearParams& params)
{
    params.check();
    compile_recurrent(net.weights, net.delays, net.grid);
    const DriveSignal drive = recurrent_drive(net, inputs);
    const double decay = params.decay(net.grid.theta());
    const double gain = params.gain(net.grid.theta());
    const std::size_t N = net.grid.nodes();
    NodeGrid x(net.grid.segments(), N, net.x0);
    for (std::size_t k = 1; k <= net.grid.segments(); ++k) {
        const Eigen::VectorXd prev = k > 1 ? x.segment_vector(k - 1) : Eigen::VectorXd();
        for (std::size_t n = 1; n <= N; ++n) {
            const double z = drive.at({k, n});
            const double a = k > 1 ? detail::hidden_activation(net.weights, prev, static_cast<Eigen::Index>(n - 1), z) : z;
            x(k, n) = decay * x.predecessor(k, n) + gain * params.nonlinearity(a);
            detail::guard_value(x(k, n), k, n);
        }
    }
    return x;
}

/// General recurrent maps with the per-delay slots of the compiled periodic profile.
inline NodeGrid forward_recurrent(const RecurrentNetwork& net, const Eigen::MatrixXd& inputs, const GeneralRHS& rhs)
{
    if (rhs.arity && *rhs.arity != net.delays.size()) throw DimensionError("right-hand side arity does not match D");
    const ModulationTable table = compile_recurrent(net.weights, net.delays, net.grid).table(0);
    const DriveSignal drive = recurrent_drive(net, inputs);
    const std::size_t N = net.grid.nodes();
    const double theta = net.grid.theta();
    NodeGrid x(net.grid.segments(), N, net.x0);
    std::vector<double> slots(net.delays.size(), 0.0);
    for (std::size_t k = 1; k <= net.grid.segments(); ++k) {
        for (std::size_t n = 1; n <= N; ++n) {
            for (std::size_t d = 0; d < net.delays.size(); ++d) {
                slots[d] = 0.0;
                if (k == 1) continue;
                const double v = table(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n - 1));
                const auto j = source_column(n, net.delays[d], N);
                if (v != 0.0 && j) slots[d] = v * x(k - 1, *j);
            }
            const double prev = x.predecessor(k, n);
            x(k, n) = prev + theta * rhs(prev, drive.at({k, n}), std::span<const double>(slots));
            detail::guard_value(x(k, n), k, n);
        }
    }
    return x;
}

}  // namespace ddenet
