#pragma once

// Element-wise nonlinearities and output activations.

#include "ddenet/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

namespace ddenet {

enum class ActivationKind { Identity, Tanh, Sine, MackeyGlass, Softmax };

struct Activation {
    ActivationKind kind = ActivationKind::Identity;
    double eta = 1.0;  ///< Mackey-Glass gain
    double p = 1.0;    ///< Mackey-Glass exponent, > 0

    static Activation identity() { return {}; }
    static Activation tanh() { return {ActivationKind::Tanh}; }
    static Activation sine() { return {ActivationKind::Sine}; }
    static Activation softmax() { return {ActivationKind::Softmax}; }
    static Activation mackey_glass(double eta, double p)
    {
        if (!std::isfinite(eta) || !std::isfinite(p) || !(p > 0.0))
            throw DomainError("Mackey-Glass nonlinearity needs finite eta and p > 0");
        return {ActivationKind::MackeyGlass, eta, p};
    }

    bool elementwise() const noexcept { return kind != ActivationKind::Softmax; }

    double operator()(double a) const
    {
        switch (kind) {
        case ActivationKind::Identity: return a;
        case ActivationKind::Tanh: return std::tanh(a);
        case ActivationKind::Sine: return std::sin(a);
        case ActivationKind::MackeyGlass: return eta * a / (1.0 + std::pow(std::abs(a), p));
        case ActivationKind::Softmax: break;
        }
        throw DomainError("softmax is not an element-wise activation");
    }

    /// Vector form; softmax is the only non-element-wise case.
    Eigen::VectorXd apply(const Eigen::VectorXd& a) const
    {
        if (kind == ActivationKind::Softmax) {
            if (a.size() == 0) return a;
            const double shift = a.maxCoeff();
            Eigen::VectorXd e = (a.array() - shift).exp();
            return e / e.sum();
        }
        return a.unaryExpr([this](double v) { return (*this)(v); });
    }

    /// Upper bound on |f(a)| when one exists (Sine, Tanh), else infinity.
    double bound() const noexcept
    {
        switch (kind) {
        case ActivationKind::Tanh:
        case ActivationKind::Sine: return 1.0;
        default: return HUGE_VAL;
        }
    }
};

inline std::string to_string(const Activation& f)
{
    switch (f.kind) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sine: return "sine";
    case ActivationKind::MackeyGlass: return "mackey_glass";
    case ActivationKind::Softmax: return "softmax";
    }
    return "?";
}

/// Parses "identity", "tanh", "sine" / "sin", "softmax", "mackey_glass".
/// Mackey-Glass parameters come from the caller.
inline Activation parse_activation(std::string_view name, double eta = 1.0, double p = 1.0)
{
    if (name == "identity" || name == "linear") return Activation::identity();
    if (name == "tanh") return Activation::tanh();
    if (name == "sine" || name == "sin") return Activation::sine();
    if (name == "softmax") return Activation::softmax();
    if (name == "mackey_glass" || name == "mackey-glass") return Activation::mackey_glass(eta, p);
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

}  // namespace ddenet
