#pragma once

// Exception hierarchy shared by every ddenet module.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ddenet {

/// Base of all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation (bad index, bad delay, bad time).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Integration produced a non-finite value or left the |x| <= 1e12 envelope.
class NumericalBlowup : public Error {
public:
    NumericalBlowup(std::string what, std::size_t segment, std::size_t node)
        : Error(std::move(what)), segment_(segment), node_(node)
    {}

    std::size_t segment() const noexcept { return segment_; }
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t segment_;
    std::size_t node_;
};

/// A nonzero-modulated delay term reached back before t = 0 and no history value was supplied.
class HistoryRequired : public Error {
public:
    using Error::Error;
};

/// The reference integrator did not self-certify at the largest allowed substep count.
class OracleFailure : public Error {
public:
    using Error::Error;
};

/// Target weight matrix has nonzero entries that no delay in the delay set can carry.
class UnrealizableWeights : public Error {
public:
    struct Entry {
        std::size_t row;     ///< 1-based target node n
        std::size_t column;  ///< 1-based source node j
    };

    UnrealizableWeights(std::string what, std::vector<Entry> entries)
        : Error(std::move(what)), entries_(std::move(entries))
    {}

    const std::vector<Entry>& entries() const noexcept { return entries_; }

private:
    std::vector<Entry> entries_;
};

}  // namespace ddenet
