#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace riskgate {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Gram-Schmidt received a row that is dependent on the previous ones.
class DegenerateRow : public Error {
public:
    using Error::Error;
};

class NotInSpan : public Error {
public:
    NotInSpan(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// The target vector is reachable, so no separating certificate exists.
class NoCertificate : public Error {
public:
    using Error::Error;
};

class NonpositiveInitialValue : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class MissingIncrements : public Error {
public:
    using Error::Error;
};

class InvalidTemplate : public Error {
public:
    using Error::Error;
};

class InvalidLambda : public Error {
public:
    using Error::Error;
};

class NotRiskless : public Error {
public:
    using Error::Error;
};

class NoPositiveExcess : public Error {
public:
    using Error::Error;
};

class NotAMoneyMarketAccount : public Error {
public:
    using Error::Error;
};

// Thrown by the CAPM construction when the model admits arbitrage;
// carries the offending (path, t_index) samples.
class ArbitragePresent : public Error {
public:
    ArbitragePresent(const std::string& what,
                     std::vector<std::pair<std::size_t, std::size_t>> indices)
        : Error(what), indices_(std::move(indices)) {}
    const std::vector<std::pair<std::size_t, std::size_t>>& indices() const {
        return indices_;
    }

private:
    std::vector<std::pair<std::size_t, std::size_t>> indices_;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

// Dispersion columns already span the whole risky subspace; there is no
// direction left to push the drift out of the span.
class SpanIsFull : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class InvariantError : public Error {
public:
    using Error::Error;
};

}  // namespace riskgate
