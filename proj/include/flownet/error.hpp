#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flownet {

enum class ErrorCode {
    // topology
    IndexOutOfRange,
    SelfLoop,
    DuplicateAdjacency,
    EmptyDigraph,
    DuplicateLink,
    // flow functions
    InvalidParameter,
    NegativeMass,
    AtOrAboveCapacity,
    NotInvertible,
    // policies
    NotSubstochastic,
    SupportViolation,
    NonSinkRowSumNotOne,
    NegativeState,
    NegativeInput,
    MissingCost,
    // dynamics
    PolicyTopologyMismatch,
    InflowNotSupported,
    NonFiniteState,
    NoSupplyFunctions,
    InvalidConfig,
    // analysis
    BoundaryPoint,
    ZeroDiagonal,
    NoConvergence,
    CapacityViolated,
    NotOutflowConnected,
    NotInflowConnected,
    Inconclusive,
    PreconditionViolated,
    TooLarge,
    // resilience
    InfiniteCapacity,
    TooManyCells,
    TopologyNotLineDigraphAcyclic,
    InconclusiveProbe,
    // input handling
    ParseError,
    SchemaError,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateAdjacency: return "DuplicateAdjacency";
    case ErrorCode::EmptyDigraph: return "EmptyDigraph";
    case ErrorCode::DuplicateLink: return "DuplicateLink";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::AtOrAboveCapacity: return "AtOrAboveCapacity";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::NotSubstochastic: return "NotSubstochastic";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::NonSinkRowSumNotOne: return "NonSinkRowSumNotOne";
    case ErrorCode::NegativeState: return "NegativeState";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::MissingCost: return "MissingCost";
    case ErrorCode::PolicyTopologyMismatch: return "PolicyTopologyMismatch";
    case ErrorCode::InflowNotSupported: return "InflowNotSupported";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NoSupplyFunctions: return "NoSupplyFunctions";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BoundaryPoint: return "BoundaryPoint";
    case ErrorCode::ZeroDiagonal: return "ZeroDiagonal";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::CapacityViolated: return "CapacityViolated";
    case ErrorCode::NotOutflowConnected: return "NotOutflowConnected";
    case ErrorCode::NotInflowConnected: return "NotInflowConnected";
    case ErrorCode::Inconclusive: return "Inconclusive";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InfiniteCapacity: return "InfiniteCapacity";
    case ErrorCode::TooManyCells: return "TooManyCells";
    case ErrorCode::TopologyNotLineDigraphAcyclic: return "TopologyNotLineDigraphAcyclic";
    case ErrorCode::InconclusiveProbe: return "InconclusiveProbe";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Errors caused by unreadable or malformed input, as opposed to
/// well-formed input describing an invalid network.
constexpr bool is_input_error(ErrorCode code) noexcept
{
    return code == ErrorCode::ParseError || code == ErrorCode::SchemaError || code == ErrorCode::IoError;
}

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message)
    {
    }

    ErrorCode code() const noexcept
    {
        return code_;
    }

    // Message without the code prefix.
    const std::string &detail() const noexcept
    {
        return detail_;
    }

private:
    ErrorCode code_;
    std::string detail_;
};

/// Schema or parse error anchored to a position in the source text.
/// Line and column are 1-based; zero means unknown.
class InputError : public Error
{
public:
    InputError(ErrorCode code, const std::string &message, std::size_t line, std::size_t column,
               std::string pointer = {})
        : Error(code, message), line_(line), column_(column), pointer_(std::move(pointer))
    {
    }

    std::size_t line() const noexcept
    {
        return line_;
    }
    std::size_t column() const noexcept
    {
        return column_;
    }
    const std::string &pointer() const noexcept
    {
        return pointer_;
    }

private:
    std::size_t line_;
    std::size_t column_;
    std::string pointer_;
};

} // namespace flownet
