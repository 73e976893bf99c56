#pragma once

#include <stdexcept>
#include <string>

namespace hfc {

enum class ErrorKind {
    SplitUndefined,
    NotBisectorial,
    ContourTooClose,
    NearSingular,
    NoConvergence,
    DegenerateFrequency,
    NotInvertible,
    HodgeDecompositionUncertain,
    PerturbationTooLarge,
    ShapeMismatch,
    InvalidArgument,
    Precondition,
    Io,
};

inline const char* kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::SplitUndefined: return "SplitUndefined";
    case ErrorKind::NotBisectorial: return "NotBisectorial";
    case ErrorKind::ContourTooClose: return "ContourTooClose";
    case ErrorKind::NearSingular: return "NearSingular";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateFrequency: return "DegenerateFrequency";
    case ErrorKind::NotInvertible: return "NotInvertible";
    case ErrorKind::HodgeDecompositionUncertain: return "HodgeDecompositionUncertain";
    case ErrorKind::PerturbationTooLarge: return "PerturbationTooLarge";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Precondition: return "Precondition";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(std::string(kind_name(kind)) + ": " + msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace hfc
