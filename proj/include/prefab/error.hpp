#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prefab {

enum class ErrorKind {
    EmptyTrace,
    TraceTooShort,
    SessionTooShort,
    NoGroundTruth,
    DimensionMismatch,
    NoTrainingData,
    TrainingDiverged,
    TooFewSessions,
    RegionsOverlap,
    LengthMismatch,
    CountTooLarge,
    UnknownFeature,
    InvalidArgument,
    Io,
    Parse,
    Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every library failure carries a kind so callers (CLI, HTTP layer) can map it
/// to an exit code or status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace prefab
