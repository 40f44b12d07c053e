#include "prefab/error.hpp"

namespace prefab {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::EmptyTrace: return "EmptyTrace";
        case ErrorKind::TraceTooShort: return "TraceTooShort";
        case ErrorKind::SessionTooShort: return "SessionTooShort";
        case ErrorKind::NoGroundTruth: return "NoGroundTruth";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NoTrainingData: return "NoTrainingData";
        case ErrorKind::TrainingDiverged: return "TrainingDiverged";
        case ErrorKind::TooFewSessions: return "TooFewSessions";
        case ErrorKind::RegionsOverlap: return "RegionsOverlap";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::CountTooLarge: return "CountTooLarge";
        case ErrorKind::UnknownFeature: return "UnknownFeature";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Parse: return "Parse";
        case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

}  // namespace prefab
