#include "stsr/error.hpp"

namespace stsr {

std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::SizeMismatch: return "SizeMismatch";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::MissingCase: return "MissingCase";
        case ErrorCode::NotRigid: return "NotRigid";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::GeometryMismatch: return "GeometryMismatch";
        case ErrorCode::InvalidTolerance: return "InvalidTolerance";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::Degenerate: return "Degenerate";
        case ErrorCode::NoCorrespondences: return "NoCorrespondences";
        case ErrorCode::EmptyCloud: return "EmptyCloud";
        case ErrorCode::DegenerateCloud: return "DegenerateCloud";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::DegeneratePrior: return "DegeneratePrior";
        case ErrorCode::UnknownMetric: return "UnknownMetric";
    }
    return "Unknown";
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError:
        case ErrorCode::SizeMismatch:
        case ErrorCode::IoError:
        case ErrorCode::MissingCase:
            return 2;
        default:
            return 1;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace stsr
