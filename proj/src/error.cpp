#include "acc/error.hpp"

namespace acc {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::AgentTypeMismatch: return "AgentTypeMismatch";
    case ErrorCode::MissingFinalAnswer: return "MissingFinalAnswer";
    case ErrorCode::NonContiguousTurns: return "NonContiguousTurns";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::DuplicateItemId: return "DuplicateItemId";
    case ErrorCode::EmptyEvidence: return "EmptyEvidence";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::LayoutError: return "LayoutError";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TeacherUnavailable: return "TeacherUnavailable";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::IOError: return "IOError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonCausal: return "NonCausal";
    case ErrorCode::DegenerateBins: return "DegenerateBins";
    case ErrorCode::BinningMismatch: return "BinningMismatch";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::LayerSetMismatch: return "LayerSetMismatch";
    case ErrorCode::NoUserContent: return "NoUserContent";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::ZeroCentroid: return "ZeroCentroid";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

} // namespace acc
