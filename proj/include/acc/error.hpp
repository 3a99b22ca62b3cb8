#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace acc {

enum class ErrorCode {
    SchemaError,
    AgentTypeMismatch,
    MissingFinalAnswer,
    NonContiguousTurns,
    ArityMismatch,
    DuplicateItemId,
    EmptyEvidence,
    BudgetExceeded,
    LayoutError,
    LengthMismatch,
    TeacherUnavailable,
    EmptyCorpus,
    IOError,
    FormatError,
    ShapeMismatch,
    NonCausal,
    DegenerateBins,
    BinningMismatch,
    EmptyGroup,
    LayerSetMismatch,
    NoUserContent,
    DimensionMismatch,
    EmptySet,
    ZeroCentroid,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the toolkit carries a machine-readable code so
/// callers (and the CLI's error summary) can branch without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace acc
