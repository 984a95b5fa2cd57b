#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace svph {

enum class ErrorCode {
    InvalidArgument,
    ValidationError,
    NonPositiveDeterminant,
    RootCountMismatch,
    ConeNotInvariant,
    BudgetExceeded,
    AliasingSuspected,
    EigenSolverDiverged,
    BranchMatchingFailed,
    DecompositionInconsistent,
    WeightMismatch,
    NonDecayingCorrelations,
    DegenerateComponent,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::NonPositiveDeterminant: return "NonPositiveDeterminant";
    case ErrorCode::RootCountMismatch: return "RootCountMismatch";
    case ErrorCode::ConeNotInvariant: return "ConeNotInvariant";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::AliasingSuspected: return "AliasingSuspected";
    case ErrorCode::EigenSolverDiverged: return "EigenSolverDiverged";
    case ErrorCode::BranchMatchingFailed: return "BranchMatchingFailed";
    case ErrorCode::DecompositionInconsistent: return "DecompositionInconsistent";
    case ErrorCode::WeightMismatch: return "WeightMismatch";
    case ErrorCode::NonDecayingCorrelations: return "NonDecayingCorrelations";
    case ErrorCode::DegenerateComponent: return "DegenerateComponent";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    /// Message without the code prefix.
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

    /// Validation problems are the caller's fault; everything else is a
    /// numerical diagnostic.
    [[nodiscard]] bool is_validation() const noexcept {
        return code_ == ErrorCode::InvalidArgument || code_ == ErrorCode::ValidationError;
    }

private:
    ErrorCode code_;
    std::string detail_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw Error(ErrorCode::InvalidArgument, message);
}

} // namespace svph
