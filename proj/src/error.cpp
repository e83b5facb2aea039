#include "insight/error.hpp"

namespace insight {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConnectionFailed: return "ConnectionFailed";
    case ErrorCode::PermissionDenied: return "PermissionDenied";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::EngineUnavailable: return "EngineUnavailable";
    case ErrorCode::SqlError: return "SqlError";
    case ErrorCode::NonReadOnly: return "NonReadOnly";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::CassetteMiss: return "CassetteMiss";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MalformedOutput: return "MalformedOutput";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptySchema: return "EmptySchema";
    case ErrorCode::NoUsableFields: return "NoUsableFields";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::HdcGenerationFailed: return "HdcGenerationFailed";
    case ErrorCode::OffTopic: return "OffTopic";
    case ErrorCode::NoRelevantSchema: return "NoRelevantSchema";
    case ErrorCode::RefinementExhausted: return "RefinementExhausted";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::NameConflict: return "NameConflict";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::SessionBusy: return "SessionBusy";
    case ErrorCode::SessionNotReady: return "SessionNotReady";
    case ErrorCode::UnknownTurn: return "UnknownTurn";
    case ErrorCode::UnknownBookmark: return "UnknownBookmark";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ErrorCode error_code_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::InvalidArgument); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown error code: " + std::string(name));
}

}  // namespace insight
