#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace insight {

enum class ErrorCode {
  // schema catalog / engine
  ConnectionFailed,
  PermissionDenied,
  UnknownTable,
  IoFailure,
  VersionMismatch,
  EngineUnavailable,
  SqlError,
  NonReadOnly,
  // llm gateway
  ProviderError,
  CassetteMiss,
  Timeout,
  EmptyInput,
  MalformedOutput,
  BudgetExceeded,
  UnknownModel,
  // vector index
  DimensionMismatch,
  EmptyIndex,
  ZeroVector,
  // hdc
  EmptySchema,
  NoUsableFields,
  PreconditionViolated,
  HdcGenerationFailed,
  // question / tisql / chart
  OffTopic,
  NoRelevantSchema,
  RefinementExhausted,
  EmptyResult,
  // session service
  UnknownDataset,
  NameConflict,
  UnknownSession,
  SessionBusy,
  SessionNotReady,
  UnknownTurn,
  UnknownBookmark,
  IndexOutOfRange,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);
// Inverse of to_string; throws Error(InvalidArgument) for unknown names.
ErrorCode error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace insight
