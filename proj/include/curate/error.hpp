#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curate {

enum class ErrorCode {
  UnreadableSource,
  ServiceUnavailable,
  EmptyExtraction,
  MalformedTable,
  InvalidConfig,
  EmptyCorpus,
  UnknownDoc,
  EmptySchema,
  OutputUnparseable,
  GenerationFailed,
  UnknownAttribute,
  SchemaMismatch,
  MalformedDump,
  DocIdMismatch,
  SchemaParseError,
  DuplicateName,
  DocsNotIngested,
  PilotCapExceeded,
  RecordLocked,
  UnknownColumn,
  AlreadyLocked,
  InvalidTransition,
  NoBatches,
  NotFound,
  Unauthorized,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure the engine reports carries a stable machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace curate
