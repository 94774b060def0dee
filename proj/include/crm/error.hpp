#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crm {

enum class ErrorKind {
  EmptyPromptId,
  EmptyPromptText,
  EmptyFinalAnswer,
  NonFiniteIntermediate,
  InvalidBounds,
  DimensionMismatch,
  LengthMismatch,
  EmbedderFailure,
  EmptyGroup,
  EmptyBatch,
  NoReferenceText,
  NothingToPerturb,
  NonFiniteComponent,
  NonFiniteInput,
  DivergedValues,
  ParseError,
  UnknownKey,
  InvalidValue,
  NoRecords,
  MalformedRecord,
  GroupScoringFailed,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every recoverable failure in the engine is reported through this type.
// `field` names the offending input (record field, config key, ...) when known.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::string field = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace crm
