#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lessonrag {

enum class ErrorKind {
  invalid_argument,
  io,
  format,       // malformed input file or provider output
  validation,   // request field failed validation
  not_found,
  provider,     // remote model provider failure
  integrity,    // digest / version / count mismatch in persisted data
  internal,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Failure talking to an embedding or text-generation provider.
/// Transport errors and 5xx responses are retryable; 4xx and contract
/// violations (count mismatch, bad JSON) are terminal.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& message, bool retryable, int http_status = 0)
      : Error(ErrorKind::provider, message),
        retryable_(retryable),
        http_status_(http_status) {}

  bool retryable() const noexcept { return retryable_; }
  int http_status() const noexcept { return http_status_; }

 private:
  bool retryable_;
  int http_status_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, std::string reason)
      : Error(ErrorKind::validation, field + ": " + reason),
        field_(std::move(field)),
        reason_(std::move(reason)) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

/// An error raised inside the generation pipeline, labeled with the stage
/// that produced it ("retrieve", "generate", ...). The kind is inherited
/// from the underlying cause so callers can map it to a status code.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, ErrorKind kind, std::string reason, std::string field = {})
      : Error(kind, stage + ": " + reason),
        stage_(std::move(stage)),
        reason_(std::move(reason)),
        field_(std::move(field)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& reason() const noexcept { return reason_; }
  /// Request field at fault, for validation failures.
  const std::string& field() const noexcept { return field_; }

 private:
  std::string stage_;
  std::string reason_;
  std::string field_;
};

}  // namespace lessonrag
