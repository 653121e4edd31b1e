#pragma once

#include <stdexcept>
#include <string>

namespace reagent {

// Every failure mode the library reports. Callers match on code(), not on
// message text.
enum class Err {
  DuplicateId,
  NoConflict,
  TimeRegression,
  DepthExceeded,
  ScopeMismatch,
  CorruptLog,
  UnknownSender,
  BackendFailure,
  EmptyDecomposition,
  SchemaViolation,
  NoCheckpointAvailable,
  DuplicateDocId,
  EmptyCorpus,
  EmbedderFailure,
  ParseError,
  ConfigError,
  NoConsistentHypothesis,
  InvalidArgument,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::DuplicateId: return "DuplicateId";
    case Err::NoConflict: return "NoConflict";
    case Err::TimeRegression: return "TimeRegression";
    case Err::DepthExceeded: return "DepthExceeded";
    case Err::ScopeMismatch: return "ScopeMismatch";
    case Err::CorruptLog: return "CorruptLog";
    case Err::UnknownSender: return "UnknownSender";
    case Err::BackendFailure: return "BackendFailure";
    case Err::EmptyDecomposition: return "EmptyDecomposition";
    case Err::SchemaViolation: return "SchemaViolation";
    case Err::NoCheckpointAvailable: return "NoCheckpointAvailable";
    case Err::DuplicateDocId: return "DuplicateDocId";
    case Err::EmptyCorpus: return "EmptyCorpus";
    case Err::EmbedderFailure: return "EmbedderFailure";
    case Err::ParseError: return "ParseError";
    case Err::ConfigError: return "ConfigError";
    case Err::NoConsistentHypothesis: return "NoConsistentHypothesis";
    case Err::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what),
        code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void raise(Err code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace reagent
