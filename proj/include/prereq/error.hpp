#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prereq {

enum class ErrorCode {
  // ontology
  ParseError,
  UnknownPredicate,
  DanglingReference,
  CycleDetected,
  MissingContent,
  IrregularLeafCount,
  EmptyLeaves,
  BrokenChain,
  UnknownConcept,
  InvalidConceptId,
  // rule calculus
  InvalidN,
  InvalidC,
  InconsistentInput,
  Overflow,
  EmptyGrid,
  // rule generation
  IrregularOntology,
  BadVectorLength,
  // agents
  UnknownAgent,
  DuplicateAgent,
  InvalidLiteral,
  NonTermination,
  // session
  UnknownDesiredConcept,
  WrongPhase,
  EmptyAnswer,
  IncompleteOutcome,
  // student model
  StorageError,
  InvalidEvent,
  // question bank
  MissingLeafQuestion,
  UnknownLeaf,
  // service
  UnknownSession,
  BadRequest,
  BindError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownPredicate: return "UnknownPredicate";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::MissingContent: return "MissingContent";
    case ErrorCode::IrregularLeafCount: return "IrregularLeafCount";
    case ErrorCode::EmptyLeaves: return "EmptyLeaves";
    case ErrorCode::BrokenChain: return "BrokenChain";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::InvalidConceptId: return "InvalidConceptId";
    case ErrorCode::InvalidN: return "InvalidN";
    case ErrorCode::InvalidC: return "InvalidC";
    case ErrorCode::InconsistentInput: return "InconsistentInput";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::IrregularOntology: return "IrregularOntology";
    case ErrorCode::BadVectorLength: return "BadVectorLength";
    case ErrorCode::UnknownAgent: return "UnknownAgent";
    case ErrorCode::DuplicateAgent: return "DuplicateAgent";
    case ErrorCode::InvalidLiteral: return "InvalidLiteral";
    case ErrorCode::NonTermination: return "NonTermination";
    case ErrorCode::UnknownDesiredConcept: return "UnknownDesiredConcept";
    case ErrorCode::WrongPhase: return "WrongPhase";
    case ErrorCode::EmptyAnswer: return "EmptyAnswer";
    case ErrorCode::IncompleteOutcome: return "IncompleteOutcome";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::InvalidEvent: return "InvalidEvent";
    case ErrorCode::MissingLeafQuestion: return "MissingLeafQuestion";
    case ErrorCode::UnknownLeaf: return "UnknownLeaf";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::BindError: return "BindError";
  }
  return "Unknown";
}

// Single exception type for every domain failure; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace prereq
