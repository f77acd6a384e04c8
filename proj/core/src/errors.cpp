#include "matforge/errors.hpp"

namespace matforge {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kInvalidDoc: return "InvalidDoc";
    case ErrorCode::kUnknownSymbol: return "UnknownSymbol";
    case ErrorCode::kUnclosedMarker: return "UnclosedMarker";
    case ErrorCode::kMismatchedClose: return "MismatchedClose";
    case ErrorCode::kNestedMarker: return "NestedMarker";
    case ErrorCode::kEmptyMarker: return "EmptyMarker";
    case ErrorCode::kSourceDivergence: return "SourceDivergence";
    case ErrorCode::kMisalignedSpan: return "MisalignedSpan";
    case ErrorCode::kDanglingInside: return "DanglingInside";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kDocMismatch: return "DocMismatch";
    case ErrorCode::kNotJson: return "NotJson";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kDanglingEdge: return "DanglingEdge";
    case ErrorCode::kInvalidCorpus: return "InvalidCorpus";
    case ErrorCode::kUnknownTemplate: return "UnknownTemplate";
    case ErrorCode::kMissingDescription: return "MissingDescription";
    case ErrorCode::kTransport: return "Transport";
    case ErrorCode::kEndpoint: return "Endpoint";
    case ErrorCode::kEmptyCompletion: return "EmptyCompletion";
    case ErrorCode::kCassetteMiss: return "CassetteMiss";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kStore: return "StoreError";
  }
  return "Unknown";
}

}  // namespace matforge
