#include "sirenedge/error.hpp"

namespace sirenedge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ChunkTooLarge: return "ChunkTooLarge";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::NoValidSize: return "NoValidSize";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::OrderViolation: return "OrderViolation";
    case ErrorCode::InputTooShort: return "InputTooShort";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::BackendTimeout: return "BackendTimeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::UndefinedRate: return "UndefinedRate";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::DegenerateFilter: return "DegenerateFilter";
    case ErrorCode::EmptyMaps: return "EmptyMaps";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
  }
  return "Unknown";
}

}  // namespace sirenedge
