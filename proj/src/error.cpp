#include "mmgeo/error.hpp"

namespace mmgeo {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::AsymmetricMatrix: return "AsymmetricMatrix";
    case ErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::TriangleViolation: return "TriangleViolation";
    case ErrorCode::WeightsNotProbability: return "WeightsNotProbability";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InfiniteDistance: return "InfiniteDistance";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NonpositiveEps: return "NonpositiveEps";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NetTooLarge: return "NetTooLarge";
    case ErrorCode::BadGrid: return "BadGrid";
    case ErrorCode::TooLargeForExact: return "TooLargeForExact";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::NotRational: return "NotRational";
    case ErrorCode::KappaSumNotBelowOne: return "KappaSumNotBelowOne";
    case ErrorCode::BadQuery: return "BadQuery";
    case ErrorCode::TOutOfRange: return "TOutOfRange";
    case ErrorCode::EqualIndices: return "EqualIndices";
    case ErrorCode::EmptyB: return "EmptyB";
    case ErrorCode::BlockMassTooSmall: return "BlockMassTooSmall";
    case ErrorCode::BlocksNotSeparated: return "BlocksNotSeparated";
    case ErrorCode::BadTau: return "BadTau";
    case ErrorCode::BadEps: return "BadEps";
    case ErrorCode::NoBlocksFound: return "NoBlocksFound";
    case ErrorCode::BadTarget: return "BadTarget";
    case ErrorCode::DegreeMismatch: return "DegreeMismatch";
    case ErrorCode::BadMetric: return "BadMetric";
    case ErrorCode::BadSeed: return "BadSeed";
    case ErrorCode::BadSample: return "BadSample";
    case ErrorCode::ChainTooShort: return "ChainTooShort";
    case ErrorCode::MetricNotRightInvariant: return "MetricNotRightInvariant";
    case ErrorCode::NotAGroupSpace: return "NotAGroupSpace";
    case ErrorCode::BadKappa: return "BadKappa";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace mmgeo
