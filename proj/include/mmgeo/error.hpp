#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmgeo {

enum class ErrorCode {
  // mmcore
  NegativeDistance,
  AsymmetricMatrix,
  NonzeroDiagonal,
  TriangleViolation,
  WeightsNotProbability,
  DimensionMismatch,
  InfiniteDistance,
  ParseError,
  IoError,
  // packing
  NonpositiveEps,
  TooLarge,
  NetTooLarge,
  BadGrid,
  // separation
  TooLargeForExact,
  AlphaOutOfRange,
  NotRational,
  KappaSumNotBelowOne,
  BadQuery,
  // witness
  TOutOfRange,
  EqualIndices,
  EmptyB,
  BlockMassTooSmall,
  BlocksNotSeparated,
  BadTau,
  BadEps,
  NoBlocksFound,
  BadTarget,
  // groups
  DegreeMismatch,
  BadMetric,
  BadSeed,
  BadSample,
  ChainTooShort,
  MetricNotRightInvariant,
  NotAGroupSpace,
  BadKappa,
  // cli
  BadConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mmgeo
