#include "ctmix/errors.hpp"

namespace ctmix {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case Errc::ProbabilityRowSum: return "ProbabilityRowSum";
    case Errc::NonZeroDiagonal: return "NonZeroDiagonal";
    case Errc::AbsorbingState: return "AbsorbingState";
    case Errc::PathOverflow: return "PathOverflow";
    case Errc::InconsistentPath: return "InconsistentPath";
    case Errc::WeightRowSum: return "WeightRowSum";
    case Errc::NoOccupation: return "NoOccupation";
    case Errc::NoInitial: return "NoInitial";
    case Errc::NoExit: return "NoExit";
    case Errc::InfeasiblePath: return "InfeasiblePath";
    case Errc::LabelRequired: return "LabelRequired";
    case Errc::MismatchedDataset: return "MismatchedDataset";
    case Errc::ParseError: return "ParseError";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::SchemaError: return "SchemaError";
  }
  return "UnknownError";
}

Error::Error(Errc code, const std::string& detail, long index, long index2)
    : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
      code_(code), index_(index), index2_(index2) {}

} // namespace ctmix
