#ifndef CTMIX_ERRORS_HPP
#define CTMIX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ctmix {

enum class Errc {
  DimensionMismatch,
  NegativeOffDiagonal,
  ProbabilityRowSum,
  NonZeroDiagonal,
  AbsorbingState,
  PathOverflow,
  InconsistentPath,
  WeightRowSum,
  NoOccupation,
  NoInitial,
  NoExit,
  InfeasiblePath,
  LabelRequired,
  MismatchedDataset,
  ParseError,
  InvariantViolation,
  SchemaError,
};

const char* errc_name(Errc c);

// Single exception type for the whole library. `index()`/`index2()` carry
// the offending state/regime/row/line when one exists, -1 otherwise.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& detail, long index = -1, long index2 = -1);

  Errc code() const noexcept { return code_; }
  long index() const noexcept { return index_; }
  long index2() const noexcept { return index2_; }

private:
  Errc code_;
  long index_;
  long index2_;
};

} // namespace ctmix

#endif
