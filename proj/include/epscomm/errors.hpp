#pragma once

#include <stdexcept>
#include <string>

namespace epscomm {

/// Base class for every domain error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// operator kernel
struct NotSquare : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct NotPsd : Error { using Error::Error; };
struct SpectralGapTooSmall : Error { using Error::Error; };
struct NotIsometry : Error { using Error::Error; };
struct NotUnitary : Error { using Error::Error; };

// measurement systems
struct NotPovm : Error { using Error::Error; };
struct SingularSum : Error { using Error::Error; };
struct InvalidOutcomeCount : Error { using Error::Error; };
struct InvalidSize : Error { using Error::Error; };
struct NotNearProjective : Error { using Error::Error; };
struct RoundingFailed : Error { using Error::Error; };

// dilations
struct CommutatorBudgetExceeded : Error { using Error::Error; };
struct UnsupportedFamilySize : Error { using Error::Error; };
struct BadTorus : Error { using Error::Error; };
struct NotContraction : Error { using Error::Error; };
struct InconsistentResult : Error { using Error::Error; };

// optimizer
struct Infeasible : Error { using Error::Error; };

// persistence
struct ParseError : Error { using Error::Error; };

}  // namespace epscomm
