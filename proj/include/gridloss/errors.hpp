#pragma once

#include <stdexcept>

namespace gridloss {

/// Base class for all domain errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidGraph : Error { using Error::Error; };
struct DisconnectedGraph : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct NotSymmetric : Error { using Error::Error; };
struct NotPSD : Error { using Error::Error; };
struct DegenerateNoise : Error { using Error::Error; };
struct InvalidParameter : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct FullSetRequested : Error { using Error::Error; };
struct InvalidPenalty : Error { using Error::Error; };
struct InvalidK : Error { using Error::Error; };
struct SingularKKT : Error { using Error::Error; };

/// File ingestion failures (missing file, malformed JSON, schema violations).
struct ParseError : Error { using Error::Error; };

}  // namespace gridloss
