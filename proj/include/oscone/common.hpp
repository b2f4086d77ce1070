#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace oscone {

using cxd = std::complex<double>;

// One knob for all thresholded eigenvalue checks; overridable per call.
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kFeasTol = 1e-8;
inline constexpr double kMembershipEps = 1e-6;
inline constexpr double kMembershipTol = 1e-6;
inline constexpr const char* kToolkitVersion = "0.1.0";

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct SizeMismatch : Error { using Error::Error; };
struct NotPositive : Error { using Error::Error; };
struct NotSelfAdjoint : Error { using Error::Error; };
struct PreconditionViolated : Error { using Error::Error; };
struct NotInMaxCone : Error { using Error::Error; };
struct Malformed : Error { using Error::Error; };

}  // namespace oscone
