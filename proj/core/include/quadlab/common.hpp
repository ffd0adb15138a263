#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace quadlab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.81;  // NED: +z is down, so gravity is +9.81 on z

/// Base class for all quadlab errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pitch too close to +-90 deg for the Euler kinematics to be invertible.
struct GimbalLockError : Error {
  using Error::Error;
};

/// A vector/matrix argument has the wrong size for the requested operation.
struct DimensionMismatchError : Error {
  using Error::Error;
};

/// Filter cutoff at or above the Nyquist frequency.
struct NyquistViolationError : Error {
  using Error::Error;
};

/// Input series shorter than the filter warm-up needs.
struct SeriesTooShortError : Error {
  using Error::Error;
};

/// Box bounds with lo > hi, or an empty time window.
struct InfeasibleBoundsError : Error {
  using Error::Error;
};

/// Serialized file has an unknown magic/version.
struct VersionMismatchError : Error {
  using Error::Error;
};

/// Serialized file is truncated or internally inconsistent.
struct CorruptFileError : Error {
  using Error::Error;
};

/// KKT system of a quadratic program is numerically singular.
struct SingularKktError : Error {
  using Error::Error;
};

/// Too few optimal-control solves converged while building a dataset.
struct ConvergenceRateError : Error {
  using Error::Error;
};

/// Malformed or out-of-range value in a config file.
struct ConfigError : Error {
  using Error::Error;
};

/// Training produced a non-finite loss.
struct DivergedError : Error {
  using Error::Error;
};

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

/// splitmix64 step; stateless utility for deriving substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic seed for substream `index` of a run seeded with `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// Minimal deterministic PRNG (the splitmix64 stream). Portable across
/// platforms and standard libraries, unlike <random> distributions.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    const std::uint64_t out = splitmix64(state);
    state += 0x9e3779b97f4a7c15ULL;
    return out;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

}  // namespace quadlab
