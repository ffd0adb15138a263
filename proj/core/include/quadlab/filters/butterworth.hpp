#pragma once

#include <Eigen/Dense>

namespace quadlab {

/// Second-order Butterworth low-pass biquad (bilinear transform with
/// frequency prewarping, Q = 1/sqrt(2)), direct-form-II-transposed state.
/// Single-owner stateful; distinct instances are independent.
struct ButterworthLp2 {
  double cutoff_hz = 0.0;
  double fs_hz = 0.0;
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;  // feedforward
  double a1 = 0.0, a2 = 0.0;            // feedback (a0 normalized to 1)
  double s1 = 0.0, s2 = 0.0;            // DF2T delay registers

  /// One causal streaming update.
  double step(double x) {
    const double y = b0 * x + s1;
    s1 = b1 * x - a1 * y + s2;
    s2 = b2 * x - a2 * y;
    return y;
  }

  void reset() { s1 = s2 = 0.0; }

  /// Seed the delay registers with the step steady state for a constant
  /// input x0, so a stream that starts at x0 has no start-up transient.
  void prime(double x0) {
    s1 = (1.0 - b0) * x0;
    s2 = (b2 - a2) * x0;
  }

  /// Steady-state magnitude response at f [Hz].
  double magnitude(double f_hz) const;
};

/// Throws NyquistViolationError unless 0 < cutoff < fs/2.
ButterworthLp2 design_lowpass(double cutoff_hz, double fs_hz);

/// Forward-backward zero-phase pass with odd-reflection edge padding of
/// three filter time constants. Throws SeriesTooShortError below 6 samples.
Eigen::VectorXd filter_noncausal(const ButterworthLp2& design, const Eigen::VectorXd& series);

}  // namespace quadlab
