#include "quadlab/filters/butterworth.hpp"

#include "quadlab/common.hpp"

#include <cmath>
#include <complex>

namespace quadlab {

ButterworthLp2 design_lowpass(double cutoff_hz, double fs_hz) {
  if (!(cutoff_hz > 0.0) || !(fs_hz > 0.0) || cutoff_hz >= 0.5 * fs_hz) {
    throw NyquistViolationError("butterworth: need 0 < cutoff < fs/2");
  }
  // Prewarped bilinear transform of s^2 + s/Q + 1 (normalized analog
  // prototype), K = tan(pi fc / fs), Q = 1/sqrt(2).
  const double K = std::tan(kPi * cutoff_hz / fs_hz);
  const double q = 1.0 / std::sqrt(2.0);
  const double norm = 1.0 / (1.0 + K / q + K * K);
  ButterworthLp2 f;
  f.cutoff_hz = cutoff_hz;
  f.fs_hz = fs_hz;
  f.b0 = K * K * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (K * K - 1.0) * norm;
  f.a2 = (1.0 - K / q + K * K) * norm;
  return f;
}

double ButterworthLp2::magnitude(double f_hz) const {
  const std::complex<double> z = std::polar(1.0, -2.0 * kPi * f_hz / fs_hz);
  const std::complex<double> num = b0 + (b1 + b2 * z) * z;
  const std::complex<double> den = 1.0 + (a1 + a2 * z) * z;
  return std::abs(num / den);
}

Eigen::VectorXd filter_noncausal(const ButterworthLp2& design, const Eigen::VectorXd& series) {
  const Eigen::Index n = series.size();
  if (n < 6) throw SeriesTooShortError("filter_noncausal: need at least 6 samples");

  // Odd reflection about the endpoints over ~three time constants removes
  // the start-up transient of each pass.
  const Eigen::Index pad = std::min<Eigen::Index>(
      n - 1, static_cast<Eigen::Index>(std::ceil(3.0 * design.fs_hz / (2.0 * kPi * design.cutoff_hz))));
  Eigen::VectorXd ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i) {
    ext(i) = 2.0 * series(0) - series(pad - i);
  }
  ext.segment(pad, n) = series;
  for (Eigen::Index i = 0; i < pad; ++i) {
    ext(pad + n + i) = 2.0 * series(n - 1) - series(n - 2 - i);
  }

  ButterworthLp2 f = design;
  f.prime(ext(0));
  for (Eigen::Index i = 0; i < ext.size(); ++i) ext(i) = f.step(ext(i));
  f.prime(ext(ext.size() - 1));
  for (Eigen::Index i = ext.size(); i-- > 0;) ext(i) = f.step(ext(i));
  return ext.segment(pad, n);
}

}  // namespace quadlab
