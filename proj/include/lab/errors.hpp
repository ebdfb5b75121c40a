#pragma once

#include <stdexcept>
#include <string>

namespace lab {

// Base class for all failures raised by the library. Every precondition
// violation throws a subclass so callers can distinguish bad configuration
// from genuine numerical trouble.
struct error : std::runtime_error {
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

struct config_error : error {
  using error::error;
};
// Invalid or empty eigenspace selector (bad mode indices, n not a sum of
// two squares, sin-kind with zero frequency).
struct mode_error : error {
  using error::error;
};
struct chart_error : error {
  using error::error;
};
// Grid or sampling density below the wavelength-resolving threshold.
struct resolution_error : error {
  using error::error;
};
struct window_error : error {
  using error::error;
};
struct parity_error : error {
  using error::error;
};
// Trace vanishes (or nearly vanishes) on the whole segment.
struct degenerate_trace_error : error {
  using error::error;
};
// Derivative order outside the supported range.
struct order_error : error {
  using error::error;
};
struct grid_error : error {
  using error::error;
};
struct range_error : error {
  using error::error;
};
// Fourier support too large for the quadrature grid.
struct aliasing_error : error {
  using error::error;
};
// Not enough data points for a growth-exponent fit.
struct fit_error : error {
  using error::error;
};
struct io_error : error {
  using error::error;
};

}  // namespace lab
