#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "varpoint/convert.hpp"
#include "varpoint/error.hpp"
#include "varpoint/formats.hpp"

namespace varpoint {

namespace detail {

/// Evenly spaced strictly descending integers from `hi` down to `lo`, K entries.
inline std::vector<int> even_exponent_list(int hi, int lo, int count) {
  std::vector<int> f(static_cast<std::size_t>(count));
  const double step = static_cast<double>(hi - lo) / (count - 1);
  for (int k = 0; k < count; ++k) f[static_cast<std::size_t>(k)] = static_cast<int>(std::lround(hi - step * k));
  f.front() = hi;
  f.back() = lo;
  return f;
}

inline double vp_conversion_mse(const Fxp2VpUnit& unit, std::span<const FxpValue> samples) {
  double acc = 0.0;
  for (const auto& x : samples) {
    const double err = fxp_to_real(x) - vp_to_real(unit(x));
    acc += err * err;
  }
  return acc / static_cast<double>(samples.size());
}

}  // namespace detail

/// Chooses VP(M, f) for signals held in `fxp`.
///
/// The endpoints follow the two sizing rules: f_0 = F keeps full resolution
/// for small inputs and f_(K-1) = M - (W - F) makes the last option hold the
/// whole FXP integer range. Interior entries are found by exhaustive search
/// over strictly descending integer lists, minimizing the mean squared
/// FXP -> VP -> real error over `samples` (quantized to `fxp` with
/// round-to-nearest). Without samples the interior is evenly spaced.
inline VpFormat select_vp_parameters(const FxpFormat& fxp, int significand_bits, int count,
                                     std::span<const double> samples = {}) {
  detail::require(count >= 2 && std::has_single_bit(static_cast<unsigned>(count)),
                  "exponent list length K=" + std::to_string(count) + " must be a power of two >= 2");
  detail::require(significand_bits < fxp.width(), "parameter selection needs M < W");
  const int hi = fxp.frac();
  const int lo = significand_bits - fxp.int_bits();
  detail::require(hi - lo >= count - 1, "no strictly descending list of " + std::to_string(count) +
                                            " exponents fits between " + std::to_string(hi) + " and " +
                                            std::to_string(lo));
  if (samples.empty() || count == 2) {
    return VpFormat(significand_bits, detail::even_exponent_list(hi, lo, count));
  }

  std::vector<FxpValue> quantized;
  quantized.reserve(samples.size());
  for (double x : samples) quantized.push_back(fxp_quantize(x, fxp));

  // Interior entries are a strictly descending choice of count-2 integers in
  // (lo, hi); enumerate them as combinations in lexicographic order.
  const int interior = count - 2;
  std::vector<int> pick(static_cast<std::size_t>(interior));
  for (int k = 0; k < interior; ++k) pick[static_cast<std::size_t>(k)] = hi - 1 - k;

  std::vector<int> best;
  double best_mse = std::numeric_limits<double>::infinity();
  std::vector<int> f(static_cast<std::size_t>(count));
  f.front() = hi;
  f.back() = lo;
  while (true) {
    std::copy(pick.begin(), pick.end(), f.begin() + 1);
    const double mse = detail::vp_conversion_mse(Fxp2VpUnit(fxp, VpFormat(significand_bits, f)), quantized);
    if (mse < best_mse) {
      best_mse = mse;
      best = f;
    }
    // Advance: decrement the rightmost entry that still has room above its lower bound.
    int k = interior - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] - 1 <= lo + (interior - 1 - k)) --k;
    if (k < 0) break;
    --pick[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < interior; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] - 1;
  }
  return VpFormat(significand_bits, std::move(best));
}

}  // namespace varpoint
