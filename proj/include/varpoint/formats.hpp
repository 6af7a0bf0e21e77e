#pragma once

// Number formats: two's-complement fixed point FXP(W,F), variable point
// VP(M,f) and a minimal custom floating point used as an accuracy baseline.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "varpoint/error.hpp"

namespace varpoint {

using ComplexSample = std::complex<double>;

inline constexpr int kMaxFxpWidth = 63;

// ---------------------------------------------------------------------------
// FXP
// ---------------------------------------------------------------------------

/// W-bit two's-complement fixed point with F fractional bits.
class FxpFormat {
 public:
  FxpFormat(int width, int frac) : width_(width), frac_(frac) {
    detail::require(width >= 2 && width <= kMaxFxpWidth,
                    "FXP width W=" + std::to_string(width) + " outside [2, 63]");
    detail::require(frac >= 0 && frac <= width - 1,
                    "FXP fractional bits F=" + std::to_string(frac) + " outside [0, W-1]");
  }

  int width() const { return width_; }
  int frac() const { return frac_; }
  int int_bits() const { return width_ - frac_; }

  std::int64_t min_raw() const { return -(std::int64_t{1} << (width_ - 1)); }
  std::int64_t max_raw() const { return (std::int64_t{1} << (width_ - 1)) - 1; }
  bool contains(std::int64_t raw) const { return raw >= min_raw() && raw <= max_raw(); }

  double lsb() const { return std::ldexp(1.0, -frac_); }
  /// Largest representable magnitude on the positive side, 2^(W-1-F) - lsb.
  double max_value() const { return std::ldexp(static_cast<double>(max_raw()), -frac_); }
  /// 2^(W-1-F): every real in (-full_scale, full_scale) quantizes without clipping
  /// except within one LSB of the positive edge.
  double full_scale() const { return std::ldexp(1.0, width_ - 1 - frac_); }

  /// Same F, W grown by `bits`.
  FxpFormat widened(int bits) const { return FxpFormat(width_ + bits, frac_); }

  friend bool operator==(const FxpFormat&, const FxpFormat&) = default;

 private:
  int width_;
  int frac_;
};

struct FxpValue {
  FxpValue(FxpFormat format, std::int64_t raw_value) : fmt(format), raw(raw_value) {
    detail::require(fmt.contains(raw), "raw value " + std::to_string(raw) +
                                           " does not fit FXP(" + std::to_string(fmt.width()) +
                                           "," + std::to_string(fmt.frac()) + ")");
  }

  FxpFormat fmt;
  std::int64_t raw;

  friend bool operator==(const FxpValue&, const FxpValue&) = default;
};

enum class RoundingMode {
  kNearestEven,
  kFloor,  // truncation toward -inf, what dropping LSBs does in hardware
};

/// f_{W,F}: scale by 2^F, round, saturate to the representable range.
inline FxpValue fxp_quantize(double x, FxpFormat fmt, RoundingMode mode = RoundingMode::kNearestEven) {
  detail::require(std::isfinite(x), "fxp_quantize: non-finite input");
  const double scaled = std::ldexp(x, fmt.frac());
  const double rounded = mode == RoundingMode::kNearestEven ? std::nearbyint(scaled) : std::floor(scaled);
  // Compare in double before converting; both limits are exact powers of two (minus one).
  if (rounded <= static_cast<double>(fmt.min_raw())) return {fmt, fmt.min_raw()};
  if (rounded >= static_cast<double>(fmt.max_raw())) return {fmt, fmt.max_raw()};
  return {fmt, static_cast<std::int64_t>(rounded)};
}

inline double fxp_to_real(const FxpValue& v) {
  return std::ldexp(static_cast<double>(v.raw), -v.fmt.frac());
}

// ---------------------------------------------------------------------------
// VP
// ---------------------------------------------------------------------------

/// VP(M, f): M-bit two's-complement significand plus an index into the
/// exponent list f of fractional-length options. The list is shared between
/// copies, so values can carry their format cheaply.
class VpFormat {
 public:
  VpFormat(int significand_bits, std::vector<int> exponents)
      : data_(std::make_shared<const Data>(make_data(significand_bits, std::move(exponents)))) {}
  VpFormat(int significand_bits, std::initializer_list<int> exponents)
      : VpFormat(significand_bits, std::vector<int>(exponents)) {}

  int significand_bits() const { return data_->m; }
  std::span<const int> exponents() const { return data_->f; }
  int exponent(int index) const { return data_->f[static_cast<std::size_t>(index)]; }
  int size() const { return static_cast<int>(data_->f.size()); }
  /// E = log2(K).
  int index_bits() const { return std::countr_zero(static_cast<unsigned>(data_->f.size())); }
  bool sorted_descending() const { return data_->sorted_descending; }
  int max_exponent() const { return *std::max_element(data_->f.begin(), data_->f.end()); }
  int min_exponent() const { return *std::min_element(data_->f.begin(), data_->f.end()); }

  std::int64_t min_significand() const { return -(std::int64_t{1} << (data_->m - 1)); }
  std::int64_t max_significand() const { return (std::int64_t{1} << (data_->m - 1)) - 1; }

  friend bool operator==(const VpFormat& a, const VpFormat& b) {
    return a.data_ == b.data_ || (a.data_->m == b.data_->m && a.data_->f == b.data_->f);
  }

 private:
  struct Data {
    int m;
    std::vector<int> f;
    bool sorted_descending;
  };

  static Data make_data(int m, std::vector<int> f) {
    detail::require(m >= 2 && m <= 62, "VP significand width M=" + std::to_string(m) + " outside [2, 62]");
    detail::require(!f.empty() && std::has_single_bit(f.size()),
                    "VP exponent list length " + std::to_string(f.size()) + " is not a power of two");
    for (int e : f) {
      detail::require(e >= -512 && e <= 512, "VP exponent " + std::to_string(e) + " outside [-512, 512]");
    }
    const bool sorted = std::is_sorted(f.begin(), f.end(), std::greater<>());
    return Data{m, std::move(f), sorted};
  }

  std::shared_ptr<const Data> data_;
};

struct VpValue {
  VpValue(VpFormat format, std::int64_t significand, int exponent_index)
      : fmt(std::move(format)), m(significand), i(exponent_index) {
    detail::require(m >= fmt.min_significand() && m <= fmt.max_significand(),
                    "significand " + std::to_string(m) + " does not fit " +
                        std::to_string(fmt.significand_bits()) + " bits");
    detail::require(i >= 0 && i < fmt.size(), "exponent index " + std::to_string(i) + " out of range");
  }

  VpFormat fmt;
  std::int64_t m;
  int i;

  friend bool operator==(const VpValue&, const VpValue&) = default;
};

/// x = m * 2^(-f_i)
inline double vp_to_real(const VpValue& v) {
  return std::ldexp(static_cast<double>(v.m), -v.fmt.exponent(v.i));
}

// ---------------------------------------------------------------------------
// Custom FLP
// ---------------------------------------------------------------------------

/// Sign, `mantissa_bits` fraction bits behind an implicit leading one, and an
/// `exponent_bits` biased exponent. Every exponent code is a normal number;
/// zero has its own encoding. No NaN, infinity or denormals.
class CflpFormat {
 public:
  CflpFormat(int mantissa_bits, int exponent_bits)
      : CflpFormat(mantissa_bits, exponent_bits, 1 << (exponent_bits - 1)) {}
  CflpFormat(int mantissa_bits, int exponent_bits, int bias)
      : mantissa_bits_(mantissa_bits), exponent_bits_(exponent_bits), bias_(bias) {
    detail::require(mantissa_bits >= 1 && mantissa_bits <= 51, "FLP mantissa bits outside [1, 51]");
    detail::require(exponent_bits >= 1 && exponent_bits <= 10, "FLP exponent bits outside [1, 10]");
  }

  int mantissa_bits() const { return mantissa_bits_; }
  int exponent_bits() const { return exponent_bits_; }
  int bias() const { return bias_; }
  int min_exponent() const { return -bias_; }
  int max_exponent() const { return (1 << exponent_bits_) - 1 - bias_; }
  double min_normal() const { return std::ldexp(1.0, min_exponent()); }
  double max_value() const {
    return std::ldexp(2.0 - std::ldexp(1.0, -mantissa_bits_), max_exponent());
  }

  friend bool operator==(const CflpFormat&, const CflpFormat&) = default;

 private:
  int mantissa_bits_;
  int exponent_bits_;
  int bias_;
};

struct CflpValue {
  CflpFormat fmt;
  bool negative = false;
  bool zero = true;
  int exponent_code = 0;       // biased
  std::uint64_t mantissa = 0;  // fraction field, implicit one not stored

  friend bool operator==(const CflpValue&, const CflpValue&) = default;
};

inline double cflp_to_real(const CflpValue& v) {
  if (v.zero) return 0.0;
  const int p = v.fmt.mantissa_bits();
  const double magnitude = std::ldexp(static_cast<double>((std::uint64_t{1} << p) | v.mantissa),
                                      v.exponent_code - v.fmt.bias() - p);
  return v.negative ? -magnitude : magnitude;
}

/// Nearest representable value (ties to even mantissa). Magnitudes past the
/// largest value saturate; tiny magnitudes go to zero or the smallest normal,
/// whichever is nearer.
inline CflpValue cflp_quantize(double x, CflpFormat fmt) {
  detail::require(std::isfinite(x), "cflp_quantize: non-finite input");
  CflpValue out{fmt};
  if (x == 0.0) return out;
  out.negative = std::signbit(x);
  const double mag = std::fabs(x);
  const int p = fmt.mantissa_bits();

  auto set = [&](int unbiased, std::uint64_t fraction) {
    out.zero = false;
    out.exponent_code = unbiased + fmt.bias();
    out.mantissa = fraction;
  };

  int e2 = 0;
  const double fr = std::frexp(mag, &e2);  // mag = fr * 2^e2, fr in [0.5, 1)
  int unbiased = e2 - 1;
  if (unbiased < fmt.min_exponent()) {
    if (mag > 0.5 * fmt.min_normal()) set(fmt.min_exponent(), 0);
    return out;
  }
  double sig = std::nearbyint(std::ldexp(fr, p + 1));  // in [2^p, 2^(p+1)]
  if (sig == std::ldexp(1.0, p + 1)) {
    sig = std::ldexp(1.0, p);
    ++unbiased;
  }
  if (unbiased > fmt.max_exponent()) {
    set(fmt.max_exponent(), (std::uint64_t{1} << p) - 1);
    return out;
  }
  set(unbiased, static_cast<std::uint64_t>(sig) - (std::uint64_t{1} << p));
  return out;
}

}  // namespace varpoint
