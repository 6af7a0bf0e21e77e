#pragma once

// FXP <-> VP conversion units. Each unit is fixed to one (FXP, VP) format pair
// at construction, the way the combinational converters are synthesized for a
// single parameter set.

#include <cstdint>
#include <string>
#include <vector>

#include "varpoint/error.hpp"
#include "varpoint/formats.hpp"

namespace varpoint {

namespace detail {

inline std::string fxp_name(const FxpFormat& f) {
  return "FXP(" + std::to_string(f.width()) + "," + std::to_string(f.frac()) + ")";
}

inline std::string vp_name(const VpFormat& f) {
  std::string s = "VP(" + std::to_string(f.significand_bits()) + ",[";
  for (int k = 0; k < f.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(f.exponent(k));
  }
  return s + "])";
}

/// Sign-extend the low `bits` bits of `x`.
inline std::int64_t sign_extend(std::int64_t x, int bits) {
  const int shift = 64 - bits;
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(x) << shift) >> shift;
}

}  // namespace detail

/// FXP(W,F) -> VP(M,f) converter.
///
/// For option k the unit checks x[W-1 : M+(F-f_k)-1] for equality; a priority
/// (leading-one) detector picks the first passing option and the significand is
/// the M-bit window x[(F-f_i)+M-1 : F-f_i]. Discarded LSBs are truncated.
class Fxp2VpUnit {
 public:
  Fxp2VpUnit(FxpFormat src, VpFormat dst) : src_(src), dst_(std::move(dst)) {
    const int w = src_.width();
    const int f = src_.frac();
    const int m = dst_.significand_bits();
    detail::require(dst_.sorted_descending(),
                    "FXP2VP needs a descending exponent list, got " + detail::vp_name(dst_));
    detail::require(w > m, "FXP2VP needs W > M: " + detail::fxp_name(src_) + " -> " + detail::vp_name(dst_));
    detail::require(f >= dst_.max_exponent(),
                    "FXP2VP needs F >= max(f): " + detail::fxp_name(src_) + " -> " + detail::vp_name(dst_));
    detail::require(w - f <= m - dst_.min_exponent(),
                    "FXP2VP coverage W-F <= M-min(f) violated: " + detail::fxp_name(src_) + " -> " +
                        detail::vp_name(dst_));
    shifts_.reserve(static_cast<std::size_t>(dst_.size()));
    group_lsb_.reserve(static_cast<std::size_t>(dst_.size()));
    for (int e : dst_.exponents()) {
      shifts_.push_back(f - e);
      group_lsb_.push_back(m + (f - e) - 1);
    }
  }

  const FxpFormat& src() const { return src_; }
  const VpFormat& dst() const { return dst_; }

  /// Lowest bit of the MSB group checked for option k; a group that starts at
  /// or above the sign bit is vacuously equal.
  int group_lsb(int k) const { return group_lsb_[static_cast<std::size_t>(k)]; }

  VpValue operator()(const FxpValue& x) const {
    detail::require(x.fmt == src_, "fxp2vp: operand is " + detail::fxp_name(x.fmt) + ", unit expects " +
                                       detail::fxp_name(src_));
    const int index = select(x.raw);
    const int shift = shifts_[static_cast<std::size_t>(index)];
    const int m = dst_.significand_bits();
    const std::int64_t window = detail::sign_extend(x.raw >> shift, m);
    return VpValue(dst_, window, index);
  }

 private:
  int select(std::int64_t raw) const {
    const int msb = src_.width() - 1;
    for (std::size_t k = 0; k < group_lsb_.size(); ++k) {
      const int lsb = group_lsb_[k];
      if (lsb >= msb) return static_cast<int>(k);
      // Bits [msb:lsb] are all equal iff they are pure sign extension.
      const std::int64_t top = raw >> lsb;
      if (top == 0 || top == -1) return static_cast<int>(k);
    }
    // Unreachable under the coverage invariant.
    return static_cast<int>(group_lsb_.size()) - 1;
  }

  FxpFormat src_;
  VpFormat dst_;
  std::vector<int> shifts_;
  std::vector<int> group_lsb_;
};

inline VpValue fxp2vp(const Fxp2VpUnit& unit, const FxpValue& x) { return unit(x); }

/// Reference FXP->VP conversion by exact integer arithmetic: the first option
/// whose floor(raw * 2^(f_k - F)) fits in M bits.
inline VpValue fxp2vp_oracle(const FxpFormat& src, const VpFormat& dst, const FxpValue& x) {
  detail::require(x.fmt == src, "fxp2vp_oracle: format mismatch");
  for (int k = 0; k < dst.size(); ++k) {
    const int drop = src.frac() - dst.exponent(k);
    detail::require(drop >= 0 && drop < 63, "fxp2vp_oracle: needs F >= max(f)");
    const std::int64_t divisor = std::int64_t{1} << drop;
    std::int64_t q = x.raw / divisor;
    if (x.raw % divisor != 0 && x.raw < 0) --q;
    if (q >= dst.min_significand() && q <= dst.max_significand()) return VpValue(dst, q, k);
  }
  detail::format_error("fxp2vp_oracle: no option holds " + std::to_string(x.raw) + " (coverage violated)");
}

/// VP(M,f) -> FXP(W,F) converter: zero-pad the significand with W-M LSBs, then
/// shift arithmetically right by S_k = (W-F) - (M-f_k). Only exact
/// configurations (0 <= S_k <= W-M for every k) are accepted.
class Vp2FxpUnit {
 public:
  Vp2FxpUnit(VpFormat src, FxpFormat dst) : src_(std::move(src)), dst_(dst) {
    const int w = dst_.width();
    const int m = src_.significand_bits();
    detail::require(w >= m, "VP2FXP needs W >= M: " + detail::vp_name(src_) + " -> " + detail::fxp_name(dst_));
    for (int e : src_.exponents()) {
      const int s = (w - dst_.frac()) - (m - e);
      detail::require(s >= 0 && s <= w - m, "VP2FXP shift S=" + std::to_string(s) + " for f=" +
                                                std::to_string(e) + " outside [0, W-M]: " +
                                                detail::vp_name(src_) + " -> " + detail::fxp_name(dst_));
      shifts_.push_back(s);
    }
  }

  const VpFormat& src() const { return src_; }
  const FxpFormat& dst() const { return dst_; }
  int shift(int k) const { return shifts_[static_cast<std::size_t>(k)]; }

  FxpValue operator()(const VpValue& v) const {
    detail::require(v.fmt == src_, "vp2fxp: operand is " + detail::vp_name(v.fmt) + ", unit expects " +
                                       detail::vp_name(src_));
    const int pad = dst_.width() - src_.significand_bits();
    const std::int64_t padded = v.m * (std::int64_t{1} << pad);
    return FxpValue(dst_, padded >> shifts_[static_cast<std::size_t>(v.i)]);
  }

 private:
  VpFormat src_;
  FxpFormat dst_;
  std::vector<int> shifts_;
};

inline FxpValue vp2fxp(const Vp2FxpUnit& unit, const VpValue& v) { return unit(v); }

/// Smallest FXP format that receives every value of `src` exactly:
/// F = max(f), W = F + M - min(f).
inline FxpFormat vp2fxp_required_format(const VpFormat& src) {
  const int f = src.max_exponent();
  return FxpFormat(f + src.significand_bits() - src.min_exponent(), f);
}

}  // namespace varpoint
