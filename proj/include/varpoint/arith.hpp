#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "varpoint/error.hpp"
#include "varpoint/formats.hpp"

namespace varpoint {

/// How the product significand width is chosen.
enum class ProductMode {
  kStrict,      // M_a + M_b bits, every product fits
  kSaturating,  // M_a + M_b - 1 bits, (-2^(M_a-1)) * (-2^(M_b-1)) saturates
};

/// Offline description of a VP multiplier: the product exponent list is the
/// pairwise sum f_out[i_a*K_b + i_b] = f_a[i_a] + f_b[i_b].
class VpProductFormat {
 public:
  VpProductFormat(VpFormat a, VpFormat b, ProductMode mode = ProductMode::kStrict)
      : a_(std::move(a)), b_(std::move(b)), mode_(mode), out_(make_out(a_, b_, mode)) {}

  const VpFormat& src_a() const { return a_; }
  const VpFormat& src_b() const { return b_; }
  const VpFormat& out() const { return out_; }
  ProductMode mode() const { return mode_; }

 private:
  static VpFormat make_out(const VpFormat& a, const VpFormat& b, ProductMode mode) {
    const int m = a.significand_bits() + b.significand_bits() - (mode == ProductMode::kSaturating ? 1 : 0);
    detail::require(m <= 62, "VP product significand exceeds 62 bits");
    std::vector<int> f;
    f.reserve(static_cast<std::size_t>(a.size() * b.size()));
    for (int ea : a.exponents()) {
      for (int eb : b.exponents()) f.push_back(ea + eb);
    }
    return VpFormat(m, std::move(f));
  }

  VpFormat a_;
  VpFormat b_;
  ProductMode mode_;
  VpFormat out_;
};

/// Significands multiply, exponent indices concatenate with `a` in the high
/// bits. The exponent values themselves are never touched.
inline VpValue vp_multiply(const VpProductFormat& fmt, const VpValue& a, const VpValue& b) {
  detail::require(a.fmt == fmt.src_a() && b.fmt == fmt.src_b(), "vp_multiply: operand format mismatch");
  std::int64_t m = a.m * b.m;
  if (m > fmt.out().max_significand()) m = fmt.out().max_significand();
  const int index = (a.i << b.fmt.index_bits()) | b.i;
  return VpValue(fmt.out(), m, index);
}

/// Result format of summing up to `count` operands with full bit growth.
class FxpSumFormat {
 public:
  FxpSumFormat(FxpFormat operand, int count)
      : operand_(operand), count_(count), out_(grow(operand, count)) {}

  const FxpFormat& operand() const { return operand_; }
  int count() const { return count_; }
  const FxpFormat& out() const { return out_; }

 private:
  static FxpFormat grow(FxpFormat operand, int count) {
    detail::require(count >= 1, "adder tree needs at least one operand slot");
    const int growth = std::bit_width(static_cast<unsigned>(count - 1));  // ceil(log2(count))
    detail::require(operand.width() + growth <= kMaxFxpWidth, "adder tree output exceeds 63 bits");
    return operand.widened(growth);
  }

  FxpFormat operand_;
  int count_;
  FxpFormat out_;
};

inline FxpValue fxp_add_tree(const FxpSumFormat& fmt, std::span<const FxpValue> xs) {
  detail::require(static_cast<int>(xs.size()) <= fmt.count(),
                  "adder tree given " + std::to_string(xs.size()) + " operands, sized for " +
                      std::to_string(fmt.count()));
  std::int64_t sum = 0;
  for (const auto& x : xs) {
    detail::require(x.fmt == fmt.operand(), "adder tree operand format mismatch");
    sum += x.raw;
  }
  return FxpValue(fmt.out(), sum);
}

/// Same F, wider W; the raw value is unchanged (sign extension).
inline FxpValue fxp_extend(const FxpValue& x, int width) {
  detail::require(width >= x.fmt.width(), "fxp_extend cannot narrow");
  return FxpValue(FxpFormat(width, x.fmt.frac()), x.raw);
}

/// Negation in place. Throws on the asymmetric minimum; use
/// fxp_negate_widened when that value can occur.
inline FxpValue fxp_negate(const FxpValue& x) {
  detail::require(x.raw != x.fmt.min_raw(), "fxp_negate: -2^(W-1) has no negation in W bits");
  return FxpValue(x.fmt, -x.raw);
}

inline FxpValue fxp_negate_widened(const FxpValue& x) {
  return FxpValue(x.fmt.widened(1), -x.raw);
}

/// Exact FXP x FXP product in FXP(W_a + W_b, F_a + F_b).
inline FxpFormat fxp_product_format(const FxpFormat& a, const FxpFormat& b) {
  detail::require(a.width() + b.width() <= kMaxFxpWidth, "FXP product exceeds 63 bits");
  return FxpFormat(a.width() + b.width(), a.frac() + b.frac());
}

inline FxpValue fxp_multiply(const FxpValue& a, const FxpValue& b) {
  return FxpValue(fxp_product_format(a.fmt, b.fmt), a.raw * b.raw);
}

}  // namespace varpoint
