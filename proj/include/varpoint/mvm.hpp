#pragma once

// Datapath models of the three matrix-vector-multiplier equalizers:
//   A-FXP  antenna-domain fixed point
//   B-FXP  beamspace fixed point with CSPADE partial-product skipping
//   B-VP   beamspace with VP multipliers and CSPADE
// Every design is U dot-product units, each with B complex multipliers (four
// real multipliers plus add/sub) feeding a full-precision adder tree.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varpoint/arith.hpp"
#include "varpoint/convert.hpp"
#include "varpoint/error.hpp"
#include "varpoint/formats.hpp"

namespace varpoint {

enum class MvmVariant { kAFxp, kBFxp, kBVp };

inline std::string_view variant_name(MvmVariant v) {
  switch (v) {
    case MvmVariant::kAFxp: return "a-fxp";
    case MvmVariant::kBFxp: return "b-fxp";
    case MvmVariant::kBVp: return "b-vp";
  }
  return "?";
}

inline MvmVariant parse_variant(std::string_view name) {
  if (name == "a-fxp") return MvmVariant::kAFxp;
  if (name == "b-fxp") return MvmVariant::kBFxp;
  if (name == "b-vp") return MvmVariant::kBVp;
  throw ConfigError("unknown design '" + std::string(name) + "' (expected a-fxp, b-fxp or b-vp)");
}

/// CSPADE thresholds as real magnitudes in the respective operand formats.
struct CspadeThresholds {
  double tau_y = 0.0;
  double tau_w = 0.0;
};

/// Default threshold for an operand format: 2^-(F-3), i.e. eight LSBs.
inline double default_cspade_threshold(const FxpFormat& fmt) { return std::ldexp(1.0, -(fmt.frac() - 3)); }

/// User-facing description of a design; MvmDesign validates it and derives
/// every internal format.
struct MvmDesignSpec {
  MvmVariant variant = MvmVariant::kAFxp;
  int antennas = 64;
  int users = 8;
  FxpFormat y_format{7, 1};
  FxpFormat w_format{11, 10};
  std::optional<VpFormat> vp_y_format;
  std::optional<VpFormat> vp_w_format;
  ProductMode product_mode = ProductMode::kStrict;
  CspadeThresholds thresholds;
  bool cspade_enabled = false;
};

/// Reference input formats for one variant, with default CSPADE thresholds.
inline MvmDesignSpec reference_preset(MvmVariant variant, int antennas = 64, int users = 8) {
  MvmDesignSpec s;
  s.variant = variant;
  s.antennas = antennas;
  s.users = users;
  switch (variant) {
    case MvmVariant::kAFxp:
      s.y_format = FxpFormat(7, 1);
      s.w_format = FxpFormat(11, 10);
      break;
    case MvmVariant::kBFxp:
      s.y_format = FxpFormat(9, 1);
      s.w_format = FxpFormat(12, 11);
      break;
    case MvmVariant::kBVp:
      s.y_format = FxpFormat(9, 1);
      s.w_format = FxpFormat(12, 11);
      s.vp_y_format = VpFormat(7, {1, -1});
      s.vp_w_format = VpFormat(7, {11, 9, 7, 6});
      break;
  }
  if (variant != MvmVariant::kAFxp) {
    s.cspade_enabled = true;
    s.thresholds = {default_cspade_threshold(s.y_format), default_cspade_threshold(s.w_format)};
  }
  return s;
}

struct ComplexFxp {
  ComplexFxp(FxpValue real, FxpValue imag) : re(real), im(imag) {
    detail::require(re.fmt == im.fmt, "complex FXP parts must share a format");
  }

  const FxpFormat& fmt() const { return re.fmt; }

  FxpValue re;
  FxpValue im;

  friend bool operator==(const ComplexFxp&, const ComplexFxp&) = default;
};

inline ComplexFxp quantize_complex(ComplexSample z, FxpFormat fmt, RoundingMode mode = RoundingMode::kNearestEven) {
  return {fxp_quantize(z.real(), fmt, mode), fxp_quantize(z.imag(), fmt, mode)};
}

inline ComplexSample to_complex(const ComplexFxp& z) { return {fxp_to_real(z.re), fxp_to_real(z.im)}; }

/// Mute flags in RM order: (w_re,y_re), (w_im,y_im), (w_re,y_im), (w_im,y_re).
using MuteFlags = std::array<bool, 4>;

/// An operand as it sits inside a dot-product unit: the FXP input and, for
/// B-VP, its FXP2VP-converted real and imaginary parts.
struct PreparedOperand {
  ComplexFxp fxp;
  std::optional<VpValue> vp_re;
  std::optional<VpValue> vp_im;
};

class MvmDesign {
 public:
  explicit MvmDesign(MvmDesignSpec spec) : spec_(std::move(spec)) {
    detail::require(spec_.antennas >= 1 && spec_.users >= 1, "MVM needs B >= 1 and U >= 1");
    if (spec_.variant == MvmVariant::kAFxp) spec_.cspade_enabled = false;
    detail::require(spec_.thresholds.tau_y >= 0.0 && spec_.thresholds.tau_w >= 0.0,
                    "CSPADE thresholds must be non-negative");

    if (spec_.variant == MvmVariant::kBVp) {
      detail::require(spec_.vp_y_format.has_value() && spec_.vp_w_format.has_value(),
                      "B-VP design needs VP formats for y and W");
      vp_.emplace(VpPath{
          Fxp2VpUnit(spec_.y_format, *spec_.vp_y_format),
          Fxp2VpUnit(spec_.w_format, *spec_.vp_w_format),
          VpProductFormat(*spec_.vp_y_format, *spec_.vp_w_format, spec_.product_mode),
          std::nullopt,
      });
      product_format_ = vp2fxp_required_format(vp_->product.out());
      vp_->to_fxp.emplace(vp_->product.out(), *product_format_);
    } else {
      product_format_ = fxp_product_format(spec_.w_format, spec_.y_format);
    }
    detail::require(product_format_->width() + 1 <= kMaxFxpWidth, "complex multiplier output exceeds 63 bits");
    cm_format_ = product_format_->widened(1);
    sum_format_.emplace(*cm_format_, spec_.antennas);

    raw_tau_y_ = raw_threshold(spec_.thresholds.tau_y, spec_.y_format);
    raw_tau_w_ = raw_threshold(spec_.thresholds.tau_w, spec_.w_format);
  }

  const MvmDesignSpec& spec() const { return spec_; }
  MvmVariant variant() const { return spec_.variant; }
  int antennas() const { return spec_.antennas; }
  int users() const { return spec_.users; }
  const FxpFormat& y_format() const { return spec_.y_format; }
  const FxpFormat& w_format() const { return spec_.w_format; }
  bool cspade_enabled() const { return spec_.cspade_enabled; }

  /// Format of one real-multiplier result after VP2FXP (or of the plain FXP product).
  const FxpFormat& product_format() const { return *product_format_; }
  /// Format of a complex-multiplier output component (one add/sub).
  const FxpFormat& cm_format() const { return *cm_format_; }
  /// Format of the adder-tree output.
  const FxpFormat& output_format() const { return sum_format_->out(); }
  const FxpSumFormat& sum_format() const { return *sum_format_; }

  /// Raw-integer thresholds: |raw| < raw_tau  <=>  |value| < tau.
  std::int64_t raw_tau_y() const { return raw_tau_y_; }
  std::int64_t raw_tau_w() const { return raw_tau_w_; }

  const VpProductFormat* vp_product() const { return vp_ ? &vp_->product : nullptr; }

  PreparedOperand prepare_y(const ComplexFxp& y) const {
    detail::require(y.fmt() == spec_.y_format, "y operand format mismatch");
    if (!vp_) return {y, std::nullopt, std::nullopt};
    return {y, vp_->y_unit(y.re), vp_->y_unit(y.im)};
  }

  PreparedOperand prepare_w(const ComplexFxp& w) const {
    detail::require(w.fmt() == spec_.w_format, "W operand format mismatch");
    if (!vp_) return {w, std::nullopt, std::nullopt};
    return {w, vp_->w_unit(w.re), vp_->w_unit(w.im)};
  }

  /// One real multiplier, result in product_format(). B-VP multiplies the VP
  /// significands (y operand in the high index bits) and converts back.
  FxpValue real_multiply(const FxpValue& w, const std::optional<VpValue>& w_vp, const FxpValue& y,
                         const std::optional<VpValue>& y_vp) const {
    if (!vp_) return FxpValue(*product_format_, w.raw * y.raw);
    return vp_->to_fxp.value()(vp_multiply(vp_->product, *y_vp, *w_vp));
  }

 private:
  struct VpPath {
    Fxp2VpUnit y_unit;
    Fxp2VpUnit w_unit;
    VpProductFormat product;
    std::optional<Vp2FxpUnit> to_fxp;
  };

  static std::int64_t raw_threshold(double tau, const FxpFormat& fmt) {
    const double scaled = std::ceil(std::ldexp(tau, fmt.frac()));
    const double cap = std::ldexp(1.0, 62);
    return scaled >= cap ? std::int64_t{1} << 62 : static_cast<std::int64_t>(scaled);
  }

  MvmDesignSpec spec_;
  std::optional<VpPath> vp_;
  std::optional<FxpFormat> product_format_;
  std::optional<FxpFormat> cm_format_;
  std::optional<FxpSumFormat> sum_format_;
  std::int64_t raw_tau_y_ = 0;
  std::int64_t raw_tau_w_ = 0;
};

/// CSPADE rule: mute an RM iff both of its operands are below threshold.
inline MuteFlags cspade_decide(const MvmDesign& design, const ComplexFxp& w, const ComplexFxp& y) {
  if (!design.cspade_enabled()) return {false, false, false, false};
  const auto small_w = [&](const FxpValue& v) { return (v.raw < 0 ? -v.raw : v.raw) < design.raw_tau_w(); };
  const auto small_y = [&](const FxpValue& v) { return (v.raw < 0 ? -v.raw : v.raw) < design.raw_tau_y(); };
  const bool wr = small_w(w.re), wi = small_w(w.im), yr = small_y(y.re), yi = small_y(y.im);
  return {wr && yr, wi && yi, wr && yi, wi && yr};
}

namespace detail {

inline ComplexFxp complex_multiply_prepared(const MvmDesign& design, const PreparedOperand& w,
                                            const PreparedOperand& y, const MuteFlags& mute) {
  const FxpValue zero(design.product_format(), 0);
  const auto rm = [&](bool muted, const FxpValue& a, const std::optional<VpValue>& a_vp, const FxpValue& b,
                      const std::optional<VpValue>& b_vp) {
    return muted ? zero : design.real_multiply(a, a_vp, b, b_vp);
  };
  const FxpValue rr = rm(mute[0], w.fxp.re, w.vp_re, y.fxp.re, y.vp_re);
  const FxpValue ii = rm(mute[1], w.fxp.im, w.vp_im, y.fxp.im, y.vp_im);
  const FxpValue ri = rm(mute[2], w.fxp.re, w.vp_re, y.fxp.im, y.vp_im);
  const FxpValue ir = rm(mute[3], w.fxp.im, w.vp_im, y.fxp.re, y.vp_re);
  // One bit of growth holds any sum or difference of two products.
  return {FxpValue(design.cm_format(), rr.raw - ii.raw), FxpValue(design.cm_format(), ri.raw + ir.raw)};
}

}  // namespace detail

/// w * y with the four real multiplications individually mutable. Output in
/// design.cm_format().
inline ComplexFxp complex_multiply(const MvmDesign& design, const ComplexFxp& w, const ComplexFxp& y,
                                   const MuteFlags& mute = {false, false, false, false}) {
  return detail::complex_multiply_prepared(design, design.prepare_w(w), design.prepare_y(y), mute);
}

/// Equalization matrix rows as latched into the dot-product units. For B-VP
/// the weights are converted to VP once, here.
class LoadedWeights {
 public:
  int users() const { return users_; }
  int antennas() const { return antennas_; }
  const ComplexFxp& at(int u, int b) const { return entries_[index(u, b)].fxp; }
  const PreparedOperand& prepared(int u, int b) const { return entries_[index(u, b)]; }

 private:
  friend LoadedWeights load_weights(const MvmDesign& design, std::span<const ComplexFxp> w, int users, int antennas);

  std::size_t index(int u, int b) const { return static_cast<std::size_t>(u) * antennas_ + b; }

  int users_ = 0;
  int antennas_ = 0;
  std::vector<PreparedOperand> entries_;
};

/// `w` is the U x B matrix in row-major order.
inline LoadedWeights load_weights(const MvmDesign& design, std::span<const ComplexFxp> w, int users, int antennas) {
  detail::require(users == design.users() && antennas == design.antennas(),
                  "weight matrix is " + std::to_string(users) + "x" + std::to_string(antennas) + ", design is " +
                      std::to_string(design.users()) + "x" + std::to_string(design.antennas()));
  detail::require(w.size() == static_cast<std::size_t>(users) * antennas, "weight matrix size mismatch");
  LoadedWeights loaded;
  loaded.users_ = users;
  loaded.antennas_ = antennas;
  loaded.entries_.reserve(w.size());
  for (const auto& entry : w) loaded.entries_.push_back(design.prepare_w(entry));
  return loaded;
}

/// s_hat = W y through the design's datapath; U outputs in design.output_format().
inline std::vector<ComplexFxp> equalize(const MvmDesign& design, const LoadedWeights& weights,
                                        std::span<const ComplexFxp> y) {
  detail::require(weights.users() == design.users() && weights.antennas() == design.antennas(),
                  "weights were loaded for a different design size");
  detail::require(static_cast<int>(y.size()) == design.antennas(),
                  "received vector has " + std::to_string(y.size()) + " entries, design expects " +
                      std::to_string(design.antennas()));
  std::vector<PreparedOperand> prepared;
  prepared.reserve(y.size());
  for (const auto& entry : y) prepared.push_back(design.prepare_y(entry));

  std::vector<ComplexFxp> out;
  out.reserve(static_cast<std::size_t>(design.users()));
  std::vector<FxpValue> re_terms, im_terms;
  re_terms.reserve(y.size());
  im_terms.reserve(y.size());
  for (int u = 0; u < design.users(); ++u) {
    re_terms.clear();
    im_terms.clear();
    for (int b = 0; b < design.antennas(); ++b) {
      const auto& w = weights.prepared(u, b);
      const auto& yb = prepared[static_cast<std::size_t>(b)];
      const auto mute = cspade_decide(design, w.fxp, yb.fxp);
      const auto p = detail::complex_multiply_prepared(design, w, yb, mute);
      re_terms.push_back(p.re);
      im_terms.push_back(p.im);
    }
    out.emplace_back(fxp_add_tree(design.sum_format(), re_terms), fxp_add_tree(design.sum_format(), im_terms));
  }
  return out;
}

}  // namespace varpoint
