#pragma once

// Numerical studies:
//  * NMSE of the quantized equalization product vs operand bitwidth, antenna
//    domain vs beamspace (inputs quantized, product in double).
//  * BER of the bit-exact equalizer datapaths against double-precision LMMSE
//    on common random numbers.
//  * Beamspace NMSE with VP input conversion vs a custom minifloat.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "varpoint/channel.hpp"
#include "varpoint/convert.hpp"
#include "varpoint/error.hpp"
#include "varpoint/formats.hpp"
#include "varpoint/mvm.hpp"

namespace varpoint {

// ---------------------------------------------------------------------------
// Trial scheduling
// ---------------------------------------------------------------------------

/// Runs fn(k) for k in [0, count) on `threads` workers and returns the
/// results in index order, so any reduction over them is thread-count independent.
template <typename Fn>
auto run_trials(std::size_t count, int threads, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> results(count);
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t k = 0; k < count; ++k) results[k] = fn(k);
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < count; k += workers) results[k] = fn(k);
    });
  }
  for (auto& t : pool) t.join();
  return results;
}

/// Dataset-wide class maxima of `trials` regenerated trials of `cfg`.
inline ClassMaxima scan_maxima(const SystemConfig& cfg, std::size_t trials, int threads) {
  const CMatrix dft = dft_matrix(cfg.antennas);
  const auto per_trial = run_trials(trials, threads, [&](std::size_t k) {
    Rng rng = trial_rng(cfg.seed, k);
    ClassMaxima m;
    m.observe(simulate_trial(cfg, rng, dft));
    return m;
  });
  ClassMaxima all;
  for (const auto& m : per_trial) all.merge(m);
  return all;
}

// ---------------------------------------------------------------------------
// NMSE
// ---------------------------------------------------------------------------

enum class Domain { kAntenna, kBeamspace };

inline std::string_view domain_name(Domain d) { return d == Domain::kAntenna ? "antenna" : "beamspace"; }

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

/// Sum of squared errors and of squared reference norms; NMSE = error / reference.
struct NmseAccumulator {
  double error = 0.0;
  double reference = 0.0;

  void add(const CVector& approx, const CVector& exact) {
    error += (approx - exact).squaredNorm();
    reference += exact.squaredNorm();
  }
  void merge(const NmseAccumulator& o) {
    error += o.error;
    reference += o.reference;
  }
  double nmse() const { return reference > 0.0 ? error / reference : 0.0; }
};

/// E||approx - exact||^2 / E||exact||^2 over paired vectors.
inline double nmse_estimate(std::span<const CVector> approx, std::span<const CVector> exact) {
  detail::require(approx.size() == exact.size() && !exact.empty(), "NMSE needs equally many, non-zero vectors");
  NmseAccumulator acc;
  for (std::size_t k = 0; k < exact.size(); ++k) acc.add(approx[k], exact[k]);
  return acc.nmse();
}

/// Element-wise f_{W,F} applied to the real and imaginary parts, returned as reals.
inline CMatrix quantize_matrix(const CMatrix& m, const FxpFormat& fmt) {
  return m.unaryExpr([&](const ComplexSample& z) {
    return ComplexSample(fxp_to_real(fxp_quantize(z.real(), fmt)), fxp_to_real(fxp_quantize(z.imag(), fmt)));
  });
}

struct NmseSweepConfig {
  SystemConfig system;
  std::size_t trials = 10000;
  std::vector<int> bitwidths{6, 7, 8, 9, 10};
  std::vector<Domain> domains{Domain::kAntenna, Domain::kBeamspace};
  double margin = kDefaultNormalizationMargin;
  bool quantize = true;  // false: identity quantizer, NMSE is exactly zero
  int threads = 1;

  void validate() const {
    system.validate();
    detail::require(trials >= 1, "NMSE sweep needs at least one trial");
    detail::require(!bitwidths.empty() && !domains.empty(), "NMSE sweep needs bitwidths and domains");
    for (int w : bitwidths) detail::require(w >= 2 && w <= kMaxFxpWidth, "sweep bitwidth outside [2, 63]");
  }
};

struct NmsePoint {
  Domain domain;
  int width;
  double nmse;
  double nmse_db;
  std::size_t trials;
};

struct NmseResult {
  std::vector<NmsePoint> points;  // domain-major, bitwidths in sweep order
  NormalizationScales scales;

  std::vector<NmsePoint> curve(Domain d) const {
    std::vector<NmsePoint> out;
    for (const auto& p : points)
      if (p.domain == d) out.push_back(p);
    return out;
  }
};

namespace detail {

/// Per-trial squared errors for every (domain, width) pair in sweep order.
inline std::vector<NmseAccumulator> nmse_trial(const NmseSweepConfig& c, const NormalizationScales& scales,
                                               const TrialData& t) {
  std::vector<NmseAccumulator> acc;
  acc.reserve(c.domains.size() * c.bitwidths.size());
  for (Domain d : c.domains) {
    const bool antenna = d == Domain::kAntenna;
    const CMatrix w = (antenna ? t.wbar : t.w) * (antenna ? scales.wbar : scales.w);
    const CVector y = (antenna ? t.ybar : t.y) * (antenna ? scales.ybar : scales.y);
    const CVector exact = w * y;
    for (int width : c.bitwidths) {
      NmseAccumulator a;
      if (c.quantize) {
        const FxpFormat fmt(width, width - 1);
        a.add(quantize_matrix(w, fmt) * quantize_matrix(y, fmt), exact);
      } else {
        a.add(w * y, exact);
      }
      acc.push_back(a);
    }
  }
  return acc;
}

inline NmseResult nmse_collect(const NmseSweepConfig& c, const NormalizationScales& scales,
                               const std::vector<std::vector<NmseAccumulator>>& per_trial) {
  NmseResult r;
  r.scales = scales;
  std::vector<NmseAccumulator> total(c.domains.size() * c.bitwidths.size());
  for (const auto& trial : per_trial)
    for (std::size_t k = 0; k < total.size(); ++k) total[k].merge(trial[k]);
  std::size_t k = 0;
  for (Domain d : c.domains) {
    for (int width : c.bitwidths) {
      const double nmse = total[k++].nmse();
      r.points.push_back({d, width, nmse, to_db(nmse), per_trial.size()});
    }
  }
  return r;
}

}  // namespace detail

/// Generates c.trials trials from c.system.seed. Normalization scales come from
/// a first pass over the same trials, then every input class is scaled into
/// (-1, 1) and quantized to FXP(W, W-1).
inline NmseResult nmse_sweep(const NmseSweepConfig& c) {
  c.validate();
  const auto scales = scan_maxima(c.system, c.trials, c.threads).scales(c.margin);
  const CMatrix dft = dft_matrix(c.system.antennas);
  const auto per_trial = run_trials(c.trials, c.threads, [&](std::size_t k) {
    Rng rng = trial_rng(c.system.seed, k);
    return detail::nmse_trial(c, scales, simulate_trial(c.system, rng, dft));
  });
  return detail::nmse_collect(c, scales, per_trial);
}

/// Same sweep over a frozen dataset; c.system and c.trials are ignored.
inline NmseResult nmse_sweep(const NmseSweepConfig& c, std::span<const TrialData> dataset) {
  const auto scales = compute_normalization(dataset, c.margin);
  const auto per_trial = run_trials(dataset.size(), c.threads, [&](std::size_t k) {
    return detail::nmse_trial(c, scales, dataset[k]);
  });
  return detail::nmse_collect(c, scales, per_trial);
}

/// Bitwidth at which a piecewise-linear (W, NMSE_dB) curve reaches `level`.
/// The curve must be strictly decreasing in NMSE.
inline double width_at_level(std::span<const std::pair<double, double>> curve, double level) {
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
    const auto [w0, n0] = curve[k];
    const auto [w1, n1] = curve[k + 1];
    if (level <= n0 && level >= n1) return n0 == n1 ? w0 : w0 + (w1 - w0) * (n0 - level) / (n0 - n1);
  }
  detail::format_error("NMSE level outside the curve");
}

/// Mean horizontal distance (in bits) from curve `a` to curve `b`, averaged
/// uniformly over the NMSE range (dB) both curves cover.
inline double interpolate_bit_gap(std::span<const std::pair<double, double>> a,
                                  std::span<const std::pair<double, double>> b) {
  const auto check = [](std::span<const std::pair<double, double>> c) {
    detail::require(c.size() >= 2, "bit-gap interpolation needs at least two bitwidths per curve");
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
      detail::require(c[k + 1].first > c[k].first, "bitwidths must increase");
      detail::require(c[k + 1].second < c[k].second, "NMSE curve must decrease with bitwidth");
    }
  };
  check(a);
  check(b);
  const double hi = std::min(a.front().second, b.front().second);
  const double lo = std::max(a.back().second, b.back().second);
  detail::require(hi >= lo, "NMSE curves do not overlap");
  if (hi == lo) return width_at_level(b, hi) - width_at_level(a, hi);
  constexpr int kSamples = 1000;
  double sum = 0.0;
  for (int k = 0; k <= kSamples; ++k) {
    const double level = hi - (hi - lo) * k / kSamples;
    // Trapezoid weights.
    const double weight = (k == 0 || k == kSamples) ? 0.5 : 1.0;
    sum += weight * (width_at_level(b, level) - width_at_level(a, level));
  }
  return sum / kSamples;
}

/// Extra bits the beamspace product needs to match the antenna-domain NMSE.
inline double interpolate_bit_gap(const NmseResult& r) {
  const auto curve = [&](Domain d) {
    std::vector<std::pair<double, double>> c;
    for (const auto& p : r.curve(d)) c.emplace_back(p.width, p.nmse_db);
    std::sort(c.begin(), c.end());
    return c;
  };
  return interpolate_bit_gap(curve(Domain::kAntenna), curve(Domain::kBeamspace));
}

// ---------------------------------------------------------------------------
// BER
// ---------------------------------------------------------------------------

/// Multiplier mapping a class with dataset scale `class_scale` onto the full
/// range of `fmt`: after it, every component lies in (-2^(W-1-F), 2^(W-1-F)).
inline double format_scale(double class_scale, const FxpFormat& fmt) { return class_scale * fmt.full_scale(); }

struct BerPoint {
  std::string design;  // "float" for the double-precision reference
  double snr_db;
  std::uint64_t bit_errors;
  std::uint64_t bits;
  double ber;
};

struct BerResult {
  std::vector<BerPoint> points;

  const BerPoint& find(std::string_view design, double snr_db) const {
    for (const auto& p : points)
      if (p.design == design && p.snr_db == snr_db) return p;
    detail::format_error("no BER point for " + std::string(design));
  }
};

struct BerConfig {
  SystemConfig system;
  std::vector<MvmDesignSpec> designs;
  std::vector<double> snr_db{20.0};
  std::size_t trials = 10000;
  double margin = kDefaultNormalizationMargin;
  int threads = 1;
};

namespace detail {

struct DesignRun {
  MvmDesign design;
  bool antenna_domain;
  double w_scale = 1.0;
  double y_scale = 1.0;
};

inline std::vector<ComplexFxp> quantize_entries(const CMatrix& m, double scale, const FxpFormat& fmt) {
  // Row-major, as load_weights expects.
  std::vector<ComplexFxp> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(quantize_complex(m(r, c) * scale, fmt));
  return out;
}

inline std::uint64_t count_bit_errors(const std::vector<int>& sent, const CVector& estimate) {
  std::uint64_t errors = 0;
  for (Eigen::Index u = 0; u < estimate.size(); ++u)
    errors += static_cast<std::uint64_t>(Qam16::bit_errors(sent[static_cast<std::size_t>(u)], Qam16::demap(estimate(u))));
  return errors;
}

}  // namespace detail

/// Runs each design's bit-exact datapath on quantized W and y, demaps to
/// 16-QAM and counts bit errors, alongside double-precision LMMSE on the same
/// trials. Inputs are scaled dataset-wide so each class fills its FXP format.
inline BerResult ber_experiment(const BerConfig& c) {
  c.system.validate();
  detail::require(c.trials >= 1, "BER experiment needs at least one trial");
  BerResult result;
  const CMatrix dft = dft_matrix(c.system.antennas);
  for (double snr : c.snr_db) {
    SystemConfig cfg = c.system;
    cfg.snr_db = snr;
    const auto scales = scan_maxima(cfg, c.trials, c.threads).scales(c.margin);

    std::vector<detail::DesignRun> runs;
    for (const auto& spec : c.designs) {
      detail::DesignRun run{MvmDesign(spec), spec.variant == MvmVariant::kAFxp};
      detail::require(run.design.antennas() == cfg.antennas && run.design.users() == cfg.users,
                      "design dimensions do not match the system");
      run.w_scale = format_scale(run.antenna_domain ? scales.wbar : scales.w, spec.w_format);
      run.y_scale = format_scale(run.antenna_domain ? scales.ybar : scales.y, spec.y_format);
      runs.push_back(std::move(run));
    }

    const auto per_trial = run_trials(c.trials, c.threads, [&](std::size_t k) {
      Rng rng = trial_rng(cfg.seed, k);
      const TrialData t = simulate_trial(cfg, rng, dft);
      std::vector<std::uint64_t> errors;
      errors.reserve(runs.size() + 1);
      errors.push_back(detail::count_bit_errors(t.symbols, t.wbar * t.ybar));
      for (const auto& run : runs) {
        const auto& w = run.antenna_domain ? t.wbar : t.w;
        const auto& y = run.antenna_domain ? t.ybar : t.y;
        const auto wq = detail::quantize_entries(w, run.w_scale, run.design.w_format());
        const auto yq = detail::quantize_entries(y, run.y_scale, run.design.y_format());
        const auto loaded = load_weights(run.design, wq, cfg.users, cfg.antennas);
        const auto out = equalize(run.design, loaded, yq);
        CVector estimate(cfg.users);
        for (int u = 0; u < cfg.users; ++u)
          estimate(u) = to_complex(out[static_cast<std::size_t>(u)]) / (run.w_scale * run.y_scale);
        errors.push_back(detail::count_bit_errors(t.symbols, estimate));
      }
      return errors;
    });

    std::vector<std::uint64_t> totals(runs.size() + 1, 0);
    for (const auto& trial : per_trial)
      for (std::size_t k = 0; k < totals.size(); ++k) totals[k] += trial[k];
    const std::uint64_t bits = static_cast<std::uint64_t>(c.trials) * cfg.users * Qam16::kBitsPerSymbol;
    for (std::size_t k = 0; k < totals.size(); ++k) {
      const std::string name = k == 0 ? "float" : std::string(variant_name(runs[k - 1].design.variant()));
      result.points.push_back({name, snr, totals[k], bits, static_cast<double>(totals[k]) / static_cast<double>(bits)});
    }
  }
  return result;
}

/// |a - b| relative check: a <= factor*b and b <= factor*a (both zero passes).
inline bool within_factor(double a, double b, double factor) { return a <= factor * b && b <= factor * a; }

// ---------------------------------------------------------------------------
// VP vs custom FLP
// ---------------------------------------------------------------------------

struct FlpComparisonConfig {
  SystemConfig system;
  std::size_t trials = 10000;
  FxpFormat y_format{9, 1};
  FxpFormat w_format{12, 11};
  VpFormat vp_y_format{7, {1, -1}};
  VpFormat vp_w_format{7, {11, 9, 7, 6}};
  CflpFormat flp_format{9, 4};
  double margin = kDefaultNormalizationMargin;
  int threads = 1;
};

struct FlpComparisonResult {
  double nmse_vp;
  double nmse_flp;
  double nmse_vp_db() const { return to_db(nmse_vp); }
  double nmse_flp_db() const { return to_db(nmse_flp); }
};

/// Beamspace NMSE of W y with inputs (i) quantized to FXP and converted to VP,
/// (ii) rounded to the custom FLP. Products in double in both cases.
inline FlpComparisonResult flp_comparison(const FlpComparisonConfig& c) {
  c.system.validate();
  const auto scales = scan_maxima(c.system, c.trials, c.threads).scales(c.margin);
  const double w_scale = format_scale(scales.w, c.w_format);
  const double y_scale = format_scale(scales.y, c.y_format);
  const Fxp2VpUnit w_unit(c.w_format, c.vp_w_format);
  const Fxp2VpUnit y_unit(c.y_format, c.vp_y_format);
  const auto via_vp = [](const CMatrix& m, const FxpFormat& fmt, const Fxp2VpUnit& unit) {
    return CMatrix(m.unaryExpr([&](const ComplexSample& z) {
      return ComplexSample(vp_to_real(unit(fxp_quantize(z.real(), fmt))), vp_to_real(unit(fxp_quantize(z.imag(), fmt))));
    }));
  };
  const auto via_flp = [&](const CMatrix& m) {
    return CMatrix(m.unaryExpr([&](const ComplexSample& z) {
      return ComplexSample(cflp_to_real(cflp_quantize(z.real(), c.flp_format)),
                           cflp_to_real(cflp_quantize(z.imag(), c.flp_format)));
    }));
  };
  const CMatrix dft = dft_matrix(c.system.antennas);
  const auto per_trial = run_trials(c.trials, c.threads, [&](std::size_t k) {
    Rng rng = trial_rng(c.system.seed, k);
    const TrialData t = simulate_trial(c.system, rng, dft);
    const CMatrix w = t.w * w_scale;
    const CMatrix y = t.y * y_scale;
    const CVector exact = w * y;
    std::array<NmseAccumulator, 2> acc;
    acc[0].add(via_vp(w, c.w_format, w_unit) * via_vp(y, c.y_format, y_unit), exact);
    acc[1].add(via_flp(w) * via_flp(y), exact);
    return acc;
  });
  NmseAccumulator vp, flp;
  for (const auto& a : per_trial) {
    vp.merge(a[0]);
    flp.merge(a[1]);
  }
  return {vp.nmse(), flp.nmse()};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal form, locale independent.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_nmse_csv(std::ostream& os, const NmseResult& r) {
  os << "domain,W,nmse_db\n";
  for (const auto& p : r.points) os << domain_name(p.domain) << ',' << p.width << ',' << format_double(p.nmse_db) << '\n';
}

inline void write_ber_csv(std::ostream& os, const BerResult& r) {
  os << "design,snr_db,bit_errors,bits,ber\n";
  for (const auto& p : r.points) {
    os << p.design << ',' << format_double(p.snr_db) << ',' << p.bit_errors << ',' << p.bits << ','
       << format_double(p.ber) << '\n';
  }
}

inline void write_flp_csv(std::ostream& os, const FlpComparisonResult& r) {
  os << "format,nmse,nmse_db\n";
  os << "vp," << format_double(r.nmse_vp) << ',' << format_double(r.nmse_vp_db()) << '\n';
  os << "cflp," << format_double(r.nmse_flp) << ',' << format_double(r.nmse_flp_db()) << '\n';
}

}  // namespace varpoint
