#pragma once

// Uplink massive MU-MIMO trial generation in double precision:
//   ybar = Hbar s + nbar            (antenna domain)
//   y = F ybar, H = F Hbar          (beamspace, F the unitary DFT)
// and the LMMSE equalizers for both domains.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "varpoint/error.hpp"
#include "varpoint/formats.hpp"

namespace varpoint {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Rng = std::mt19937_64;

enum class ChannelModel { kLos, kNlos };

struct SystemConfig {
  int antennas = 64;
  int users = 8;
  double snr_db = 20.0;  // +inf for a noise-free link
  ChannelModel model = ChannelModel::kLos;
  std::uint64_t seed = 1;
  double rician_k = 10.0;
  double sector_deg = 60.0;  // user angles uniform on (-sector, sector)
  double es = 1.0;

  void validate() const {
    detail::require(antennas >= 1 && std::has_single_bit(static_cast<unsigned>(antennas)),
                    "antenna count B=" + std::to_string(antennas) + " must be a power of two");
    detail::require(users >= 1 && users <= antennas, "user count U must be in [1, B]");
    detail::require(!std::isnan(snr_db), "SNR must be a number");
    detail::require(rician_k >= 0.0, "Rician factor must be non-negative");
  }

  /// Per-receive-antenna SNR convention with E||Hbar s||^2 = B U Es:
  /// N0 = U Es / 10^(snr/10).
  double noise_variance() const {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return es * users / std::pow(10.0, snr_db / 10.0);
  }
};

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Independent stream for trial `index`; trials can run in any order or thread.
inline Rng trial_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(index + 0x5851f42d4c957f2dULL)));
}

/// Circular complex Gaussian with E|z|^2 = variance.
inline ComplexSample complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

// ---------------------------------------------------------------------------
// 16-QAM, Gray mapped per axis, unit average energy
// ---------------------------------------------------------------------------

struct Qam16 {
  static constexpr int kBitsPerSymbol = 4;
  static constexpr std::array<double, 4> kLevels{-3.0, -1.0, 1.0, 3.0};
  // Gray label of each level: -3 -> 00, -1 -> 01, +1 -> 11, +3 -> 10.
  static constexpr std::array<int, 4> kGray{0b00, 0b01, 0b11, 0b10};

  static double scale() { return 1.0 / std::sqrt(10.0); }

  /// Symbol index 0..15: high two bits select the in-phase level, low two the quadrature level.
  static ComplexSample modulate(int symbol) {
    return {kLevels[static_cast<std::size_t>(symbol >> 2)] * scale(), kLevels[static_cast<std::size_t>(symbol & 3)] * scale()};
  }

  static int gray_bits(int symbol) {
    return (kGray[static_cast<std::size_t>(symbol >> 2)] << 2) | kGray[static_cast<std::size_t>(symbol & 3)];
  }

  static int nearest_level(double x) {
    const double v = x / scale();
    if (v < -2.0) return 0;
    if (v < 0.0) return 1;
    if (v < 2.0) return 2;
    return 3;
  }

  /// Hard decision to the nearest constellation point.
  static int demap(ComplexSample z) { return (nearest_level(z.real()) << 2) | nearest_level(z.imag()); }

  static int bit_errors(int sent, int detected) { return std::popcount(static_cast<unsigned>(gray_bits(sent) ^ gray_bits(detected))); }
};

// ---------------------------------------------------------------------------
// Channel, DFT, LMMSE
// ---------------------------------------------------------------------------

/// Uniform-linear-array response with half-wavelength spacing: a_b = e^{j pi b sin(theta)}.
inline CVector ula_response(int antennas, double theta_rad) {
  CVector a(antennas);
  const double phase = std::numbers::pi * std::sin(theta_rad);
  for (int b = 0; b < antennas; ++b) a(b) = std::polar(1.0, phase * b);
  return a;
}

/// B x U antenna-domain channel with unit average power per entry.
/// LoS: Rician, sqrt(k/(k+1)) e^{j phi} a(theta) + sqrt(1/(k+1)) g per column.
/// NLoS: i.i.d. Rayleigh.
inline CMatrix generate_channel(const SystemConfig& cfg, Rng& rng) {
  CMatrix h(cfg.antennas, cfg.users);
  if (cfg.model == ChannelModel::kNlos) {
    for (int u = 0; u < cfg.users; ++u)
      for (int b = 0; b < cfg.antennas; ++b) h(b, u) = complex_gaussian(rng, 1.0);
    return h;
  }
  const double sector = cfg.sector_deg * std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> angle(-sector, sector);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double los_gain = std::sqrt(cfg.rician_k / (cfg.rician_k + 1.0));
  const double nlos_gain = std::sqrt(1.0 / (cfg.rician_k + 1.0));
  for (int u = 0; u < cfg.users; ++u) {
    const double theta = angle(rng);
    const ComplexSample rot = std::polar(1.0, phase(rng));
    const CVector a = ula_response(cfg.antennas, theta);
    for (int b = 0; b < cfg.antennas; ++b) {
      h(b, u) = los_gain * rot * a(b) + nlos_gain * complex_gaussian(rng, 1.0);
    }
  }
  return h;
}

/// Unitary DFT, F[p,q] = e^{-j 2 pi p q / B} / sqrt(B).
inline CMatrix dft_matrix(int size) {
  detail::require(size >= 1, "DFT size must be positive");
  CMatrix f(size, size);
  const double norm = 1.0 / std::sqrt(static_cast<double>(size));
  for (int p = 0; p < size; ++p) {
    for (int q = 0; q < size; ++q) {
      // Reduce p*q mod B first so the angle stays small and exact.
      const auto k = static_cast<double>((static_cast<long long>(p) * q) % size);
      f(p, q) = std::polar(norm, -2.0 * std::numbers::pi * k / size);
    }
  }
  return f;
}

/// (H^H H + n0_over_es I)^{-1} H^H via Cholesky of the U x U Gram matrix.
inline CMatrix lmmse_matrix(const CMatrix& h, double n0_over_es) {
  detail::require(n0_over_es >= 0.0, "N0/Es must be non-negative");
  CMatrix gram = h.adjoint() * h;
  gram.diagonal().array() += n0_over_es;
  Eigen::LLT<CMatrix> llt(gram);
  detail::require(llt.info() == Eigen::Success, "LMMSE Gram matrix is not positive definite");
  return llt.solve(h.adjoint());
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

struct TrialData {
  CMatrix hbar, h;         // B x U
  CMatrix wbar, w;         // U x B
  CVector ybar, y;         // B
  CVector nbar, n;         // B
  CVector s;               // U
  std::vector<int> symbols;  // U, 16-QAM indices of s
};

/// One channel use. `dft` must be dft_matrix(cfg.antennas); pass it in to
/// avoid rebuilding it per trial.
inline TrialData simulate_trial(const SystemConfig& cfg, Rng& rng, const CMatrix& dft) {
  TrialData t;
  t.hbar = generate_channel(cfg, rng);
  std::uniform_int_distribution<int> sym(0, 15);
  t.symbols.resize(static_cast<std::size_t>(cfg.users));
  t.s.resize(cfg.users);
  for (int u = 0; u < cfg.users; ++u) {
    t.symbols[static_cast<std::size_t>(u)] = sym(rng);
    t.s(u) = std::sqrt(cfg.es) * Qam16::modulate(t.symbols[static_cast<std::size_t>(u)]);
  }
  const double n0 = cfg.noise_variance();
  t.nbar.resize(cfg.antennas);
  for (int b = 0; b < cfg.antennas; ++b) t.nbar(b) = n0 > 0.0 ? complex_gaussian(rng, n0) : ComplexSample{};
  t.ybar = t.hbar * t.s + t.nbar;

  t.h = dft * t.hbar;
  t.y = dft * t.ybar;
  t.n = dft * t.nbar;
  const double ratio = n0 / cfg.es;
  t.wbar = lmmse_matrix(t.hbar, ratio);
  t.w = lmmse_matrix(t.h, ratio);
  return t;
}

inline TrialData simulate_trial(const SystemConfig& cfg, Rng& rng) {
  return simulate_trial(cfg, rng, dft_matrix(cfg.antennas));
}

// ---------------------------------------------------------------------------
// Dataset-wide normalization
// ---------------------------------------------------------------------------

/// One scalar per variable class. Multiplying a class by its scale puts every
/// real and imaginary component of the dataset strictly inside (-1, 1).
struct NormalizationScales {
  double wbar = 1.0;
  double w = 1.0;
  double ybar = 1.0;
  double y = 1.0;

  friend bool operator==(const NormalizationScales&, const NormalizationScales&) = default;
};

inline constexpr double kDefaultNormalizationMargin = 1.0 - 1.0 / 4096.0;

/// Running max |re|,|im| per class; merging is order independent.
struct ClassMaxima {
  double wbar = 0.0;
  double w = 0.0;
  double ybar = 0.0;
  double y = 0.0;

  static double component_max(const auto& m) {
    return std::max(m.real().cwiseAbs().maxCoeff(), m.imag().cwiseAbs().maxCoeff());
  }

  void observe(const TrialData& t) {
    wbar = std::max(wbar, component_max(t.wbar));
    w = std::max(w, component_max(t.w));
    ybar = std::max(ybar, component_max(t.ybar));
    y = std::max(y, component_max(t.y));
  }

  void merge(const ClassMaxima& o) {
    wbar = std::max(wbar, o.wbar);
    w = std::max(w, o.w);
    ybar = std::max(ybar, o.ybar);
    y = std::max(y, o.y);
  }

  NormalizationScales scales(double margin) const {
    detail::require(margin > 0.0 && margin <= 1.0, "normalization margin must be in (0, 1]");
    const auto one = [&](double m) { return m > 0.0 ? margin / m : 1.0; };
    return {one(wbar), one(w), one(ybar), one(y)};
  }
};

inline NormalizationScales compute_normalization(std::span<const TrialData> dataset,
                                                 double margin = kDefaultNormalizationMargin) {
  detail::require(!dataset.empty(), "normalization needs a non-empty dataset");
  ClassMaxima maxima;
  for (const auto& t : dataset) maxima.observe(t);
  return maxima.scales(margin);
}

// ---------------------------------------------------------------------------
// Binary dataset container
// ---------------------------------------------------------------------------
//
// Header (little endian):
//   char[8]  "VPTRIALS"
//   u32      version (1)
//   u32      B, U
//   u32      channel model (0 LoS, 1 NLoS)
//   u64      trial count
//   u64      seed
//   f64      snr_db, rician_k, sector_deg, es
//   f64[4]   scales wbar, w, ybar, y
// Payload, per trial, complex entries as (re, im) f64 pairs, matrices column-major:
//   hbar[BxU] ybar[B] wbar[UxB] h[BxU] y[B] w[UxB] s[U] nbar[B] n[B]

struct TrialDataset {
  SystemConfig cfg;
  NormalizationScales scales;
  std::vector<TrialData> trials;
};

namespace detail {

inline constexpr char kDatasetMagic[8] = {'V', 'P', 'T', 'R', 'I', 'A', 'L', 'S'};
inline constexpr std::uint32_t kDatasetVersion = 1;

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}
  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void complex(const auto& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      f64(m(k).real());
      f64(m(k).imag());
    }
  }

 private:
  void bytes(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) os_.put(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  std::ostream& os_;
};

class LeReader {
 public:
  explicit LeReader(std::istream& is) : is_(is) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  void complex(auto& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double re = f64();
      const double im = f64();
      m(k) = {re, im};
    }
  }

 private:
  std::uint64_t bytes(int n) {
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) {
      const int c = is_.get();
      if (c == std::char_traits<char>::eof()) throw ConfigError("truncated dataset file");
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * k);
    }
    return v;
  }
  std::istream& is_;
};

}  // namespace detail

inline void write_dataset(std::ostream& os, const TrialDataset& ds) {
  detail::LeWriter w(os);
  os.write(detail::kDatasetMagic, sizeof detail::kDatasetMagic);
  w.u32(detail::kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(ds.cfg.antennas));
  w.u32(static_cast<std::uint32_t>(ds.cfg.users));
  w.u32(ds.cfg.model == ChannelModel::kLos ? 0u : 1u);
  w.u64(ds.trials.size());
  w.u64(ds.cfg.seed);
  w.f64(ds.cfg.snr_db);
  w.f64(ds.cfg.rician_k);
  w.f64(ds.cfg.sector_deg);
  w.f64(ds.cfg.es);
  for (double s : {ds.scales.wbar, ds.scales.w, ds.scales.ybar, ds.scales.y}) w.f64(s);
  for (const auto& t : ds.trials) {
    w.complex(t.hbar);
    w.complex(t.ybar);
    w.complex(t.wbar);
    w.complex(t.h);
    w.complex(t.y);
    w.complex(t.w);
    w.complex(t.s);
    w.complex(t.nbar);
    w.complex(t.n);
  }
  if (!os) throw ConfigError("failed writing dataset");
}

inline TrialDataset read_dataset(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + 8, detail::kDatasetMagic)) {
    throw ConfigError("not a trial dataset (bad magic)");
  }
  detail::LeReader r(is);
  if (r.u32() != detail::kDatasetVersion) throw ConfigError("unsupported dataset version");
  TrialDataset ds;
  ds.cfg.antennas = static_cast<int>(r.u32());
  ds.cfg.users = static_cast<int>(r.u32());
  ds.cfg.model = r.u32() == 0 ? ChannelModel::kLos : ChannelModel::kNlos;
  const std::uint64_t count = r.u64();
  ds.cfg.seed = r.u64();
  ds.cfg.snr_db = r.f64();
  ds.cfg.rician_k = r.f64();
  ds.cfg.sector_deg = r.f64();
  ds.cfg.es = r.f64();
  ds.scales = {r.f64(), r.f64(), r.f64(), r.f64()};
  try {
    ds.cfg.validate();
  } catch (const FormatError& e) {
    throw ConfigError(std::string("dataset header: ") + e.what());
  }
  const int b = ds.cfg.antennas;
  const int u = ds.cfg.users;
  ds.trials.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t k = 0; k < count; ++k) {
    TrialData t;
    t.hbar.resize(b, u);
    t.ybar.resize(b);
    t.wbar.resize(u, b);
    t.h.resize(b, u);
    t.y.resize(b);
    t.w.resize(u, b);
    t.s.resize(u);
    t.nbar.resize(b);
    t.n.resize(b);
    r.complex(t.hbar);
    r.complex(t.ybar);
    r.complex(t.wbar);
    r.complex(t.h);
    r.complex(t.y);
    r.complex(t.w);
    r.complex(t.s);
    r.complex(t.nbar);
    r.complex(t.n);
    t.symbols.resize(static_cast<std::size_t>(u));
    for (int k2 = 0; k2 < u; ++k2) {
      t.symbols[static_cast<std::size_t>(k2)] = Qam16::demap(t.s(k2) / std::sqrt(ds.cfg.es));
    }
    ds.trials.push_back(std::move(t));
  }
  return ds;
}

}  // namespace varpoint
