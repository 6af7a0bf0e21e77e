// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "varpoint/arith.hpp"
#include "varpoint/cli.hpp"
#include "varpoint/convert.hpp"
#include "varpoint/experiments.hpp"
#include "varpoint/mvm.hpp"

using namespace varpoint;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

bool report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0.0 || secs < limit_s;
  const bool pass = r.pass && in_time;
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << r.detail;
  line.setf(std::ios::fixed);
  line.precision(2);
  line << " (" << secs << " s";
  if (limit_s > 0.0) line << ", limit " << limit_s << " s";
  line << ")";
  if (!in_time) line << " over time limit";
  std::cout << line.str() << std::endl;
  return pass;
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// 1 -------------------------------------------------------------------------

bool same_as_oracles(const Fxp2VpUnit& unit, const FxpFormat& src, const VpFormat& dst, const FxpValue& x) {
  const auto got = unit(x);
  if (!(got == fxp2vp_oracle(src, dst, x))) return false;
  const auto [m, k] = oracle::fxp2vp(x, dst);
  return got.i == k && oracle::cpp_int(got.m) == m;
}

Outcome conversion_oracle() {
  const FxpFormat f4(8, 1);
  const VpFormat v4(6, {1, -1});
  const Fxp2VpUnit u4(f4, v4);
  for (std::int64_t raw = f4.min_raw(); raw <= f4.max_raw(); ++raw) {
    if (!same_as_oracles(u4, f4, v4, FxpValue(f4, raw))) return {false, "FXP(8,1) -> VP(6,[1,-1]) mismatch at raw " + std::to_string(raw)};
  }

  std::mt19937_64 rng(20240101);
  int configs = 0;
  std::uint64_t inputs = 256;
  for (int w = 3; w <= 14; ++w) {
    for (int f = 0; f < w; ++f) {
      for (int k : {2, 4}) {
        const int m = std::uniform_int_distribution<int>(2, w - 1)(rng);
        const int lo = m - (w - f);
        std::vector<int> exps(static_cast<std::size_t>(k));
        for (auto& e : exps) e = std::uniform_int_distribution<int>(lo - 2, f)(rng);
        std::sort(exps.rbegin(), exps.rend());
        exps.back() = std::min(exps.back(), lo);
        const FxpFormat src(w, f);
        const VpFormat dst(m, exps);
        const Fxp2VpUnit unit(src, dst);
        for (std::int64_t raw = src.min_raw(); raw <= src.max_raw(); ++raw) {
          if (!same_as_oracles(unit, src, dst, FxpValue(src, raw))) {
            return {false, "mismatch for " + to_config_string(src) + " -> " + to_config_string(dst) + " raw " +
                               std::to_string(raw)};
          }
        }
        ++configs;
        inputs += static_cast<std::uint64_t>(1) << w;
      }
    }
  }
  return {configs >= 200, "FXP(8,1) -> VP(6,[1,-1]) exhaustive plus " + std::to_string(configs) + " configurations, " +
                              std::to_string(inputs) + " inputs matched"};
}

// 2 -------------------------------------------------------------------------

Outcome vp2fxp_exactness() {
  const VpFormat src(9, {3, 1, 2, 0});
  const FxpFormat dst(12, 3);
  const Vp2FxpUnit unit(src, dst);
  int n = 0;
  for (int i = 0; i < src.size(); ++i) {
    for (std::int64_t m = src.min_significand(); m <= src.max_significand(); ++m) {
      const VpValue v(src, m, i);
      const FxpValue x = unit(v);
      if (fxp_to_real(x) != vp_to_real(v) || oracle::value(x) != oracle::value(v)) {
        return {false, "inexact at m=" + std::to_string(m) + " i=" + std::to_string(i)};
      }
      ++n;
    }
  }
  return {n == 512 * 4, std::to_string(n) + " inputs exact"};
}

// 3 -------------------------------------------------------------------------

VpFormat random_vp(std::mt19937_64& rng) {
  const int m = std::uniform_int_distribution<int>(2, 31)(rng);
  const int k = 1 << std::uniform_int_distribution<int>(0, 3)(rng);
  std::vector<int> f(static_cast<std::size_t>(k));
  for (auto& e : f) e = std::uniform_int_distribution<int>(-16, 24)(rng);
  return VpFormat(m, f);
}

VpValue random_vp_value(std::mt19937_64& rng, const VpFormat& f) {
  return VpValue(f, std::uniform_int_distribution<std::int64_t>(f.min_significand(), f.max_significand())(rng),
                 std::uniform_int_distribution<int>(0, f.size() - 1)(rng));
}

Outcome multiplication_exactness() {
  std::mt19937_64 rng(20240103);
  const VpFormat ty(7, {1, -1}), tw(7, {11, 9, 7, 6});
  const VpProductFormat table(ty, tw);
  std::uint64_t n = 0;
  // Reference pair, exhaustive: 128*2 x 128*4.
  for (int ia = 0; ia < ty.size(); ++ia) {
    for (std::int64_t a = ty.min_significand(); a <= ty.max_significand(); ++a) {
      for (int ib = 0; ib < tw.size(); ++ib) {
        for (std::int64_t b = tw.min_significand(); b <= tw.max_significand(); ++b) {
          const VpValue va(ty, a, ia), vb(tw, b, ib);
          if (oracle::value(vp_multiply(table, va, vb)) != oracle::value(va) * oracle::value(vb)) {
            return {false, "reference pair inexact"};
          }
          ++n;
        }
      }
    }
  }
  const std::uint64_t table_pairs = n;
  while (n < 1000000) {
    const auto fa = random_vp(rng), fb = random_vp(rng);
    const VpProductFormat pf(fa, fb);
    for (int r = 0; r < 100; ++r, ++n) {
      const auto va = random_vp_value(rng, fa), vb = random_vp_value(rng, fb);
      if (oracle::value(vp_multiply(pf, va, vb)) != oracle::value(va) * oracle::value(vb)) {
        return {false, "inexact product for " + to_config_string(fa) + " x " + to_config_string(fb)};
      }
    }
  }
  return {true, std::to_string(n) + " products exact (" + std::to_string(table_pairs) + " from the reference pair)"};
}

// 4 -------------------------------------------------------------------------

FxpValue random_fxp(std::mt19937_64& rng, const FxpFormat& f) {
  return FxpValue(f, std::uniform_int_distribution<std::int64_t>(f.min_raw(), f.max_raw())(rng));
}

FxpValue widen(const FxpValue& x, const FxpFormat& to) {
  return FxpValue(to, x.raw * (std::int64_t{1} << (to.frac() - x.fmt.frac())));
}

FxpValue vp_exact(std::mt19937_64& rng, const VpFormat& vp, const Vp2FxpUnit& back) {
  return back(random_vp_value(rng, vp));
}

bool outputs_equal(const std::vector<ComplexFxp>& a, const std::vector<ComplexFxp>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t u = 0; u < a.size(); ++u) {
    if (oracle::value(a[u].re) != oracle::value(b[u].re) || oracle::value(a[u].im) != oracle::value(b[u].im)) return false;
  }
  return true;
}

Outcome datapath_oracle() {
  constexpr int kB = 64, kU = 8, kInstances = 100;
  std::mt19937_64 rng(20240104);
  const MvmDesign afxp(reference_preset(MvmVariant::kAFxp, kB, kU));
  auto bfxp_spec = reference_preset(MvmVariant::kBFxp, kB, kU);
  bfxp_spec.thresholds = {0.0, 0.0};
  const MvmDesign bfxp0(bfxp_spec);
  const auto bvp_spec = reference_preset(MvmVariant::kBVp, kB, kU);
  const MvmDesign bvp(bvp_spec);
  const MvmDesign bfxp(reference_preset(MvmVariant::kBFxp, kB, kU));
  const Vp2FxpUnit back_w(*bvp_spec.vp_w_format, bvp_spec.w_format);
  const Vp2FxpUnit back_y(*bvp_spec.vp_y_format, bvp_spec.y_format);

  for (int n = 0; n < kInstances; ++n) {
    std::vector<ComplexFxp> w, y;
    for (int k = 0; k < kB * kU; ++k) w.push_back({random_fxp(rng, afxp.w_format()), random_fxp(rng, afxp.w_format())});
    for (int k = 0; k < kB; ++k) y.push_back({random_fxp(rng, afxp.y_format()), random_fxp(rng, afxp.y_format())});
    const auto out_a = equalize(afxp, load_weights(afxp, w, kU, kB), y);
    const auto ref = oracle::equalize_exact(w, y, kU);
    for (int u = 0; u < kU; ++u) {
      if (oracle::value(out_a[static_cast<std::size_t>(u)].re) != ref[static_cast<std::size_t>(u)].first ||
          oracle::value(out_a[static_cast<std::size_t>(u)].im) != ref[static_cast<std::size_t>(u)].second) {
        return {false, "A-FXP differs from the big-integer reference in instance " + std::to_string(n)};
      }
    }

    // Same values in the wider B-FXP input formats.
    std::vector<ComplexFxp> wb, yb;
    for (const auto& z : w) wb.push_back({widen(z.re, bfxp0.w_format()), widen(z.im, bfxp0.w_format())});
    for (const auto& z : y) yb.push_back({widen(z.re, bfxp0.y_format()), widen(z.im, bfxp0.y_format())});
    if (!outputs_equal(equalize(bfxp0, load_weights(bfxp0, wb, kU, kB), yb), out_a)) {
      return {false, "B-FXP at zero threshold differs from A-FXP in instance " + std::to_string(n)};
    }

    std::vector<ComplexFxp> wv, yv;
    for (int k = 0; k < kB * kU; ++k) wv.push_back({vp_exact(rng, *bvp_spec.vp_w_format, back_w), vp_exact(rng, *bvp_spec.vp_w_format, back_w)});
    for (int k = 0; k < kB; ++k) yv.push_back({vp_exact(rng, *bvp_spec.vp_y_format, back_y), vp_exact(rng, *bvp_spec.vp_y_format, back_y)});
    if (!outputs_equal(equalize(bvp, load_weights(bvp, wv, kU, kB), yv),
                       equalize(bfxp, load_weights(bfxp, wv, kU, kB), yv))) {
      return {false, "B-VP differs from B-FXP on representable inputs in instance " + std::to_string(n)};
    }
  }
  return {true, std::to_string(kInstances) + " instances at B=64 U=8 bit-exact"};
}

// 5 -------------------------------------------------------------------------

Outcome nmse_study() {
  NmseSweepConfig c;
  c.trials = 10000;
  const auto r = nmse_sweep(c);
  const auto a = r.curve(Domain::kAntenna), b = r.curve(Domain::kBeamspace);
  bool ordered = true, monotone = true;
  std::string curves = "antenna";
  for (const auto& p : a) curves += " " + fmt(p.nmse_db, 2);
  curves += " dB, beamspace";
  for (const auto& p : b) curves += " " + fmt(p.nmse_db, 2);
  curves += " dB";
  for (std::size_t k = 0; k < a.size(); ++k) {
    ordered = ordered && b[k].nmse >= a[k].nmse;
    if (k + 1 < a.size()) monotone = monotone && a[k + 1].nmse <= a[k].nmse && b[k + 1].nmse <= b[k].nmse;
  }
  const double gap = interpolate_bit_gap(r);
  const bool gap_ok = gap >= 0.5 && gap <= 2.5;
  return {ordered && monotone && gap_ok, curves + "; ordering " + (ordered ? "ok" : "violated") + ", monotone " +
                                             (monotone ? "ok" : "violated") + ", bit gap " + fmt(gap) +
                                             " (required [0.5, 2.5])"};
}

// 6 -------------------------------------------------------------------------

Outcome ber_point(double snr_db) {
  BerConfig c;
  c.trials = 10000;
  c.snr_db = {snr_db};
  for (auto v : {MvmVariant::kAFxp, MvmVariant::kBFxp, MvmVariant::kBVp}) c.designs.push_back(reference_preset(v));
  const auto r = ber_experiment(c);
  const auto& ref = r.find("float", snr_db);
  bool ok = true;
  std::string detail = fmt(snr_db, 0) + " dB: float " + std::to_string(ref.bit_errors) + "/" + std::to_string(ref.bits);
  for (const char* d : {"a-fxp", "b-fxp", "b-vp"}) {
    const auto& p = r.find(d, snr_db);
    const bool within = within_factor(p.ber, ref.ber, 1.3);
    ok = ok && within;
    detail += std::string(", ") + d + " " + std::to_string(p.bit_errors) + (within ? "" : " (outside factor 1.3)");
  }
  return {ok, detail};
}

Outcome ber_validation() {
  const auto high = ber_point(20.0);
  // At 20 dB the LoS link is error-free; 6 dB puts the float reference near BER 1e-2.
  const auto low = ber_point(6.0);
  return {high.pass && low.pass, high.detail + "; " + low.detail};
}

// 7 -------------------------------------------------------------------------

Outcome flp_accuracy() {
  FlpComparisonConfig c;
  c.trials = 10000;
  const auto r = flp_comparison(c);
  const double diff = std::abs(r.nmse_vp_db() - r.nmse_flp_db());
  return {diff <= 3.0, "VP " + fmt(r.nmse_vp_db(), 2) + " dB, FLP(9,4) " + fmt(r.nmse_flp_db(), 2) + " dB, |diff| " +
                           fmt(diff, 2) + " dB (required <= 3)"};
}

// 8 -------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "varpoint_acceptance";
  fs::create_directories(dir);
  const std::vector<std::vector<std::string>> runs{
      {"nmse-sweep", "--trials", "500", "--seed", "7", "--threads", "2"},
      {"ber", "--trials", "100", "--seed", "7", "--snr", "6", "--threads", "2"},
      {"flp-compare", "--trials", "200", "--seed", "7", "--threads", "2"},
      {"gen-dataset", "--trials", "50", "--seed", "7"},
      {"convert", "--fxp", "{W=8, F=1}", "--vp", "{M=6, f=[1,-1]}", "--raw", "97"},
  };
  int compared = 0;
  for (const auto& args : runs) {
    std::string bytes[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = dir / (args[0] + std::to_string(rep) + ".csv");
      auto full = args;
      full.insert(full.end(), {"-o", out.string()});
      std::ostringstream so, se;
      if (cli::cli_main(full, so, se) != 0) {
        fs::remove_all(dir);
        return {false, args[0] + " failed: " + se.str()};
      }
      bytes[rep] = slurp(out);
    }
    if (bytes[0].empty() || bytes[0] != bytes[1]) {
      fs::remove_all(dir);
      return {false, args[0] + " output differs between runs"};
    }
    ++compared;
  }
  fs::remove_all(dir);
  return {true, std::to_string(compared) + " subcommands byte-identical across repeated runs"};
}

}  // namespace

int main() {
  std::vector<bool> results;
  results.push_back(report(1, "FXP2VP oracle equivalence", 10.0, conversion_oracle));
  results.push_back(report(2, "VP2FXP exactness", 1.0, vp2fxp_exactness));
  results.push_back(report(3, "VP multiplication exactness", 30.0, multiplication_exactness));
  results.push_back(report(4, "Equalizer datapath oracle", 30.0, datapath_oracle));
  results.push_back(report(5, "NMSE study", 300.0, nmse_study));
  results.push_back(report(6, "BER of the reference designs", 300.0, ber_validation));
  results.push_back(report(7, "VP vs custom FLP accuracy", 120.0, flp_accuracy));
  results.push_back(report(8, "CLI determinism", 0.0, determinism));
  const auto passed = std::count(results.begin(), results.end(), true);
  std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
  return passed == static_cast<long>(results.size()) ? 0 : 1;
}
