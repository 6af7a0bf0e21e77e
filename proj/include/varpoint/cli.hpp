#pragma once

// Command-line front end. Subcommands:
//   nmse-sweep   NMSE vs bitwidth, antenna domain and beamspace
//   ber          BER of the equalizer datapaths vs double-precision LMMSE
//   flp-compare  beamspace NMSE, VP input conversion vs custom FLP
//   convert      FXP <-> VP conversion of a single value, with bit layout
//   gen-dataset  dump generated trials to a binary dataset file

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "varpoint/channel.hpp"
#include "varpoint/config.hpp"
#include "varpoint/convert.hpp"
#include "varpoint/error.hpp"
#include "varpoint/experiments.hpp"
#include "varpoint/format_io.hpp"
#include "varpoint/formats.hpp"
#include "varpoint/mvm.hpp"

namespace varpoint {
namespace cli {

/// Flags shared by the experiment subcommands; unset values fall back to the config file.
struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<int> threads;
  std::string out;
};

inline SystemConfig read_system(const KeyValueConfig& cfg, const CommonOptions& opt) {
  SystemConfig s;
  if (auto v = cfg.get_int("system.antennas")) s.antennas = static_cast<int>(*v);
  if (auto v = cfg.get_int("system.users")) s.users = static_cast<int>(*v);
  if (auto v = cfg.get_double("system.snr_db")) s.snr_db = *v;
  if (auto v = cfg.get("system.channel")) {
    if (*v == "los") {
      s.model = ChannelModel::kLos;
    } else if (*v == "nlos") {
      s.model = ChannelModel::kNlos;
    } else {
      throw ConfigError("system.channel must be los or nlos, got '" + *v + "'");
    }
  }
  if (auto v = cfg.get_int("system.seed")) s.seed = static_cast<std::uint64_t>(*v);
  if (auto v = cfg.get_double("system.rician_k")) s.rician_k = *v;
  if (auto v = cfg.get_double("system.sector_deg")) s.sector_deg = *v;
  if (opt.seed) s.seed = *opt.seed;
  s.validate();
  return s;
}

inline std::size_t read_trials(const KeyValueConfig& cfg, const CommonOptions& opt, std::size_t fallback) {
  std::size_t trials = fallback;
  if (auto v = cfg.get_int("sweep.trials")) {
    if (*v < 1) throw ConfigError("sweep.trials must be positive");
    trials = static_cast<std::size_t>(*v);
  }
  if (opt.trials) trials = *opt.trials;
  if (trials < 1) throw ConfigError("--trials must be positive");
  return trials;
}

inline int read_threads(const KeyValueConfig& cfg, const CommonOptions& opt) {
  int threads = 1;
  if (auto v = cfg.get_int("sweep.threads")) threads = static_cast<int>(*v);
  if (opt.threads) threads = *opt.threads;
  if (threads < 1) throw ConfigError("thread count must be positive");
  return threads;
}

inline double read_margin(const KeyValueConfig& cfg) {
  const double m = cfg.get_double("sweep.margin").value_or(kDefaultNormalizationMargin);
  if (!(m > 0.0 && m <= 1.0)) throw ConfigError("sweep.margin must be in (0, 1]");
  return m;
}

/// Reference preset for `variant`, overridden by [formats] and [thresholds] entries
/// prefixed with the design name, e.g. `b-vp.vp_w` or `b-fxp.tau_y`.
inline MvmDesignSpec read_design(const KeyValueConfig& cfg, MvmVariant variant, const SystemConfig& sys) {
  const std::string name(variant_name(variant));
  MvmDesignSpec spec = reference_preset(variant, sys.antennas, sys.users);
  if (auto v = cfg.get_fxp("formats." + name + ".y")) spec.y_format = *v;
  if (auto v = cfg.get_fxp("formats." + name + ".w")) spec.w_format = *v;
  if (auto v = cfg.get_vp("formats." + name + ".vp_y")) spec.vp_y_format = *v;
  if (auto v = cfg.get_vp("formats." + name + ".vp_w")) spec.vp_w_format = *v;
  if (auto v = cfg.get("formats." + name + ".product")) {
    if (*v == "strict") {
      spec.product_mode = ProductMode::kStrict;
    } else if (*v == "saturating") {
      spec.product_mode = ProductMode::kSaturating;
    } else {
      throw ConfigError("formats." + name + ".product must be strict or saturating");
    }
  }
  if (variant != MvmVariant::kAFxp) {
    // Defaults follow the (possibly overridden) operand formats.
    spec.thresholds = {default_cspade_threshold(spec.y_format), default_cspade_threshold(spec.w_format)};
  }
  if (auto v = cfg.get_double("thresholds." + name + ".tau_y")) spec.thresholds.tau_y = *v;
  if (auto v = cfg.get_double("thresholds." + name + ".tau_w")) spec.thresholds.tau_w = *v;
  if (auto v = cfg.get_bool("thresholds." + name + ".cspade")) spec.cspade_enabled = *v;
  MvmDesign{spec};  // validate now so config errors surface before any work
  return spec;
}

inline bool known_key(const std::string& key) {
  static const std::vector<std::string> fixed{
      "system.antennas", "system.users", "system.snr_db", "system.channel", "system.seed",
      "system.rician_k", "system.sector_deg", "sweep.trials", "sweep.bitwidths", "sweep.domains",
      "sweep.margin", "sweep.threads", "ber.designs", "ber.snr_db", "formats.fxp", "formats.vp",
      "formats.flp.mantissa_bits", "formats.flp.exponent_bits", "formats.flp.bias"};
  if (std::find(fixed.begin(), fixed.end(), key) != fixed.end()) return true;
  for (const char* design : {"a-fxp", "b-fxp", "b-vp"}) {
    for (const char* field : {"y", "w", "vp_y", "vp_w", "product"}) {
      if (key == std::string("formats.") + design + "." + field) return true;
    }
    for (const char* field : {"tau_y", "tau_w", "cspade"}) {
      if (key == std::string("thresholds.") + design + "." + field) return true;
    }
  }
  return false;
}

/// Every subcommand accepts the same config file; unknown keys are rejected.
inline KeyValueConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  auto cfg = KeyValueConfig::load(path);
  for (const auto& key : cfg.keys()) {
    if (!known_key(key)) throw ConfigError("unknown config key '" + key + "' in " + path);
  }
  return cfg;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  return os;
}

inline int run_nmse_sweep(const CommonOptions& opt, const std::string& dataset_path, std::ostream& out) {
  const auto cfg = load_config(opt.config);
  NmseSweepConfig c;
  c.system = read_system(cfg, opt);
  c.trials = read_trials(cfg, opt, c.trials);
  c.threads = read_threads(cfg, opt);
  c.margin = read_margin(cfg);
  if (auto v = cfg.get_list("sweep.bitwidths")) {
    c.bitwidths.clear();
    for (const auto& item : *v) c.bitwidths.push_back(static_cast<int>(detail::parse_integer(item, "sweep.bitwidths")));
  }
  if (auto v = cfg.get_list("sweep.domains")) {
    c.domains.clear();
    for (const auto& item : *v) {
      if (item == "antenna") {
        c.domains.push_back(Domain::kAntenna);
      } else if (item == "beamspace") {
        c.domains.push_back(Domain::kBeamspace);
      } else {
        throw ConfigError("sweep.domains entries must be antenna or beamspace");
      }
    }
  }
  c.validate();

  NmseResult r;
  if (!dataset_path.empty()) {
    std::ifstream in(dataset_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read dataset '" + dataset_path + "'");
    const auto ds = read_dataset(in);
    r = nmse_sweep(c, ds.trials);
  } else {
    r = nmse_sweep(c);
  }
  auto os = open_out(opt.out);
  write_nmse_csv(os, r);
  out << "nmse-sweep: " << r.points.size() << " points over " << r.points.front().trials << " trials";
  bool both = false, has_a = false, has_b = false;
  for (auto d : c.domains) (d == Domain::kAntenna ? has_a : has_b) = true;
  both = has_a && has_b && c.bitwidths.size() >= 2;
  if (both) {
    try {
      out << ", beamspace bit gap " << format_double(interpolate_bit_gap(r));
    } catch (const FormatError&) {
      out << ", bit gap undefined";
    }
  }
  out << " -> " << opt.out << '\n';
  return 0;
}

inline int run_ber(const CommonOptions& opt, const std::vector<double>& snr_flag, std::ostream& out) {
  const auto cfg = load_config(opt.config);
  BerConfig c;
  c.system = read_system(cfg, opt);
  c.trials = read_trials(cfg, opt, c.trials);
  c.threads = read_threads(cfg, opt);
  c.margin = read_margin(cfg);
  std::vector<std::string> names{"a-fxp", "b-fxp", "b-vp"};
  if (auto v = cfg.get_list("ber.designs")) names = *v;
  for (const auto& n : names) c.designs.push_back(read_design(cfg, parse_variant(n), c.system));
  if (auto v = cfg.get_list("ber.snr_db")) {
    c.snr_db.clear();
    for (const auto& item : *v) c.snr_db.push_back(KeyValueConfig::parse_double(item, "ber.snr_db"));
  }
  if (!snr_flag.empty()) c.snr_db = snr_flag;

  const auto r = ber_experiment(c);
  auto os = open_out(opt.out);
  write_ber_csv(os, r);
  out << "ber:";
  for (const auto& p : r.points) out << ' ' << p.design << '@' << format_double(p.snr_db) << "dB=" << format_double(p.ber);
  out << " -> " << opt.out << '\n';
  return 0;
}

inline int run_flp_compare(const CommonOptions& opt, std::ostream& out) {
  const auto cfg = load_config(opt.config);
  FlpComparisonConfig c;
  c.system = read_system(cfg, opt);
  c.trials = read_trials(cfg, opt, c.trials);
  c.threads = read_threads(cfg, opt);
  c.margin = read_margin(cfg);
  const auto vp = read_design(cfg, MvmVariant::kBVp, c.system);
  c.y_format = vp.y_format;
  c.w_format = vp.w_format;
  c.vp_y_format = *vp.vp_y_format;
  c.vp_w_format = *vp.vp_w_format;
  const int mant = static_cast<int>(cfg.get_int("formats.flp.mantissa_bits").value_or(9));
  const int expo = static_cast<int>(cfg.get_int("formats.flp.exponent_bits").value_or(4));
  const auto bias = cfg.get_int("formats.flp.bias");
  c.flp_format = bias ? CflpFormat(mant, expo, static_cast<int>(*bias)) : CflpFormat(mant, expo);

  const auto r = flp_comparison(c);
  auto os = open_out(opt.out);
  write_flp_csv(os, r);
  out << "flp-compare: vp " << format_double(r.nmse_vp_db()) << " dB, cflp " << format_double(r.nmse_flp_db())
      << " dB -> " << opt.out << '\n';
  return 0;
}

inline int run_gen_dataset(const CommonOptions& opt, const std::string& csv, std::ostream& out) {
  const auto cfg = load_config(opt.config);
  TrialDataset ds;
  ds.cfg = read_system(cfg, opt);
  const auto trials = read_trials(cfg, opt, 1000);
  const int threads = read_threads(cfg, opt);
  const double margin = read_margin(cfg);
  const CMatrix dft = dft_matrix(ds.cfg.antennas);
  ds.trials = run_trials(trials, threads, [&](std::size_t k) {
    Rng rng = trial_rng(ds.cfg.seed, k);
    return simulate_trial(ds.cfg, rng, dft);
  });
  ds.scales = compute_normalization(ds.trials, margin);
  {
    auto os = open_out(opt.out);
    write_dataset(os, ds);
  }
  if (!csv.empty()) {
    auto os = open_out(csv);
    os << "class,scale\n";
    os << "wbar," << format_double(ds.scales.wbar) << '\n';
    os << "w," << format_double(ds.scales.w) << '\n';
    os << "ybar," << format_double(ds.scales.ybar) << '\n';
    os << "y," << format_double(ds.scales.y) << '\n';
  }
  out << "gen-dataset: " << ds.trials.size() << " trials, B=" << ds.cfg.antennas << " U=" << ds.cfg.users
      << " -> " << opt.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// convert
// ---------------------------------------------------------------------------

/// Decimal (optionally negative) or a 0b bit pattern read as `width`-bit two's complement.
inline std::int64_t parse_raw(const std::string& text, int width) {
  if (text.rfind("0b", 0) == 0 || text.rfind("0B", 0) == 0) {
    const std::string bits = text.substr(2);
    if (bits.empty() || static_cast<int>(bits.size()) > width) {
      throw ConfigError("binary literal '" + text + "' must have 1.." + std::to_string(width) + " bits");
    }
    std::uint64_t pattern = 0;
    for (char c : bits) {
      if (c != '0' && c != '1') throw ConfigError("bad binary digit in '" + text + "'");
      pattern = (pattern << 1) | static_cast<std::uint64_t>(c - '0');
    }
    return detail::sign_extend(static_cast<std::int64_t>(pattern), width);
  }
  return detail::parse_integer(text, "raw value");
}

inline std::string bit_string(std::int64_t raw, int width) {
  std::string s;
  for (int k = width - 1; k >= 0; --k) s += ((static_cast<std::uint64_t>(raw) >> k) & 1) ? '1' : '0';
  return s;
}

struct ConvertOptions {
  std::string config;
  std::string fxp;
  std::string vp;
  std::string raw;
  std::optional<long long> significand;
  std::optional<int> index;
  std::string out;
};

inline int run_convert(const ConvertOptions& opt, std::ostream& out) {
  const auto cfg = load_config(opt.config);
  std::string fxp_text = opt.fxp, vp_text = opt.vp;
  if (auto v = cfg.get("formats.fxp"); v && fxp_text.empty()) fxp_text = *v;
  if (auto v = cfg.get("formats.vp"); v && vp_text.empty()) vp_text = *v;
  if (vp_text.empty()) throw ConfigError("convert needs a VP format (--vp)");
  const VpFormat vp = parse_vp_format(vp_text);

  const auto quoted = [](const std::string& field) { return '"' + field + '"'; };
  std::string csv_row;
  if (!opt.raw.empty()) {
    if (fxp_text.empty()) throw ConfigError("FXP to VP conversion needs --fxp");
    const FxpFormat fxp = parse_fxp_format(fxp_text);
    const FxpValue x(fxp, parse_raw(opt.raw, fxp.width()));
    const Fxp2VpUnit unit(fxp, vp);
    const VpValue v = unit(x);
    const int lsb = unit.group_lsb(v.i);
    out << "fxp2vp " << detail::fxp_name(fxp) << " -> " << detail::vp_name(vp) << '\n';
    out << "  in   raw=" << x.raw << " bits=" << bit_string(x.raw, fxp.width()) << " value=" << format_double(fxp_to_real(x)) << '\n';
    out << "  msb group x[" << fxp.width() - 1 << ':' << std::min(lsb, fxp.width() - 1) << "] -> i=" << v.i
        << " (f=" << vp.exponent(v.i) << ")\n";
    out << "  out  m=" << v.m << " bits=" << bit_string(v.m, vp.significand_bits()) << " i=" << v.i
        << " value=" << format_double(vp_to_real(v)) << '\n';
    csv_row = "fxp2vp," + quoted(to_config_string(fxp)) + "," + quoted(to_config_string(vp)) + "," + std::to_string(x.raw) + "," +
              std::to_string(v.m) + "," + std::to_string(v.i) + ",," + format_double(fxp_to_real(x)) + "," +
              format_double(vp_to_real(v));
  } else if (opt.significand && opt.index) {
    const FxpFormat fxp = fxp_text.empty() ? vp2fxp_required_format(vp) : parse_fxp_format(fxp_text);
    const VpValue v(vp, *opt.significand, *opt.index);
    const Vp2FxpUnit unit(vp, fxp);
    const FxpValue x = unit(v);
    out << "vp2fxp " << detail::vp_name(vp) << " -> " << detail::fxp_name(fxp) << '\n';
    out << "  in   m=" << v.m << " bits=" << bit_string(v.m, vp.significand_bits()) << " i=" << v.i
        << " value=" << format_double(vp_to_real(v)) << '\n';
    out << "  shift S_" << v.i << '=' << unit.shift(v.i) << '\n';
    out << "  out  raw=" << x.raw << " bits=" << bit_string(x.raw, fxp.width()) << " value=" << format_double(fxp_to_real(x))
        << '\n';
    csv_row = "vp2fxp," + quoted(to_config_string(vp)) + "," + quoted(to_config_string(fxp)) + ",," + std::to_string(v.m) + "," +
              std::to_string(v.i) + "," + std::to_string(x.raw) + "," + format_double(vp_to_real(v)) + "," +
              format_double(fxp_to_real(x));
  } else {
    throw ConfigError("convert needs --raw (FXP to VP) or --significand and --index (VP to FXP)");
  }
  if (!opt.out.empty()) {
    auto os = open_out(opt.out);
    os << "direction,src,dst,in_raw,m,i,out_raw,in_value,out_value\n" << csv_row << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variable-point number format toolkit and equalizer experiments", "varpoint"};
  app.require_subcommand(1);

  const auto add_common = [](CLI::App* sub, CommonOptions& o, const std::string& default_out) {
    sub->add_option("-c,--config", o.config, "Config file (key = value sections)");
    sub->add_option("--seed", o.seed, "RNG seed (overrides system.seed)");
    sub->add_option("--trials", o.trials, "Number of trials (overrides sweep.trials)")->check(CLI::PositiveNumber);
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    o.out = default_out;
    sub->add_option("-o,--out", o.out, "Output file")->capture_default_str();
  };

  CommonOptions nmse_opt, ber_opt, flp_opt, gen_opt;
  std::string dataset_path, gen_csv;
  std::vector<double> snr;
  ConvertOptions conv;

  auto* nmse = app.add_subcommand("nmse-sweep", "NMSE of the quantized equalization product vs bitwidth");
  add_common(nmse, nmse_opt, "nmse.csv");
  nmse->add_option("--dataset", dataset_path, "Run on a frozen dataset from gen-dataset");

  auto* ber = app.add_subcommand("ber", "BER of the A-FXP, B-FXP and B-VP datapaths vs float LMMSE");
  add_common(ber, ber_opt, "ber.csv");
  ber->add_option("--snr", snr, "SNR points in dB (overrides ber.snr_db)");

  auto* flp = app.add_subcommand("flp-compare", "Beamspace NMSE: VP input conversion vs custom FLP");
  add_common(flp, flp_opt, "flp.csv");

  auto* gen = app.add_subcommand("gen-dataset", "Write generated trials to a binary dataset file");
  add_common(gen, gen_opt, "trials.vpds");
  gen->add_option("--csv", gen_csv, "Also write the normalization scales as CSV");

  auto* convert = app.add_subcommand("convert", "Convert one value between FXP and VP and show its bits");
  convert->add_option("-c,--config", conv.config, "Config file with formats.fxp / formats.vp");
  convert->add_option("--fxp", conv.fxp, "FXP format, e.g. \"{W=8, F=1}\"");
  convert->add_option("--vp", conv.vp, "VP format, e.g. \"{M=6, f=[1,-1]}\"");
  convert->add_option("--raw", conv.raw, "FXP raw value, decimal or 0b bit pattern (FXP -> VP)");
  convert->add_option("--significand", conv.significand, "VP significand (VP -> FXP)");
  convert->add_option("--index", conv.index, "VP exponent index (VP -> FXP)");
  convert->add_option("-o,--out", conv.out, "Optional CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (nmse->parsed()) return run_nmse_sweep(nmse_opt, dataset_path, out);
    if (ber->parsed()) return run_ber(ber_opt, snr, out);
    if (flp->parsed()) return run_flp_compare(flp_opt, out);
    if (gen->parsed()) return run_gen_dataset(gen_opt, gen_csv, out);
    if (convert->parsed()) return run_convert(conv, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

inline int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("varpoint");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cli
}  // namespace varpoint
