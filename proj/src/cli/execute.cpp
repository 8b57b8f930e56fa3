#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include "hbbm/analysis.hpp"
#include "hbbm/cli.hpp"
#include "hbbm/engine.hpp"
#include "hbbm/io.hpp"
#include "hbbm/measures.hpp"

namespace hbbm::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Context {
  const Invocation& inv;
  const Json& c;
  std::ostream& log;
  bool cap_hit = false;
  bool breach = false;
  std::vector<std::string> warnings;

  [[nodiscard]] double real(const char* k) const { return c.at(k).get<double>(); }
  [[nodiscard]] std::size_t count(const char* k) const { return c.at(k).get<std::size_t>(); }
  [[nodiscard]] std::string text(const char* k) const { return c.at(k).get<std::string>(); }
  [[nodiscard]] std::optional<double> maybe(const char* k) const {
    return c.contains(k) ? std::optional<double>(real(k)) : std::nullopt;
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    const fs::path path = inv.out_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
  }
  void report(const std::string& name, const EstimateReport& r) const {
    write(name + ".json", [&](std::ostream& o) { write_report_json(o, r); });
    write(name + "_points.csv", [&](std::ostream& o) { write_points_csv(o, r); });
  }
  void report(const std::string& name, const ValidationReport& r) const {
    write(name + ".json", [&](std::ostream& o) { write_report_json(o, r); });
  }
};

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(key, "expected comma-separated numbers, got '" + v + "'");
    }
  }
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

// "lo:hi" with inf allowed, "all", or "empty" (nullopt).
std::optional<LineInterval> parse_interval(const std::string& v) {
  if (v == "empty") return std::nullopt;
  if (v == "all") return LineInterval{};
  const auto colon = v.find(':');
  if (colon == std::string::npos) throw ConfigError("interval", "expected lo:hi, all or empty");
  auto bound = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used != s.size() || std::isnan(x)) throw std::invalid_argument(s);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("interval", "bad bound '" + s + "'");
    }
  };
  const LineInterval I{bound(v.substr(0, colon)), bound(v.substr(colon + 1))};
  if (!(I.lo <= I.hi)) throw ConfigError("interval", "needs lo <= hi");
  return I;
}

SimConfig base_config(const Context& ctx) {
  SimConfig s;
  if (ctx.c.contains("beta")) s.beta = ctx.real("beta");
  if (ctx.c.contains("lambda")) s.lambda = ctx.real("lambda");
  if (ctx.c.contains("dt")) s.dt = ctx.real("dt");
  if (ctx.c.contains("seed")) s.seed = ctx.c.at("seed").get<std::uint64_t>();
  if (ctx.c.contains("normalization")) s.normalization = parse_normalization(ctx.text("normalization"));
  return s;
}

void check_threshold(Context& ctx, const ValidationReport& r) {
  if (!(std::abs(r.z) <= 3.0)) {
    ctx.breach = true;
    ctx.log << "check failed: " << r.name << " z = " << format_double(r.z) << '\n';
  }
}

void simulate(Context& ctx) {
  SimConfig s = base_config(ctx);
  s.horizon = ctx.real("horizon");
  s.K = ctx.real("K");
  s.max_particles = ctx.count("max_particles");
  s.validate();
  const auto snap = run(s, ctx.inv.threads);
  ctx.cap_hit = snap.capped;
  const auto measure = project_to_boundary(snap, exit_stream_for(s.seed));
  ctx.write("particles.csv", [&](std::ostream& o) { write_snapshot_csv(o, snap); });
  ctx.write("population.csv", [&](std::ostream& o) { write_population_csv(o, snap); });
  ctx.write("measure.csv", [&](std::ostream& o) { write_measure_csv(o, measure); });
  ctx.write("cdf.csv", [&](std::ostream& o) { write_cdf_csv(o, cdf(measure)); });
  Json summary;
  summary["population"] = snap.population();
  summary["time"] = snap.time;
  summary["capped"] = snap.capped;
  summary["typical"] = typical_count(snap, s.K);
  summary["ever_lived"] = snap.genealogy.size();
  ctx.write("simulate.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  ctx.log << "population " << snap.population() << " at t = " << format_double(snap.time) << '\n';
}

void exitlaw(Context& ctx) {
  ExitLawRun r;
  r.config = base_config(ctx);
  r.t = ctx.real("t");
  r.samples = ctx.count("samples");
  r.threads = ctx.inv.threads;
  if (r.samples < 10000) throw ConfigError("samples", "must be >= 10000");
  auto exits = simulate_exits(r);
  ctx.write("exits.csv", [&](std::ostream& o) {
    o << "x\n";
    for (const double x : exits) o << format_double(x) << '\n';
  });
  const auto report = exit_law_report(std::move(exits), r.t);
  ctx.report("exitlaw", report);
  if (report.extras.at("ks_pvalue") < 1e-3) {
    ctx.breach = true;
    ctx.log << "check failed: KS p-value " << format_double(report.extras.at("ks_pvalue")) << '\n';
  }
  ctx.log << "KS distance " << format_double(report.lhs) << '\n';
}

void dimension(Context& ctx) {
  DimensionRun r;
  const double beta = ctx.real("beta");
  if (!(beta > 0.0)) throw ConfigError("beta", "must be > 0");
  const std::size_t atoms = ctx.count("atoms");
  if (atoms < 1) throw ConfigError("atoms", "must be >= 1");
  r.config = dimension_config(beta, atoms, ctx.real("dt"));
  r.config.lambda = ctx.real("lambda");
  r.config.seed = ctx.c.at("seed").get<std::uint64_t>();
  if (const auto h = ctx.maybe("horizon")) r.config.horizon = *h;
  r.mode = parse_box_mode(ctx.text("mode"));
  r.mass_floor = ctx.real("mass_floor");
  r.replicates = ctx.count("replicates");
  r.recentre = parse_flag("recentre", ctx.text("recentre"));
  r.threads = ctx.inv.threads;
  const auto defaults = default_box_scales(atoms);
  r.scales = log_spaced(ctx.maybe("scale_min").value_or(defaults.front()),
                        ctx.maybe("scale_max").value_or(defaults.back()), ctx.count("scale_count"));
  const auto result = dimension_run(r);
  ctx.cap_hit = result.capped > 0;
  ctx.report("dimension", result.report);
  ctx.write("dimension_slopes.csv", [&](std::ostream& o) {
    o << "replicate,slope\n";
    for (std::size_t i = 0; i < result.slopes.size(); ++i) {
      o << i << ',' << format_double(result.slopes[i]) << '\n';
    }
  });
  ctx.log << result.report.name << " " << format_double(result.report.estimate) << " +- "
          << format_double(result.report.std_error) << '\n';
}

void moments(Context& ctx) {
  MomentRun r;
  r.config = base_config(ctx);
  r.config.horizon = ctx.maybe("horizon").value_or(adaptive_horizon(r.config.beta, kMomentAtoms));
  r.K = ctx.maybe("K");
  const auto k = ctx.count("k");
  if (k > 64) throw ConfigError("k", "must be <= 64");
  r.k = static_cast<int>(k);
  r.replicates = ctx.count("replicates");
  r.epsilons = log_spaced(ctx.real("eps_min"), ctx.real("eps_max"), ctx.count("eps_count"));
  r.threads = ctx.inv.threads;
  const auto report = moment_exponent(r);
  for (const auto& note : report.notes) {
    if (note.find("population cap") != std::string::npos) ctx.cap_hit = true;
  }
  ctx.report("moments", report);
  ctx.log << report.name << " " << format_double(report.estimate) << " +- "
          << format_double(report.std_error) << '\n';
}

void holder(Context& ctx) {
  HolderRun r;
  const double beta = ctx.real("beta");
  if (!(beta > 0.0)) throw ConfigError("beta", "must be > 0");
  const std::size_t atoms = ctx.count("atoms");
  if (atoms < 1) throw ConfigError("atoms", "must be >= 1");
  r.config = dimension_config(beta, atoms, ctx.real("dt"));
  r.config.lambda = ctx.real("lambda");
  r.config.seed = ctx.c.at("seed").get<std::uint64_t>();
  if (const auto h = ctx.maybe("horizon")) r.config.horizon = *h;
  r.recentre = parse_flag("recentre", ctx.text("recentre"));
  r.threads = ctx.inv.threads;
  const auto defaults = default_box_scales(atoms);
  r.epsilons = log_spaced(ctx.maybe("eps_min").value_or(defaults.front()),
                          ctx.maybe("eps_max").value_or(defaults.back()), ctx.count("eps_count"));
  bool capped = false;
  const auto report = holder_estimate(r, &capped);
  ctx.cap_hit = capped;
  ctx.report("holder", report);
  ctx.log << "holder slope " << format_double(report.estimate) << '\n';
}

void validate(Context& ctx) {
  const std::string identity = ctx.text("identity");
  const SimConfig s = base_config(ctx);
  const int threads = ctx.inv.threads;
  ValidationReport report;
  if (identity == "many-to-one") {
    ManyToOneRun r;
    r.config = s;
    r.t = ctx.real("t");
    r.f = parse_test_function(ctx.text("f"));
    const auto I = parse_interval(ctx.text("interval"));
    if (!I) throw ConfigError("interval", "the empty set is only accepted by many-to-two");
    r.interval = *I;
    r.K = ctx.real("K");
    r.runs = ctx.count("runs");
    r.single_runs = ctx.count("single_runs");
    r.threads = threads;
    report = validate_many_to_one(r);
  } else if (identity == "many-to-two") {
    ManyToTwoRun r;
    r.config = s;
    r.t = ctx.real("t");
    r.interval = parse_interval(ctx.text("interval"));
    r.runs = ctx.count("runs");
    r.pair_samples = ctx.count("pair_samples");
    r.single_runs = ctx.count("single_runs");
    r.threads = threads;
    report = validate_many_to_two(r);
  } else if (identity == "exit-bound") {
    ExitBoundRun r;
    r.ys = parse_list("ys", ctx.text("ys"));
    r.widths = parse_list("widths", ctx.text("widths"));
    r.samples = ctx.count("samples");
    r.seed = s.seed;
    report = validate_exit_bound(r);
  } else if (identity == "harmonic") {
    HarmonicRun r;
    r.config = s;
    r.t = ctx.real("t");
    const auto I = parse_interval(ctx.text("interval"));
    if (!I) throw ConfigError("interval", "the empty set is only accepted by many-to-two");
    r.interval = *I;
    r.runs = ctx.count("runs");
    r.threads = threads;
    report = validate_harmonic_martingale(r);
  } else {
    throw ConfigError("identity", "expected many-to-one, many-to-two, exit-bound or harmonic");
  }
  ctx.report("validate", report);
  check_threshold(ctx, report);
  ctx.log << report.name << " z = " << format_double(report.z) << '\n';
}

void growth(Context& ctx) {
  GrowthRun r;
  r.config = base_config(ctx);
  r.K = ctx.real("K");
  r.generations = ctx.count("generations");
  r.config.horizon = r.K * static_cast<double>(r.generations);
  r.runs = ctx.count("runs");
  r.max_attempts = ctx.count("max_attempts");
  r.threads = ctx.inv.threads;
  const auto report = validate_growth_rate(r);
  ctx.report("growth", report);
  if (!(std::abs(report.lhs - report.rhs) <= 0.1)) {
    ctx.breach = true;
    ctx.log << "check failed: |statistic - e^(-beta K)| = "
            << format_double(std::abs(report.lhs - report.rhs)) << " > 0.1\n";
  }
  ctx.log << "growth statistic " << format_double(report.lhs) << " vs "
          << format_double(report.rhs) << '\n';
}

}  // namespace

int execute(const Invocation& inv, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(inv.out_dir, ec);
  if (ec) throw std::ios_base::failure("cannot create " + inv.out_dir.string() + ": " + ec.message());
  Context ctx{inv, inv.config, log, false, false, {}};
  ctx.write("config.json", [&](std::ostream& o) { o << inv.config.dump(2) << '\n'; });

  const std::string& sub = inv.subcommand;
  if (sub == "simulate") simulate(ctx);
  else if (sub == "exitlaw") exitlaw(ctx);
  else if (sub == "dimension") dimension(ctx);
  else if (sub == "moments") moments(ctx);
  else if (sub == "holder") holder(ctx);
  else if (sub == "validate") validate(ctx);
  else if (sub == "growth") growth(ctx);
  else throw UsageError("unknown subcommand '" + sub + "'");

  if (ctx.cap_hit) {
    ctx.warnings.push_back("population cap reached");
    log << "warning: population cap reached\n";
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Json meta;
  meta["subcommand"] = sub;
  meta["seed"] = inv.config.contains("seed") ? inv.config["seed"] : Json(nullptr);
  meta["seed_drawn"] = inv.seed_drawn;
  meta["wall_time_s"] = wall;
  meta["threads"] = inv.threads;
  meta["cap_hit"] = ctx.cap_hit;
  meta["warnings"] = ctx.warnings;
  meta["check_failed"] = ctx.breach;
  ctx.write("meta.json", [&](std::ostream& o) { o << meta.dump(2) << '\n'; });
  return inv.strict && ctx.breach ? kExitStrict : kExitOk;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const Invocation inv = parse(args);
    if (inv.help) {
      std::cout << inv.help_text;
      return kExitOk;
    }
    return execute(inv, std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for the flags\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid value: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace hbbm::cli
