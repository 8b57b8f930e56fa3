#include "hbbm/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "hbbm/analysis.hpp"
#include "hbbm/engine.hpp"
#include "hbbm/io.hpp"
#include "hbbm/measures.hpp"

namespace hbbm::cli {

namespace {

using Json = nlohmann::ordered_json;

enum class Kind { real, count, text, seed };

struct Key {
  std::string name;
  Kind kind;
  Json fallback;  // null: required, or absent when `optional`
  std::string help;
  bool optional = false;
};

Key real(std::string name, Json fallback, std::string help) {
  return {std::move(name), Kind::real, std::move(fallback), std::move(help)};
}
Key count(std::string name, Json fallback, std::string help) {
  return {std::move(name), Kind::count, std::move(fallback), std::move(help)};
}
Key text(std::string name, Json fallback, std::string help) {
  return {std::move(name), Kind::text, std::move(fallback), std::move(help)};
}
Key maybe(Key k) {
  k.optional = true;
  return k;
}

Key seed_key() {
  return {"seed", Kind::seed, Json(kDefaultSeed), "RNG seed (unsigned integer, or 'random')"};
}
Key beta_key() { return real("beta", nullptr, "branching rate beta (1/time), > 0"); }
Key lambda_key() { return real("lambda", 0.0, "vertical drift lambda (1/time), > -1/2"); }
Key dt_key(double d) { return real("dt", d, "time step (time), > 0"); }
Key normalization_key() {
  return text("normalization", "by-count", "measure weights: by-count or by-mean");
}

struct Command {
  std::string name;
  std::string help;
  std::vector<Key> keys;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"simulate",
       "Run one BBM to the horizon; write the particles, the exit measure and its CDF",
       {beta_key(), real("horizon", nullptr, "horizon T (time), > 0"), lambda_key(), dt_key(0.01),
        real("K", 0.0, "typicality onset K (time), >= 0"), seed_key(),
        count("max_particles", kDefaultMaxParticles, "population cap (particles)"),
        normalization_key()}},
      {"exitlaw",
       "Simulate single-particle exits to t plus the exact residual; KS distance to Cauchy(0, 1)",
       {real("t", 5.0, "path time before the residual (time), >= 0"),
        count("samples", 100000, "number of exits, >= 10000"), lambda_key(), dt_key(0.01),
        seed_key()}},
      {"dimension",
       "Box dimension of the exit measure over independent capped replicates",
       {beta_key(), text("mode", "support", "support or all-points"),
        real("mass_floor", kDefaultMassFloor, "support mode: mass fraction left uncovered, [0, 1)"),
        count("replicates", 20, "independent replicates"),
        count("atoms", 1'000'000, "population cap per replicate (particles)"),
        maybe(real("horizon", nullptr, "time bound (time); default 3 ln(atoms) / beta")),
        dt_key(0.05), lambda_key(), seed_key(),
        maybe(real("scale_min", nullptr, "smallest box size (radians); default 30 / atoms")),
        maybe(real("scale_max", nullptr, "largest box size (radians); default 2 pi / 8")),
        count("scale_count", 12, "number of log-spaced box sizes, >= 4"),
        text("recentre", "true", "true: median/IQR chart of the exits; false: identity chart")}},
      {"moments",
       "Decay exponent of E[mu(I_eps)^k] over the centred intervals I_eps = [-eps/2, eps/2]",
       {beta_key(), maybe(real("K", nullptr, "typicality onset (time); absent: full measure")),
        count("k", 2, "moment order, >= 2"), count("replicates", 500, "independent runs, >= 200"),
        maybe(real("horizon", nullptr, "horizon (time); default ln(10^4) / beta")),
        real("eps_min", kMomentEpsMin, "smallest interval width (boundary units)"),
        real("eps_max", kMomentEpsMax, "largest interval width (boundary units)"),
        count("eps_count", kMomentEpsCount, "number of log-spaced widths, >= 4"), dt_key(0.05), lambda_key(),
        normalization_key(), seed_key()}},
      {"holder",
       "Modulus-of-continuity slope of the exit-measure CDF for one capped run",
       {beta_key(), count("atoms", 100000, "population cap (particles)"),
        maybe(real("horizon", nullptr, "time bound (time); default 3 ln(atoms) / beta")),
        maybe(real("eps_min", nullptr, "smallest arc length (radians); default 30 / atoms")),
        maybe(real("eps_max", nullptr, "largest arc length (radians); default 2 pi / 8")),
        count("eps_count", 12, "number of log-spaced arc lengths, >= 4"),
        text("recentre", "true", "true: median/IQR chart of the exits; false: identity chart"),
        dt_key(0.05), lambda_key(), seed_key()}},
      {"validate",
       "Monte Carlo check of one identity: many-to-one, many-to-two, exit-bound or harmonic",
       {text("identity", nullptr, "many-to-one, many-to-two, exit-bound or harmonic"),
        real("beta", 0.5, "branching rate beta (1/time), > 0"), real("t", 3.0, "time (time)"),
        text("f", "one", "many-to-one test function: one, interval or envelope"),
        text("interval", "-1:1",
             "boundary interval lo:hi (inf allowed), 'all' for the line, 'empty' for the empty set"),
        real("K", 1.0, "envelope onset (time)"), count("runs", 10000, "BBM replicates"),
        count("single_runs", 100000, "single-particle paths"),
        count("pair_samples", 10000, "many-to-two: two-particle samples"),
        count("samples", 100000, "exit-bound: exits per grid point"),
        text("ys", "0.1,0.3,1,3,10", "exit-bound: starting heights (comma-separated)"),
        text("widths", "0.01,0.03,0.1,0.3,1", "exit-bound: interval widths (comma-separated)"),
        dt_key(0.01), lambda_key(), seed_key()}},
      {"growth",
       "Geometric-mean growth statistic along a uniformly re-marked typical lineage",
       {real("beta", 1.0, "branching rate beta (1/time), > 0"),
        real("K", 1.0, "generation length and typicality onset (time), > 0"),
        count("generations", 10, "number of generations n, >= 1"),
        count("runs", 200, "accepted runs wanted"),
        count("max_attempts", 100000, "attempt budget before giving up"), dt_key(0.01),
        lambda_key(), seed_key()}},
  };
  return table;
}

const Command& command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return c;
  }
  throw UsageError("unknown subcommand '" + name + "'");
}

double to_real(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(key + ": expected a number, got '" + s + "'");
  }
}

std::uint64_t to_count(const std::string& key, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw UsageError(key + ": expected a non-negative integer, got '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw UsageError(key + ": integer out of range: '" + s + "'");
  }
}

// Flag text or a config-file value, converted to the key's JSON type.
Json convert(const Key& key, const Json& v) {
  const bool is_text = v.is_string();
  const std::string s = is_text ? v.get<std::string>() : v.dump();
  switch (key.kind) {
    case Kind::real:
      if (v.is_number()) return v.get<double>();
      return to_real(key.name, s);
    case Kind::count:
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      return to_count(key.name, s);
    case Kind::seed:
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      if (s == "random") return "random";
      return to_count(key.name, s);
    case Kind::text:
      if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
      if (!is_text) throw UsageError(key.name + ": expected a string");
      return s;
  }
  return v;
}

Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config: '" + path + "' must hold a JSON object");
  return j;
}

Json resolve(const Command& cmd, const std::optional<std::string>& config_path,
             const std::map<std::string, std::string>& flags) {
  Json file = Json::object();
  if (config_path) file = read_config_file(*config_path);
  if (file.contains("subcommand")) {
    if (file["subcommand"] != cmd.name) {
      throw UsageError("config: file is for subcommand " + file["subcommand"].dump() + ", not " +
                       cmd.name);
    }
    file.erase("subcommand");
  }
  for (const auto& [k, v] : file.items()) {
    const bool known = std::any_of(cmd.keys.begin(), cmd.keys.end(),
                                   [&](const Key& key) { return key.name == k; });
    if (!known) throw UsageError("config: unknown key '" + k + "' for " + cmd.name);
  }
  Json out = Json::object();
  out["subcommand"] = cmd.name;
  for (const auto& key : cmd.keys) {
    Json v = key.fallback;
    if (file.contains(key.name) && !file[key.name].is_null()) v = convert(key, file[key.name]);
    if (const auto it = flags.find(key.name); it != flags.end()) v = convert(key, it->second);
    if (v.is_null()) {
      if (key.optional) continue;
      throw UsageError("--" + key.name + " is required");
    }
    out[key.name] = v;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : commands()) n.push_back(c.name);
    return n;
  }();
  return names;
}

Invocation parse(const std::vector<std::string>& args) {
  CLI::App app{"Branching Brownian motion on the hyperbolic plane: simulator and estimators", "hbbm"};
  app.require_subcommand(1, 1);
  std::map<std::string, std::map<std::string, std::string>> flags;
  std::optional<std::string> config_path;
  std::string out_dir = "hbbm-out";
  int threads = 0;
  bool strict = false;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    subs[cmd.name] = sub;
    auto& values = flags[cmd.name];
    for (const auto& key : cmd.keys) {
      std::string help = key.help;
      if (!key.fallback.is_null()) {
        help += " [default: " +
                (key.fallback.is_string() ? key.fallback.get<std::string>() : key.fallback.dump()) +
                "]";
      } else if (!key.optional) {
        help += " (required)";
      }
      sub->add_option_function<std::string>(
             "--" + key.name, [&values, name = key.name](const std::string& v) { values[name] = v; },
             help)
          ->type_name(key.kind == Kind::real    ? "REAL"
                      : key.kind == Kind::count ? "INT"
                                                : "TEXT");
    }
    sub->add_option_function<std::string>(
        "--config", [&](const std::string& v) { config_path = v; },
        "JSON file of flat keys named like the flags; flags override it");
    sub->add_option("--out", out_dir, "output directory [default: hbbm-out]");
    sub->add_option("--threads", threads,
                    "worker threads (0 = OpenMP default); never changes the outputs")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--strict", strict, "exit with status 2 when a validation check fails");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  Invocation inv;
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    inv.help = true;
    inv.help_text = os.str();
    return inv;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) inv.subcommand = name;
  }
  const Command& cmd = command(inv.subcommand);
  inv.config = resolve(cmd, config_path, flags[inv.subcommand]);
  if (inv.config.contains("seed") && inv.config["seed"] == "random") {
    std::random_device rd;
    inv.config["seed"] = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    inv.seed_drawn = true;
  }
  inv.out_dir = out_dir;
  inv.threads = threads;
  inv.strict = strict;
  return inv;
}

}  // namespace hbbm::cli
