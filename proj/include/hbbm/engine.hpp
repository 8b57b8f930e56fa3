#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hbbm/diffusion.hpp"
#include "hbbm/rng.hpp"

namespace hbbm {

inline constexpr std::uint64_t kDefaultSeed = 20240917;
inline constexpr std::size_t kDefaultMaxParticles = 2'000'000;

enum class Normalization { by_count, by_mean };

std::string_view to_string(Normalization n) noexcept;
Normalization parse_normalization(std::string_view text);

// Invalid configuration value; `field()` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct SimConfig {
  double beta = 1.0;      // branching rate
  double lambda = 0.0;    // vertical drift
  double horizon = 1.0;   // T
  double dt = 0.01;
  double K = 0.0;         // typicality onset
  std::uint64_t seed = kDefaultSeed;
  std::size_t max_particles = kDefaultMaxParticles;
  Normalization normalization = Normalization::by_count;

  void validate() const;
  [[nodiscard]] DiffusionParams diffusion() const noexcept { return {lambda, dt}; }
};

// |log y(s) - c*s| <= s^(2/3) with c = -(1/2 + lambda); for lambda = 0 this is
// log y(s) + s/2 in [-s^(2/3), s^(2/3)].
struct Envelope {
  double log_drift = -0.5;

  [[nodiscard]] bool violated(double s, double log_y) const noexcept {
    return std::abs(log_y - log_drift * s) > std::cbrt(s * s);
  }
};

// True when grid time `s` lies in [K, infinity) up to grid rounding.
[[nodiscard]] inline bool at_or_after(double s, double K) noexcept {
  return s >= K - 1e-12 * std::max(1.0, std::abs(K));
}

struct Particle {
  std::uint64_t id = 0;
  std::optional<std::uint64_t> parent;
  double birth_time = 0.0;
  double x = 0.0;
  double log_y = 0.0;
  bool typical_ok = true;                 // under the configured onset K
  std::optional<double> first_violation;  // first grid time >= K outside the envelope
  std::optional<double> last_violation;   // last grid time (any) outside the envelope
  std::uint64_t stream_key = 0;

  [[nodiscard]] bool typical_under(double K) const noexcept {
    return !last_violation || !at_or_after(*last_violation, K);
  }
  [[nodiscard]] State state() const noexcept { return {x, log_y}; }
};

// Every particle that ever lived, indexed by id. Paths are not stored; they
// are replayed from the stream key and the parent's end state.
struct GenealogyNode {
  std::uint64_t stream_key = 0;
  std::int64_t parent = -1;
  double birth = 0.0;
  double end = 0.0;  // branch time, or the snapshot time if alive
  std::uint32_t depth = 0;
  bool alive = false;
  State end_state{};
};

struct PopulationEvent {
  double time = 0.0;
  std::size_t count = 0;
};

struct ParticleSnapshot {
  SimConfig config;
  double time = 0.0;
  bool capped = false;
  double start_time = 0.0;  // birth time of the root of the genealogy
  double grid_end = 0.0;    // last point of the time grid (the run's end time)
  State origin{};           // start state of the root of the genealogy
  std::vector<Particle> particles;
  std::vector<PopulationEvent> population_history;
  std::vector<GenealogyNode> genealogy;

  [[nodiscard]] std::size_t population() const noexcept { return particles.size(); }
};

// A particle from which a subtree is grown.
struct Founder {
  Stream stream{0};
  State state{};
  double birth_time = 0.0;
  std::optional<double> first_violation;
  std::optional<double> last_violation;
  bool check_start = false;  // evaluate the envelope at birth_time (grid time 0)
};

// Branching Brownian motion from the point (0, 1). Deterministic in
// config.seed for any thread count (0 = OpenMP default).
ParticleSnapshot run(const SimConfig& config, int threads = 0);

// Grows the subtree of `founder` up to time `until`; the grid, envelope, and
// population cap come from `config`.
ParticleSnapshot run_from(const Founder& founder, double until, const SimConfig& config,
                          int threads = 0);

// Single-threaded depth-first implementation kept as a test oracle for run().
// Does not implement the population cap.
ParticleSnapshot run_serial_reference(const SimConfig& config);

struct LineagePoint {
  double time = 0.0;
  double x = 0.0;
  double log_y = 0.0;
};

// Ancestral path of particle `id` from the root, at grid resolution plus the
// branch points.
std::vector<LineagePoint> lineage(const ParticleSnapshot& snapshot, std::uint64_t id);

std::size_t typical_count(const ParticleSnapshot& snapshot, double K);

// `id,parent,birth_time,x,logY,typical_ok,first_violation`, one row per living
// particle; absent optionals are empty fields.
void write_snapshot_csv(std::ostream& out, const ParticleSnapshot& snapshot);
// `time,count` rows of the population history.
void write_population_csv(std::ostream& out, const ParticleSnapshot& snapshot);

}  // namespace hbbm
