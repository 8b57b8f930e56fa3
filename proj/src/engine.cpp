#include "hbbm/engine.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <queue>
#include <utility>

#include "hbbm/io.hpp"
#include "segment.hpp"

namespace hbbm {

std::string_view to_string(Normalization n) noexcept {
  return n == Normalization::by_count ? "by-count" : "by-mean";
}

Normalization parse_normalization(std::string_view text) {
  if (text == "by-count") return Normalization::by_count;
  if (text == "by-mean") return Normalization::by_mean;
  throw ConfigError("normalization", "expected 'by-count' or 'by-mean', got '" +
                                         std::string(text) + "'");
}

void SimConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta", "must be > 0");
  if (!(lambda > -0.5) || !std::isfinite(lambda)) throw ConfigError("lambda", "must be > -1/2");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon", "must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be > 0");
  if (!(K >= 0.0) || !std::isfinite(K)) throw ConfigError("K", "must be >= 0");
  if (max_particles < 1) throw ConfigError("max_particles", "must be >= 1");
}

namespace {

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

// Yule genealogy in event order: node 0 is the founder and the k-th branch
// event creates nodes 2k+1 and 2k+2. Stops at `until` or when one more birth
// would exceed the population cap.
void grow_genealogy(const Founder& founder, double until, const SimConfig& config,
                    ParticleSnapshot& snap) {
  auto& nodes = snap.genealogy;
  nodes.push_back({founder.stream.key(), -1, founder.birth_time, 0.0, 0, false, {}});

  using Clock = std::pair<double, std::size_t>;
  std::priority_queue<Clock, std::vector<Clock>, std::greater<>> clocks;
  auto ring = [&](std::size_t i) {
    const Stream s(nodes[i].stream_key);
    clocks.emplace(nodes[i].birth + s.exponential(config.beta, Purpose::kClock, 0), i);
  };
  ring(0);

  std::size_t population = 1;
  snap.population_history.push_back({founder.birth_time, population});
  double snapshot_time = until;
  while (!clocks.empty() && clocks.top().first < until) {
    const Clock next = clocks.top();
    if (population + 1 > config.max_particles) {
      snap.capped = true;
      snapshot_time = next.first;
      break;
    }
    clocks.pop();
    const auto [t, i] = next;
    nodes[i].end = t;
    const auto [left, right] = Stream(nodes[i].stream_key).split();
    const std::uint32_t depth = nodes[i].depth + 1;
    for (const Stream child : {left, right}) {
      nodes.push_back({child.key(), static_cast<std::int64_t>(i), t, 0.0, depth, false, {}});
      ring(nodes.size() - 1);
    }
    ++population;
    snap.population_history.push_back({t, population});
  }
  while (!clocks.empty()) {
    auto& node = nodes[clocks.top().second];
    node.alive = true;
    node.end = snapshot_time;
    clocks.pop();
  }
  snap.time = snapshot_time;
}

}  // namespace

ParticleSnapshot run_from(const Founder& founder, double until, const SimConfig& config,
                          int threads) {
  config.validate();
  if (!(until >= founder.birth_time)) {
    throw std::invalid_argument("run_from: end time precedes the founder's birth");
  }
  ParticleSnapshot snap;
  snap.config = config;
  snap.origin = founder.state;
  snap.start_time = founder.birth_time;
  snap.grid_end = until;
  grow_genealogy(founder, until, config, snap);

  auto& nodes = snap.genealogy;
  const std::size_t n = nodes.size();
  std::vector<std::vector<std::size_t>> levels;
  for (std::size_t i = 0; i < n; ++i) {
    if (nodes[i].depth >= levels.size()) levels.resize(nodes[i].depth + 1);
    levels[nodes[i].depth].push_back(i);
  }

  const detail::SegmentContext ctx = detail::make_context(config, until);
  std::vector<double> first(n, detail::kNone);
  std::vector<double> last(n, detail::kNone);
  const int nthreads = resolve_threads(threads);

  // Each generation depends only on the end states of the previous one.
  for (const auto& level : levels) {
    const auto width = static_cast<std::int64_t>(level.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(nthreads) if (width > 32)
    for (std::int64_t j = 0; j < width; ++j) {
      const std::size_t i = level[static_cast<std::size_t>(j)];
      GenealogyNode& node = nodes[i];
      const bool is_root = node.parent < 0;
      const auto p = static_cast<std::size_t>(node.parent);
      const State start = is_root ? founder.state : nodes[p].end_state;
      const double parent_first = is_root ? detail::from_optional(founder.first_violation) : first[p];
      const double parent_last = is_root ? detail::from_optional(founder.last_violation) : last[p];
      const auto seg = detail::simulate_segment(Stream(node.stream_key), start, node.birth,
                                                node.end, is_root && founder.check_start, ctx);
      node.end_state = seg.end;
      first[i] = detail::inherit_first(parent_first, seg.first_violation);
      last[i] = detail::inherit_last(parent_last, seg.last_violation);
    }
  }

  snap.particles.reserve(snap.population_history.back().count);
  for (std::size_t i = 0; i < n; ++i) {
    const GenealogyNode& node = nodes[i];
    if (!node.alive) continue;
    Particle p;
    p.id = i;
    if (node.parent >= 0) p.parent = static_cast<std::uint64_t>(node.parent);
    p.birth_time = node.birth;
    p.x = node.end_state.x;
    p.log_y = node.end_state.log_y;
    p.first_violation = detail::as_optional(first[i]);
    p.last_violation = detail::as_optional(last[i]);
    p.typical_ok = !p.first_violation.has_value();
    p.stream_key = node.stream_key;
    snap.particles.push_back(p);
  }
  return snap;
}

ParticleSnapshot run(const SimConfig& config, int threads) {
  Founder root;
  root.stream = Stream::from_seed(config.seed);
  root.check_start = true;
  return run_from(root, config.horizon, config, threads);
}

namespace {

struct RefNode {
  std::uint64_t key = 0;
  std::int64_t parent = -1;
  double birth = 0.0;
  double end = 0.0;
  bool branched = false;
  std::int64_t left = -1;
  std::int64_t right = -1;
  State end_state{};
  double first = detail::kNone;
  double last = detail::kNone;
  std::uint32_t depth = 0;
};

class ReferenceTree {
 public:
  ReferenceTree(const SimConfig& config)
      : config_(config), ctx_(detail::make_context(config, config.horizon)) {}

  std::int64_t grow(Stream stream, std::int64_t parent, double birth, State start,
                    double first, double last, std::uint32_t depth) {
    const double branch = birth + stream.exponential(config_.beta, Purpose::kClock, 0);
    const bool branched = branch < config_.horizon;
    const double end = branched ? branch : config_.horizon;
    const auto seg = detail::simulate_segment(stream, start, birth, end, parent < 0, ctx_);
    const auto self = static_cast<std::int64_t>(nodes.size());
    RefNode node;
    node.key = stream.key();
    node.parent = parent;
    node.birth = birth;
    node.end = end;
    node.branched = branched;
    node.end_state = seg.end;
    node.first = detail::inherit_first(first, seg.first_violation);
    node.last = detail::inherit_last(last, seg.last_violation);
    node.depth = depth;
    nodes.push_back(node);
    if (branched) {
      const auto [l, r] = stream.split();
      const RefNode copy = nodes[static_cast<std::size_t>(self)];
      const std::int64_t li = grow(l, self, end, copy.end_state, copy.first, copy.last, depth + 1);
      const std::int64_t ri = grow(r, self, end, copy.end_state, copy.first, copy.last, depth + 1);
      nodes[static_cast<std::size_t>(self)].left = li;
      nodes[static_cast<std::size_t>(self)].right = ri;
    }
    return self;
  }

  std::vector<RefNode> nodes;

 private:
  SimConfig config_;
  detail::SegmentContext ctx_;
};

}  // namespace

ParticleSnapshot run_serial_reference(const SimConfig& config) {
  config.validate();
  ReferenceTree tree(config);
  tree.grow(Stream::from_seed(config.seed), -1, 0.0, State{}, detail::kNone, detail::kNone, 0);
  auto& nodes = tree.nodes;

  // Ids follow branch-event order, as in run().
  std::vector<std::size_t> branch_order;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].branched) branch_order.push_back(i);
  }
  std::sort(branch_order.begin(), branch_order.end(),
            [&](std::size_t a, std::size_t b) { return nodes[a].end < nodes[b].end; });
  std::vector<std::size_t> id(nodes.size(), 0);
  for (std::size_t k = 0; k < branch_order.size(); ++k) {
    const RefNode& b = nodes[branch_order[k]];
    id[static_cast<std::size_t>(b.left)] = 2 * k + 1;
    id[static_cast<std::size_t>(b.right)] = 2 * k + 2;
  }

  ParticleSnapshot snap;
  snap.config = config;
  snap.time = config.horizon;
  snap.grid_end = config.horizon;
  snap.genealogy.resize(nodes.size());
  snap.population_history.push_back({0.0, 1});
  for (std::size_t k = 0; k < branch_order.size(); ++k) {
    snap.population_history.push_back({nodes[branch_order[k]].end, k + 2});
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const RefNode& r = nodes[i];
    GenealogyNode& g = snap.genealogy[id[i]];
    g.stream_key = r.key;
    g.parent = r.parent < 0 ? -1 : static_cast<std::int64_t>(id[static_cast<std::size_t>(r.parent)]);
    g.birth = r.birth;
    g.end = r.end;
    g.depth = r.depth;
    g.alive = !r.branched;
    g.end_state = r.end_state;
    if (g.alive) {
      Particle p;
      p.id = id[i];
      if (g.parent >= 0) p.parent = static_cast<std::uint64_t>(g.parent);
      p.birth_time = r.birth;
      p.x = r.end_state.x;
      p.log_y = r.end_state.log_y;
      p.first_violation = detail::as_optional(r.first);
      p.last_violation = detail::as_optional(r.last);
      p.typical_ok = !p.first_violation.has_value();
      p.stream_key = r.key;
      snap.particles.push_back(p);
    }
  }
  std::sort(snap.particles.begin(), snap.particles.end(),
            [](const Particle& a, const Particle& b) { return a.id < b.id; });
  return snap;
}

std::vector<LineagePoint> lineage(const ParticleSnapshot& snapshot, std::uint64_t id) {
  const auto& nodes = snapshot.genealogy;
  if (id >= nodes.size()) {
    throw LookupError("lineage: unknown particle id " + std::to_string(id));
  }
  std::vector<std::size_t> chain;
  for (auto i = static_cast<std::int64_t>(id); i >= 0; i = nodes[static_cast<std::size_t>(i)].parent) {
    chain.push_back(static_cast<std::size_t>(i));
  }
  std::reverse(chain.begin(), chain.end());

  const detail::SegmentContext ctx = detail::make_context(snapshot.config, snapshot.grid_end);
  std::vector<LineagePoint> path;
  const GenealogyNode& root = nodes[chain.front()];
  path.push_back({root.birth, snapshot.origin.x, snapshot.origin.log_y});
  State start = snapshot.origin;
  for (const std::size_t i : chain) {
    const GenealogyNode& node = nodes[i];
    const auto seg = detail::simulate_segment(
        Stream(node.stream_key), start, node.birth, node.end, false, ctx,
        [&](double t, const State& s) { path.push_back({t, s.x, s.log_y}); });
    start = seg.end;
  }
  return path;
}

std::size_t typical_count(const ParticleSnapshot& snapshot, double K) {
  if (!(K <= snapshot.time) || K < 0.0) {
    throw DomainError("typical_count: onset K = " + std::to_string(K) +
                      " lies outside [0, snapshot time]");
  }
  return static_cast<std::size_t>(std::count_if(
      snapshot.particles.begin(), snapshot.particles.end(),
      [K](const Particle& p) { return p.typical_under(K); }));
}

void write_snapshot_csv(std::ostream& out, const ParticleSnapshot& snapshot) {
  out << "id,parent,birth_time,x,logY,typical_ok,first_violation\n";
  for (const auto& p : snapshot.particles) {
    out << p.id << ',';
    if (p.parent) out << *p.parent;
    out << ',';
    write_double(out, p.birth_time);
    out << ',';
    write_double(out, p.x);
    out << ',';
    write_double(out, p.log_y);
    out << ',' << (p.typical_ok ? 1 : 0) << ',';
    write_optional(out, p.first_violation);
    out << '\n';
  }
}

void write_population_csv(std::ostream& out, const ParticleSnapshot& snapshot) {
  out << "time,count\n";
  for (const auto& e : snapshot.population_history) {
    write_double(out, e.time);
    out << ',' << e.count << '\n';
  }
}

}  // namespace hbbm
