#include "gridicl/world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include "gridicl/errors.hpp"
#include "gridicl/rng.hpp"

namespace gridicl {

namespace {

constexpr std::array<std::string_view, kNumActions> kActionNames = {"PULL",  "PUSH",  "STAY",
                                                                    "LTURN", "RTURN", "WALK"};
constexpr std::array<std::string_view, kNumShapes> kShapeNames = {"circle", "square", "cylinder"};
constexpr std::array<std::string_view, kNumColors> kColorNames = {"red", "green", "blue", "yellow"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::optional<std::size_t> WorldState::object_at(Position p) const {
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (objects[i].pos == p) return i;
  return std::nullopt;
}

WorldState canonical(WorldState state) {
  std::sort(state.objects.begin(), state.objects.end(), [](const ObjectSpec& a, const ObjectSpec& b) {
    return std::tie(a.pos.y, a.pos.x) < std::tie(b.pos.y, b.pos.x);
  });
  return state;
}

bool operator==(const WorldState& a, const WorldState& b) {
  if (a.grid_size != b.grid_size || a.agent != b.agent || a.objects.size() != b.objects.size())
    return false;
  if (a.objects == b.objects) return true;
  return canonical(a).objects == canonical(b).objects;
}

void validate(const WorldState& state) {
  if (state.grid_size <= 0) throw DimensionError("grid_size must be positive");
  if (!state.in_bounds(state.agent.pos)) throw DimensionError("agent position out of bounds");
  if (static_cast<int>(state.agent.dir) > 3) throw DimensionError("agent heading out of range");
  std::vector<Position> seen;
  seen.reserve(state.objects.size());
  for (const auto& o : state.objects) {
    if (!state.in_bounds(o.pos)) throw DimensionError("object position out of bounds");
    if (o.size < kMinSize || o.size > kMaxSize) throw DimensionError("object size outside 1..4");
    if (static_cast<int>(o.shape) >= kNumShapes || static_cast<int>(o.color) >= kNumColors)
      throw DimensionError("object attribute out of range");
    seen.push_back(o.pos);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw DimensionError("two objects share a cell");
}

std::string_view action_name(Action a) { return kActionNames[static_cast<int>(a)]; }

Action action_from_name(std::string_view s) {
  const std::string u = upper(s);
  for (int i = 0; i < kNumActions; ++i)
    if (kActionNames[i] == u) return static_cast<Action>(i);
  throw MappingError("unknown action '" + std::string(s) + "'");
}

std::string join_actions(const ActionSequence& seq, char sep) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += sep;
    out += action_name(seq[i]);
  }
  return out;
}

ActionSequence split_actions(std::string_view text, char sep) {
  ActionSequence out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto end = text.find(sep, start);
    out.push_back(action_from_name(text.substr(start, end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string_view shape_name(Shape s) { return kShapeNames[static_cast<int>(s)]; }
std::string_view color_name(Color c) { return kColorNames[static_cast<int>(c)]; }

Shape shape_from_name(std::string_view s) {
  for (int i = 0; i < kNumShapes; ++i)
    if (kShapeNames[i] == s) return static_cast<Shape>(i);
  throw MappingError("unknown shape '" + std::string(s) + "'");
}

Color color_from_name(std::string_view s) {
  for (int i = 0; i < kNumColors; ++i)
    if (kColorNames[i] == s) return static_cast<Color>(i);
  throw MappingError("unknown color '" + std::string(s) + "'");
}

Heading turn_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }
Heading turn_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }
Heading opposite(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 2) % 4); }

Position step(Position p, Heading h) {
  switch (h) {
    case Heading::north: return {p.x, p.y - 1};
    case Heading::east: return {p.x + 1, p.y};
    case Heading::south: return {p.x, p.y + 1};
    case Heading::west: return {p.x - 1, p.y};
  }
  return p;
}

WorldState new_random_state(std::uint64_t seed, int grid_size, int object_count) {
  if (grid_size <= 0) throw CapacityError("grid_size must be positive");
  const int cells = grid_size * grid_size;
  if (object_count < 0 || object_count > cells - 1)
    throw CapacityError("cannot place " + std::to_string(object_count) + " objects on a " +
                        std::to_string(grid_size) + "x" + std::to_string(grid_size) + " grid");
  Rng rng(seed);
  WorldState state;
  state.grid_size = grid_size;
  const int agent_cell = static_cast<int>(rng.below(static_cast<std::uint64_t>(cells)));
  state.agent.pos = {agent_cell % grid_size, agent_cell / grid_size};
  state.agent.dir = static_cast<Heading>(rng.below(4));

  // Partial Fisher-Yates over the free cells.
  std::vector<int> free_cells;
  free_cells.reserve(static_cast<std::size_t>(cells - 1));
  for (int c = 0; c < cells; ++c)
    if (c != agent_cell) free_cells.push_back(c);
  for (int i = 0; i < object_count; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(free_cells.size() - static_cast<std::size_t>(i));
    std::swap(free_cells[static_cast<std::size_t>(i)], free_cells[j]);
    ObjectSpec o;
    o.pos = {free_cells[static_cast<std::size_t>(i)] % grid_size, free_cells[static_cast<std::size_t>(i)] / grid_size};
    o.shape = static_cast<Shape>(rng.below(kNumShapes));
    o.color = static_cast<Color>(rng.below(kNumColors));
    o.size = rng.range(kMinSize, kMaxSize);
    state.objects.push_back(o);
  }
  return state;
}

WorldState simulate(const WorldState& state, const ActionSequence& actions) {
  WorldState s = state;
  // Pending half-moves of heavy objects, keyed by object index.
  std::map<std::size_t, int> pending;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Action a = actions[i];
    switch (a) {
      case Action::lturn: s.agent.dir = turn_left(s.agent.dir); break;
      case Action::rturn: s.agent.dir = turn_right(s.agent.dir); break;
      case Action::stay: break;
      case Action::walk: {
        const Position next = step(s.agent.pos, s.agent.dir);
        if (!s.in_bounds(next))
          throw ExecutionError("WALK at step " + std::to_string(i) + " leaves the grid");
        s.agent.pos = next;
        break;
      }
      case Action::push:
      case Action::pull: {
        const auto idx = s.object_at(s.agent.pos);
        if (!idx)
          throw ExecutionError(std::string(action_name(a)) + " at step " + std::to_string(i) +
                               " with no object in the agent's cell");
        const Heading move = a == Action::push ? s.agent.dir : opposite(s.agent.dir);
        const Position dest = step(s.objects[*idx].pos, move);
        if (!s.in_bounds(dest) || s.object_at(dest))
          throw ExecutionError(std::string(action_name(a)) + " at step " + std::to_string(i) +
                               " is blocked");
        if (s.objects[*idx].heavy() && ++pending[*idx] < 2) break;
        pending.erase(*idx);
        s.objects[*idx].pos = dest;
        s.agent.pos = dest;
        break;
      }
    }
  }
  return s;
}

namespace {

constexpr int kShapeOffset = 0;
constexpr int kColorOffset = 4;
constexpr int kSizeOffset = 9;
constexpr int kAgentOffset = 14;
constexpr int kHeadingOffset = 15;

}  // namespace

DenseVector encode_one_hot(const WorldState& state) {
  const int cells = state.grid_size * state.grid_size;
  DenseVector v(static_cast<std::size_t>(cells * kCellWidth), 0.0f);
  for (int c = 0; c < cells; ++c) {
    const std::size_t base = static_cast<std::size_t>(c * kCellWidth);
    v[base + kShapeOffset + 3] = 1.0f;
    v[base + kColorOffset + 4] = 1.0f;
    v[base + kSizeOffset + 4] = 1.0f;
  }
  for (const auto& o : state.objects) {
    const std::size_t base = static_cast<std::size_t>((o.pos.y * state.grid_size + o.pos.x) * kCellWidth);
    v[base + kShapeOffset + 3] = 0.0f;
    v[base + kColorOffset + 4] = 0.0f;
    v[base + kSizeOffset + 4] = 0.0f;
    v[base + kShapeOffset + static_cast<int>(o.shape)] = 1.0f;
    v[base + kColorOffset + static_cast<int>(o.color)] = 1.0f;
    v[base + kSizeOffset + (o.size - 1)] = 1.0f;
  }
  const std::size_t abase =
      static_cast<std::size_t>((state.agent.pos.y * state.grid_size + state.agent.pos.x) * kCellWidth);
  v[abase + kAgentOffset] = 1.0f;
  v[abase + kHeadingOffset + static_cast<int>(state.agent.dir)] = 1.0f;

  // Every cell has three active slots and the agent cell two more.
  const float inv = 1.0f / std::sqrt(static_cast<float>(3 * cells + 2));
  for (auto& x : v) x *= inv;
  return v;
}

float cosine(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw DimensionError("vector sizes differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0f;
  return static_cast<float>(dot / std::sqrt(na * nb));
}

double hamming_similarity(const WorldState& a, const WorldState& b) {
  if (a.grid_size != b.grid_size) throw DimensionError("grid sizes differ");
  const int n = a.grid_size;
  // Descriptor: object code (0 = empty) * 8 + agent flag/heading code.
  auto descriptors = [n](const WorldState& s) {
    std::vector<int> d(static_cast<std::size_t>(n * n), 0);
    for (const auto& o : s.objects)
      d[static_cast<std::size_t>(o.pos.y * n + o.pos.x)] =
          (1 + static_cast<int>(o.shape) * 100 + static_cast<int>(o.color) * 10 + o.size) * 8;
    d[static_cast<std::size_t>(s.agent.pos.y * n + s.agent.pos.x)] += 1 + static_cast<int>(s.agent.dir);
    return d;
  };
  const auto da = descriptors(a);
  const auto db = descriptors(b);
  int same = 0;
  for (std::size_t i = 0; i < da.size(); ++i) same += da[i] == db[i];
  return static_cast<double>(same) / static_cast<double>(da.size());
}

}  // namespace gridicl
