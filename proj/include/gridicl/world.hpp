#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridicl {

struct Position {
  int x = 0;  // column
  int y = 0;  // row, 0 at the top; north is -y
  auto operator<=>(const Position&) const = default;
};

// Heading codes as they appear in serialized states ("d": 0..3).
enum class Heading : std::uint8_t { north = 0, east = 1, south = 2, west = 3 };

enum class Shape : std::uint8_t { circle = 0, square = 1, cylinder = 2 };
enum class Color : std::uint8_t { red = 0, green = 1, blue = 2, yellow = 3 };

inline constexpr int kNumShapes = 3;
inline constexpr int kNumColors = 4;
inline constexpr int kMinSize = 1;
inline constexpr int kMaxSize = 4;
inline constexpr int kDefaultGridSize = 6;

struct ObjectSpec {
  Shape shape = Shape::circle;
  Color color = Color::red;
  int size = 1;
  Position pos;
  bool operator==(const ObjectSpec&) const = default;

  bool heavy() const { return size >= 3; }
  // Same (shape, color, size) regardless of position.
  bool same_kind(const ObjectSpec& o) const {
    return shape == o.shape && color == o.color && size == o.size;
  }
};

struct AgentPose {
  Position pos;
  Heading dir = Heading::east;
  bool operator==(const AgentPose&) const = default;
};

struct WorldState {
  int grid_size = kDefaultGridSize;
  AgentPose agent;
  std::vector<ObjectSpec> objects;

  bool in_bounds(Position p) const {
    return p.x >= 0 && p.y >= 0 && p.x < grid_size && p.y < grid_size;
  }
  // Index into objects of the object at p, if any.
  std::optional<std::size_t> object_at(Position p) const;

  // Order-insensitive over objects.
  friend bool operator==(const WorldState& a, const WorldState& b);
};

// Throws DimensionError / ExecutionError style errors (as Error) when an
// invariant does not hold.
void validate(const WorldState& state);

// Objects sorted by (y, x); equal states have equal canonical forms.
WorldState canonical(WorldState state);

enum class Action : std::uint8_t { pull = 0, push = 1, stay = 2, lturn = 3, rturn = 4, walk = 5 };
inline constexpr int kNumActions = 6;
using ActionSequence = std::vector<Action>;

inline bool is_turn(Action a) { return a == Action::lturn || a == Action::rturn; }

std::string_view action_name(Action a);       // "WALK", "LTURN", ...
Action action_from_name(std::string_view s);  // accepts any case; MappingError otherwise
std::string join_actions(const ActionSequence& seq, char sep = ',');
ActionSequence split_actions(std::string_view text, char sep = ',');

std::string_view shape_name(Shape s);
std::string_view color_name(Color c);
Shape shape_from_name(std::string_view s);
Color color_from_name(std::string_view s);

Heading turn_left(Heading h);
Heading turn_right(Heading h);
Heading opposite(Heading h);
Position step(Position p, Heading h);

// Uniform placement of the agent (random heading) and object_count objects on
// distinct cells not occupied by the agent. Deterministic per seed.
WorldState new_random_state(std::uint64_t seed, int grid_size, int object_count);

// Executes actions from state. Heavy objects (size >= 3) move every second
// push/pull; light objects move on every one. The agent moves with the object.
WorldState simulate(const WorldState& state, const ActionSequence& actions);

using DenseVector = std::vector<float>;

// Per-cell block widths of the one-hot layout: shape(3+none), color(4+none),
// size(4+none), agent flag, heading(4). Cells are row-major.
inline constexpr int kCellWidth = 4 + 5 + 5 + 1 + 4;

DenseVector encode_one_hot(const WorldState& state);
float cosine(const DenseVector& a, const DenseVector& b);

// Fraction of cells whose descriptor (object triple or empty, agent flag and
// heading) agrees.
double hamming_similarity(const WorldState& a, const WorldState& b);

}  // namespace gridicl
