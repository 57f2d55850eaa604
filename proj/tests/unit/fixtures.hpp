#pragma once

#include "gridicl/world.hpp"

namespace gridicl::testing {

// 6x6; agent (2,2) facing east; red circle size 2 at (4,2); blue square
// size 1 at (0,0); green circle size 4 at (2,5).
inline WorldState s0() {
  WorldState s;
  s.grid_size = 6;
  s.agent = {{2, 2}, Heading::east};
  s.objects = {
      {Shape::circle, Color::red, 2, {4, 2}},
      {Shape::square, Color::blue, 1, {0, 0}},
      {Shape::circle, Color::green, 4, {2, 5}},
  };
  return s;
}

inline ActionSequence rep(Action a, int n) { return ActionSequence(static_cast<std::size_t>(n), a); }

inline ActionSequence cat(std::initializer_list<ActionSequence> parts) {
  ActionSequence out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace gridicl::testing
