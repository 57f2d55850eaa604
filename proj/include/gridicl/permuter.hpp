#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gridicl/world.hpp"

namespace gridicl {

// Bijection over symbol codes [0, size). map[i] is the image of code i.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> map);  // MappingError unless bijective

  static Permutation identity(int size);
  // Uniform over all size! bijections; deterministic per seed.
  static Permutation sample(std::uint64_t seed, int size);

  int size() const { return static_cast<int>(map_.size()); }
  int operator()(int code) const;  // MappingError when out of domain
  const std::vector<int>& codes() const { return map_; }

  std::vector<int> apply(const std::vector<int>& seq) const;
  ActionSequence apply(const ActionSequence& seq) const;  // action table only
  Permutation inverse() const;

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<int> map_;
};

inline constexpr int kActionTableSize = kNumActions;

std::vector<int> action_codes(const ActionSequence& seq);
ActionSequence actions_from_codes(const std::vector<int>& codes);

// Compact run notation used in tables and traces: "WALK(5) RTURN WALK(5)",
// with parenthesised groups "(WALK LTURN(4))(3)". Counts are literal integers.
ActionSequence parse_compact_actions(std::string_view text);
std::string format_compact(const ActionSequence& seq);  // "WALK(5) RTURN WALK(5)"
std::string format_compact(const std::vector<int>& codes);  // "5(5) 4 5(5)"

}  // namespace gridicl
