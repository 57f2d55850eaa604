#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gridicl/grammar.hpp"
#include "gridicl/permuter.hpp"
#include "gridicl/planner.hpp"
#include "gridicl/world.hpp"

namespace gridicl {

enum class SplitId : std::uint8_t { train = 0, a, b, c, d, e, f, g, h };
inline constexpr int kNumSplits = 9;
inline constexpr std::array<SplitId, kNumSplits> kAllSplits = {
    SplitId::train, SplitId::a, SplitId::b, SplitId::c, SplitId::d,
    SplitId::e,     SplitId::f, SplitId::g, SplitId::h};

std::string_view split_name(SplitId s);  // "TRAIN", "A", ..., "H"
SplitId split_from_name(std::string_view name);
using SplitSet = std::set<SplitId>;

struct Example {
  WorldState state;
  Instruction instruction;
  ActionSequence actions;
  SplitId split = SplitId::train;

  bool operator==(const Example&) const = default;
};

// Holdout predicates B..H that (state, instruction) satisfies. Empty means
// in-distribution.
//   B: instruction names a yellow square with a color word
//   C: resolved target is a red square
//   D: target strictly south and strictly west of the agent
//   E: "small circle" whose resolved target has size 2
//   F: push and target size 3
//   G: adverb cautiously
//   H: pull while spinning
SplitSet classify(const WorldState& state, const Instruction& instr);
inline SplitSet classify(const Example& e) { return classify(e.state, e.instruction); }

struct DatasetConfig {
  int grid_size = kDefaultGridSize;
  int min_objects = 3;
  int max_objects = 10;
  std::array<int, kNumSplits> counts = {50000, 2000, 2000, 2000, 2000, 2000, 2000, 2000, 2000};
  std::uint64_t seed = 0;
  // Predicates excluded from TRAIN. Disabling one lets its examples through.
  SplitSet holdouts = {SplitId::b, SplitId::c, SplitId::d, SplitId::e, SplitId::f, SplitId::g, SplitId::h};
  // Sampling weights indexed by Verb and Adverb codes.
  std::array<double, kNumVerbs> verb_weights = {1, 1, 1};
  std::array<double, kNumAdverbs> adverb_weights = {1, 1, 1, 1, 1};
  // Reject push/pull examples whose object cannot move at all.
  bool require_movement = true;
  int max_attempts = 10000;
  int workers = 1;
  PlannerConfig planner;
};

void validate(const DatasetConfig& config);

struct Dataset {
  std::vector<Example> examples;

  std::vector<const Example*> split(SplitId s) const;
  std::size_t count(SplitId s) const;
};

// Examples appear grouped by split in kAllSplits order, then by index. Each
// example draws from its own stream derived from (seed, split, index).
Dataset generate_dataset(const DatasetConfig& config);

// Raises GenerationError after config.max_attempts rejected proposals.
Example generate_example(const DatasetConfig& config, SplitId split, std::uint64_t index);

// Canonical line format, keys sorted:
// {"agent":{"d":..,"x":..,"y":..},"command":"walk,to,a,red,circle",
//  "grid_size":6,"objects":[{"color":..,"shape":..,"size":..,"x":..,"y":..}],
//  "split":"TRAIN","target":"WALK,WALK"}
nlohmann::json state_to_json(const WorldState& state);
WorldState state_from_json(const nlohmann::json& j);  // ImportError naming the bad field
nlohmann::json example_to_json(const Example& e);
Example example_from_json(const nlohmann::json& j);
std::string example_to_line(const Example& e);

void write_examples(std::ostream& out, const std::vector<Example>& examples);
// ImportError messages carry "line N".
std::vector<Example> read_examples(std::istream& in);
void write_dataset(const std::string& path, const Dataset& d);
Dataset read_dataset(const std::string& path);

// Reads the original environment's published dataset file: a JSON object
// with "examples": {split name: [records]} where each record carries
// "command", "target_commands" and a "situation". Split names map as
// train->TRAIN, test->A, visual_easier->B, visual->C, situational_1->D,
// situational_2->E, contextual->F, adverb_1->G, adverb_2->H; other names
// are listed in `skipped`.
Dataset import_gscan(const nlohmann::json& root, std::vector<std::string>* skipped = nullptr);
Dataset import_gscan_file(const std::string& path, std::vector<std::string>* skipped = nullptr);

// True when actions equal the oracle's output for (state, instruction).
bool oracle_consistent(const Example& e, const PlannerConfig& config = {});

// Lowercase hex SHA-256 of bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace gridicl
