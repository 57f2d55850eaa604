#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gridicl/grammar.hpp"

namespace gridicl {

// Smoothed categorical model over the five instruction slots (verb, size,
// color, shape, adverb), factored left to right:
//   p(i) = prod_j p(slot_j | slot_1..slot_{j-1}).
// Each conditional is add-k smoothed over the values the corpus uses for
// that slot; values never seen in a slot get probability zero.
class InstructionModel {
 public:
  static constexpr int kSlots = 5;
  static constexpr double kDefaultSmoothing = 0.1;

  // Every distinct instruction counts once. FitError on an empty corpus.
  static InstructionModel fit(const std::vector<Instruction>& corpus, double k = kDefaultSmoothing);

  // p(slot value | earlier slots). Sums to one over the slot's values.
  double conditional(int slot, const std::array<int, kSlots>& prefix, int value) const;
  double log_prob(const Instruction& instr) const;  // -inf when impossible

  // Length-normalized log-likelihood: log_prob / realized token count.
  double score(const Instruction& instr) const;

  // Masks each slot independently with probability mask_rate, then draws the
  // masked slots from the model conditioned on the unmasked ones. Returns the
  // query unchanged when no completion has positive probability.
  Instruction sample_infill(const Instruction& query, double mask_rate, std::uint64_t seed) const;

  double smoothing() const { return k_; }
  const std::vector<Instruction>& corpus() const { return unique_; }

  std::string to_json() const;
  static InstructionModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static InstructionModel load(const std::string& path);

  static int slot_cardinality(int slot);
  static std::array<int, kSlots> slots_of(const Instruction& instr);
  static Instruction from_slots(const std::array<int, kSlots>& slots);

 private:
  InstructionModel() = default;
  void build();
  Instruction draw(const Instruction& query, unsigned mask, double u) const;

  double k_ = kDefaultSmoothing;
  std::vector<Instruction> unique_;
  std::array<std::vector<bool>, kSlots> vocab_;
  std::array<int, kSlots> vocab_size_{};
  // Counts keyed by (slot, encoded prefix), each a vector over slot values.
  std::map<std::pair<int, int>, std::vector<int>> counts_;
  std::array<double, kNumInstructions> joint_{};

  // Cumulative posterior mass per (mask, unmasked slots), shared by copies.
  struct Cache {
    std::mutex mu;
    std::map<std::pair<unsigned, int>, std::vector<std::pair<double, int>>> cdfs;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

}  // namespace gridicl
