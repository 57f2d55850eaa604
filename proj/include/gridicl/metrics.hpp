#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gridicl/dataset.hpp"
#include "gridicl/supports.hpp"
#include "gridicl/vector_index.hpp"

namespace gridicl {

// Rows 1-5 are fractions over every support of every query. Rows 6-9 are
// per-query indicators averaged over queries:
//   1 same size/color/shape words     2 same agent position
//   3 same target position            4 same target-minus-agent offset
//   5 same target object (shape, color, size)
//   6 some support with the query verb and row 5
//   7 some support with the query adverb and row 5
//   8 rows 6 and 7 both hold
//   9 the witnesses for 6 and 7 can both be chosen to also satisfy row 4
// Supports whose instruction does not resolve fail rows 3-9.
struct CriteriaReport {
  static constexpr int kRows = 9;
  std::array<double, kRows> rows{};
  std::size_t queries = 0;
  std::size_t supports = 0;

  static std::string_view row_name(int row);  // 1-based
  nlohmann::json to_json() const;
  std::string to_text() const;
};

CriteriaReport support_criteria(const std::vector<QuerySupports>& batch);

struct ValidityReport {
  std::size_t supports = 0;
  double valid = 0;
  double correct = 0;
  double correct_and_valid = 0;
  std::optional<double> correct_given_valid;  // empty when nothing is valid

  nlohmann::json to_json() const;
};

// valid: the instruction resolves and the oracle solves it in the support
// state. correct: the support actions equal the oracle's actions.
ValidityReport validity_correctness(const std::vector<Support>& supports, const PlannerConfig& config = {});

struct NnProfileOptions {
  std::size_t sample = 1000;  // split states drawn without replacement
  std::uint64_t seed = 0;
  bool use_ivf = false;
  int probes = 10;
  IvfIndex::Options index;
};

struct NnProfile {
  std::vector<int> ranks;
  std::vector<double> mean_similarity;  // by rank
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

// Mean cosine between split states and their r-th nearest TRAIN state over
// one-hot encodings. Ranks beyond the TRAIN size are dropped with a warning.
NnProfile nn_profile(const std::vector<WorldState>& split, const std::vector<WorldState>& train,
                     const std::vector<int>& ranks, const NnProfileOptions& options = {});

// 1, 2, 4, ..., up to and including max_rank when it is a power of two.
std::vector<int> power_of_two_ranks(int max_rank);

// Mean over pairs of |a - b|^2 / 2 between unit tf-idf embeddings of the
// realized support instructions. MetricError for fewer than two supports.
double diversity(const std::vector<Instruction>& supports, const TfIdfEncoder& encoder);
double relevance(const std::vector<Instruction>& supports, const Instruction& query, const TfIdfEncoder& encoder);

struct ZipfFit {
  double alpha = 0;
  double rmse = 0;
  std::size_t tokens = 0;
  std::size_t types = 0;
};

// Words are ranked by frequency (ties by first appearance) and every token
// contributes its word's rank x to alpha = 1 + n / sum ln(x / 0.5). The rmse
// compares empirical rank probabilities with r^-alpha / zeta(alpha).
// FitError for fewer than two distinct words.
ZipfFit zipf_fit(const std::vector<std::string>& tokens);

// Lowercased runs of letters and digits, in order.
std::vector<std::string> word_tokens(std::string_view text);

double riemann_zeta(double s);  // s > 1

// n draws from the unbounded Zipf law p(k) proportional to k^-alpha, alpha > 1.
std::vector<std::uint64_t> sample_zipf(double alpha, std::size_t n, std::uint64_t seed);

// Action patterns: action names, SYM(k) for exactly k repeats, (n) for one
// or more, parenthesised groups. A sequence matches when some contiguous
// stretch of it matches. With any_permutation, pattern symbols may stand for
// any actions as long as distinct symbols map to distinct actions.
class ActionPattern {
 public:
  static ActionPattern parse(std::string_view text);  // PatternError
  bool matches(const ActionSequence& seq, bool any_permutation) const;
  bool empty() const { return items_.empty(); }
  const std::string& text() const { return text_; }

  struct Item {
    int symbol = -1;  // action code, or -1 for a group
    std::vector<Item> group;
    int count = 1;  // 0 means one or more
  };

 private:
  std::vector<Item> items_;
  std::string text_;
};

double pattern_frequency(const std::vector<ActionSequence>& targets, const ActionPattern& pattern,
                         bool any_permutation);

inline constexpr std::string_view kPullSpinPattern = "LTURN(4) PULL(n)";
inline constexpr std::string_view kSouthWestPattern = "LTURN(2) WALK(n) LTURN WALK(n)";
// Cautious walking as a repeated group built from the configured prefix.
std::string cautious_pattern(const PlannerConfig& config = {});

}  // namespace gridicl
