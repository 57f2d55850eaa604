#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridicl/dataset.hpp"
#include "gridicl/instruction_model.hpp"
#include "gridicl/solver.hpp"
#include "gridicl/vector_index.hpp"

namespace gridicl {

enum class Strategy : std::uint8_t { heuristic, random, other_states, demogen, covr, gandr };
std::string_view strategy_name(Strategy s);  // "heuristic", "random", "other_states", ...
Strategy strategy_from_name(std::string_view name);

struct Support {
  WorldState state;
  Instruction instruction;
  ActionSequence actions;
  bool solved = true;  // false: the solver declined; actions are empty
  double score = 0;    // strategy ranking score, 0 when unranked
  std::optional<std::size_t> source;  // corpus index for retrieved supports

  bool operator==(const Support&) const = default;
};

struct SupportSet {
  Strategy strategy = Strategy::heuristic;
  std::vector<Support> supports;
  bool fallback = false;  // GandR used instruction-only retrieval
  std::string note;
};

inline constexpr int kDefaultSupports = 16;

struct QuerySupports {
  Example query;
  SupportSet supports;
};

// One JSON object per line, keys sorted:
// {"fallback":false,"note":"","query":{example record},"strategy":"demogen",
//  "supports":[{"command":..,"score":..,"solved":true,"source":null,
//               "state":{..},"target":"WALK,WALK"}]}
nlohmann::json query_supports_to_json(const QuerySupports& qs);
QuerySupports query_supports_from_json(const nlohmann::json& j);  // ImportError naming the field
void write_query_supports(std::ostream& out, const std::vector<QuerySupports>& records);
std::vector<QuerySupports> read_query_supports(std::istream& in);  // errors carry "line N"

// Verb and adverb swaps of the query, in a fixed order: verb swaps
// (walk to, push, pull), then adverb swaps (zigzag, hesitantly, spinning,
// none). Never contains the query.
std::vector<Instruction> heuristic_instructions(const Instruction& query);

// UnresolvableError when the query does not resolve in its state.
SupportSet heuristic_supports(const Example& query, Solver& solver, int n = kDefaultSupports);

// Distinct resolvable instructions in the query state drawn uniformly
// without replacement, excluding the query instruction.
SupportSet random_supports(const Example& query, Solver& solver, std::uint64_t seed, int n = kDefaultSupports);

// TRAIN examples grouped by instruction.
class InstructionLookup {
 public:
  explicit InstructionLookup(const std::vector<Example>& train);
  const std::vector<std::size_t>& find(const Instruction& instr) const;
  const std::vector<Example>& examples() const { return *train_; }

 private:
  const std::vector<Example>* train_;
  std::vector<std::vector<std::size_t>> by_instruction_;
};

// Heuristic instructions paired with a seeded choice among the TRAIN
// examples carrying that instruction in a different state. Instructions
// missing from TRAIN are skipped.
SupportSet other_states_supports(const Example& query, const InstructionLookup& train, std::uint64_t seed,
                                 int n = kDefaultSupports);

struct DemoGenOptions {
  int samples = 2048;
  int n = kDefaultSupports;
  double mask_rate = 0.2;
  // Keep declined instructions as unsolved supports. When false they are
  // replaced by the next candidate in the ranking.
  bool keep_invalid = true;
};

// Infills the query `samples` times, deduplicates, removes the query, ranks
// by model score (ties by realized text) and solves the top candidates in
// the query state.
SupportSet demogen_supports(const Example& query, const InstructionModel& model, Solver& solver,
                            const DemoGenOptions& options, std::uint64_t seed);

// Query n-grams used for coverage: unigrams of the realized instruction and
// bigrams of the same tokens wrapped in <s> ... </s>.
std::vector<std::string> coverage_ngrams(const Instruction& instr);

struct RetrievalOptions {
  int neighbours = 128;
  int probes = 10;
  IvfIndex::Options index;
};

struct CovrOptions {
  double alpha = 0.125;
  int pca_dim = 320;
  std::size_t pca_samples = 10000;  // 0 fits on every example
  std::uint64_t pca_seed = 0;
  bool balance = false;
  RetrievalOptions retrieval;
};

// Hybrid state/instruction retrieval over a corpus, reranked by query n-gram
// overlap and exact state cosine, then picked greedily for coverage.
class CovrRetriever {
 public:
  CovrRetriever(const std::vector<Example>& corpus, const CovrOptions& options);

  DenseVector encode(const WorldState& state, const Instruction& instr) const;
  // Reranked candidates before selection; excludes copies of the query.
  std::vector<Support> candidates(const Example& query) const;
  SupportSet supports(const Example& query, int n = kDefaultSupports) const;

  const CovrOptions& options() const { return options_; }
  const IvfIndex& index() const { return index_; }

 private:
  const std::vector<Example>* corpus_;
  CovrOptions options_;
  TfIdfEncoder tfidf_;
  PcaProjector pca_;
  IvfIndex index_;
};

struct GandrOptions {
  double output_weight = 0.5;
  int output_max_ngram = 2;
  RetrievalOptions retrieval;
};

// Retrieval over (instruction, output) encodings. The query output is the
// helper's guess; when the helper declines, retrieval falls back to the
// instruction part alone and the set is flagged.
class GandrRetriever {
 public:
  GandrRetriever(const std::vector<Example>& corpus, const GandrOptions& options);

  DenseVector encode(const Instruction& instr, const ActionSequence* output) const;
  SupportSet supports(const Example& query, Solver& helper, int n = kDefaultSupports) const;

  const GandrOptions& options() const { return options_; }

 private:
  const std::vector<Example>* corpus_;
  GandrOptions options_;
  TfIdfEncoder instr_tfidf_;
  TfIdfEncoder output_tfidf_;
  IvfIndex index_;
  IvfIndex instr_index_;
};

// Greedy coverage pick over ranked candidates: first every candidate that
// adds an uncovered query n-gram, in rank order, then the rest by rank.
std::vector<std::size_t> greedy_cover(const std::vector<std::string>& query_ngrams,
                                      const std::vector<Instruction>& ranked, int n);

}  // namespace gridicl
