#include "gridicl/supports.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <istream>
#include <ostream>
#include <set>

#include "gridicl/errors.hpp"
#include "gridicl/rng.hpp"

namespace gridicl {

namespace {

constexpr std::array<std::string_view, 6> kStrategyNames = {"heuristic", "random", "other_states",
                                                            "demogen",   "covr",   "gandr"};

std::optional<Support> solved_support(Solver& solver, const WorldState& state, const Instruction& instr) {
  auto actions = solver.solve(state, instr);
  if (!actions) return std::nullopt;
  return Support{state, instr, std::move(*actions), true, 0, std::nullopt};
}

bool is_query(const Example& candidate, const Example& query) {
  return candidate.instruction == query.instruction && candidate.state == query.state;
}

std::set<std::string> ngram_set(const Instruction& instr) {
  const auto g = coverage_ngrams(instr);
  return {g.begin(), g.end()};
}

Tokens action_tokens(const ActionSequence& seq) {
  Tokens out;
  for (auto a : seq) out.emplace_back(action_name(a));
  return out;
}

std::vector<Tokens> instruction_docs(const std::vector<Example>& corpus) {
  std::vector<Tokens> docs;
  docs.reserve(corpus.size());
  for (const auto& e : corpus) docs.push_back(realize(e.instruction));
  return docs;
}

std::vector<Instruction> instructions_of(const std::vector<Support>& s) {
  std::vector<Instruction> out;
  for (const auto& x : s) out.push_back(x.instruction);
  return out;
}

SupportSet pick(Strategy strategy, const Example& query, const std::vector<Support>& ranked, int n) {
  SupportSet set;
  set.strategy = strategy;
  for (auto i : greedy_cover(coverage_ngrams(query.instruction), instructions_of(ranked), n))
    set.supports.push_back(ranked[i]);
  return set;
}

}  // namespace

std::string_view strategy_name(Strategy s) { return kStrategyNames.at(static_cast<std::size_t>(s)); }

Strategy strategy_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i)
    if (kStrategyNames[i] == name) return static_cast<Strategy>(i);
  throw ConfigError("unknown strategy: " + std::string(name));
}

std::vector<Instruction> heuristic_instructions(const Instruction& q) {
  std::vector<Instruction> out;
  auto with_verb = [&](Verb v) {
    Instruction i = q;
    i.verb = v;
    out.push_back(i);
  };
  auto with_adverb = [&](Adverb a) {
    Instruction i = q;
    i.adverb = a;
    out.push_back(i);
  };
  const bool spinning = q.adverb == Adverb::while_spinning;
  switch (q.verb) {
    case Verb::pull:
      with_verb(Verb::walk_to);
      with_verb(Verb::push);
      break;
    case Verb::walk_to:
      if (!spinning) {
        with_verb(Verb::push);
        with_verb(Verb::pull);
      }
      break;
    case Verb::push:
      if (!spinning) {
        with_verb(Verb::walk_to);
        with_verb(Verb::pull);
      }
      break;
  }
  switch (q.adverb) {
    case Adverb::while_zigzagging:
      if (q.verb != Verb::push) {
        with_adverb(Adverb::hesitantly);
        with_adverb(Adverb::while_spinning);
        with_adverb(Adverb::none);
      }
      break;
    case Adverb::hesitantly:
      if (q.verb != Verb::push) {
        with_adverb(Adverb::while_zigzagging);
        with_adverb(Adverb::while_spinning);
        with_adverb(Adverb::none);
      }
      break;
    case Adverb::while_spinning:
      with_adverb(Adverb::while_zigzagging);
      with_adverb(Adverb::hesitantly);
      with_adverb(Adverb::none);
      break;
    case Adverb::none:
    case Adverb::cautiously:
      break;
  }
  return out;
}

SupportSet heuristic_supports(const Example& query, Solver& solver, int n) {
  if (!resolvable(query.instruction, query.state)) throw UnresolvableError("heuristic query does not resolve");
  SupportSet set;
  set.strategy = Strategy::heuristic;
  for (const auto& instr : heuristic_instructions(query.instruction)) {
    if (static_cast<int>(set.supports.size()) >= n) break;
    if (auto s = solved_support(solver, query.state, instr)) set.supports.push_back(std::move(*s));
  }
  return set;
}

SupportSet random_supports(const Example& query, Solver& solver, std::uint64_t seed, int n) {
  std::vector<Instruction> pool;
  for (const auto& instr : all_instructions())
    if (instr != query.instruction && resolvable(instr, query.state)) pool.push_back(instr);
  Rng rng(seed);
  SupportSet set;
  set.strategy = Strategy::random;
  for (std::size_t i = 0; i < pool.size() && static_cast<int>(set.supports.size()) < n; ++i) {
    std::swap(pool[i], pool[i + static_cast<std::size_t>(rng.below(pool.size() - i))]);
    if (auto s = solved_support(solver, query.state, pool[i])) set.supports.push_back(std::move(*s));
  }
  return set;
}

InstructionLookup::InstructionLookup(const std::vector<Example>& train)
    : train_(&train), by_instruction_(kNumInstructions) {
  for (std::size_t i = 0; i < train.size(); ++i)
    by_instruction_[static_cast<std::size_t>(train[i].instruction.index())].push_back(i);
}

const std::vector<std::size_t>& InstructionLookup::find(const Instruction& instr) const {
  return by_instruction_[static_cast<std::size_t>(instr.index())];
}

SupportSet other_states_supports(const Example& query, const InstructionLookup& train, std::uint64_t seed, int n) {
  SupportSet set;
  set.strategy = Strategy::other_states;
  for (const auto& instr : heuristic_instructions(query.instruction)) {
    if (static_cast<int>(set.supports.size()) >= n) break;
    std::vector<std::size_t> matches;
    for (auto i : train.find(instr))
      if (train.examples()[i].state != query.state) matches.push_back(i);
    if (matches.empty()) continue;
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(instr.index())));
    const auto chosen = matches[static_cast<std::size_t>(rng.below(matches.size()))];
    const auto& e = train.examples()[chosen];
    set.supports.push_back(Support{e.state, e.instruction, e.actions, true, 0, chosen});
  }
  return set;
}

SupportSet demogen_supports(const Example& query, const InstructionModel& model, Solver& solver,
                            const DemoGenOptions& options, std::uint64_t seed) {
  if (options.samples < 0 || options.n < 0) throw ConfigError("DemoGen sample and support counts must be >= 0");
  std::set<Instruction> unique;
  for (int i = 0; i < options.samples; ++i)
    unique.insert(model.sample_infill(query.instruction, options.mask_rate, Rng::derive(seed, static_cast<std::uint64_t>(i))));
  unique.erase(query.instruction);

  struct Ranked {
    double score;
    std::string text;
    Instruction instr;
  };
  std::vector<Ranked> ranked;
  for (const auto& instr : unique) ranked.push_back({model.score(instr), realize_text(instr), instr});
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });

  SupportSet set;
  set.strategy = Strategy::demogen;
  for (const auto& r : ranked) {
    if (static_cast<int>(set.supports.size()) >= options.n) break;
    auto actions = solver.solve(query.state, r.instr);
    if (actions) {
      set.supports.push_back(Support{query.state, r.instr, std::move(*actions), true, r.score, std::nullopt});
    } else if (options.keep_invalid) {
      set.supports.push_back(Support{query.state, r.instr, {}, false, r.score, std::nullopt});
    }
  }
  return set;
}

std::vector<std::string> coverage_ngrams(const Instruction& instr) {
  const Tokens words = realize(instr);
  std::vector<std::string> out = words;
  Tokens marked = {"<s>"};
  marked.insert(marked.end(), words.begin(), words.end());
  marked.push_back("</s>");
  for (std::size_t i = 0; i + 1 < marked.size(); ++i) out.push_back(marked[i] + ' ' + marked[i + 1]);
  return out;
}

std::vector<std::size_t> greedy_cover(const std::vector<std::string>& query_ngrams,
                                      const std::vector<Instruction>& ranked, int n) {
  std::set<std::string> uncovered(query_ngrams.begin(), query_ngrams.end());
  std::vector<std::size_t> out;
  std::vector<bool> taken(ranked.size(), false);
  for (std::size_t i = 0; i < ranked.size() && static_cast<int>(out.size()) < n; ++i) {
    bool adds = false;
    for (const auto& g : coverage_ngrams(ranked[i])) adds = uncovered.erase(g) > 0 || adds;
    if (adds) {
      out.push_back(i);
      taken[i] = true;
    }
  }
  for (std::size_t i = 0; i < ranked.size() && static_cast<int>(out.size()) < n; ++i)
    if (!taken[i]) out.push_back(i);
  return out;
}

CovrRetriever::CovrRetriever(const std::vector<Example>& corpus, const CovrOptions& options)
    : corpus_(&corpus), options_(options) {
  if (corpus.empty()) throw RetrievalError("CovR needs a nonempty corpus");
  if (!(options.alpha >= 0)) throw ConfigError("CovR alpha must be >= 0");
  tfidf_ = TfIdfEncoder::fit(instruction_docs(corpus), 1);

  std::vector<std::size_t> sample(corpus.size());
  std::iota(sample.begin(), sample.end(), 0);
  if (options.pca_samples > 0 && options.pca_samples < corpus.size()) {
    Rng rng(options.pca_seed);
    for (std::size_t i = 0; i < options.pca_samples; ++i)
      std::swap(sample[i], sample[i + static_cast<std::size_t>(rng.below(sample.size() - i))]);
    sample.resize(options.pca_samples);
    std::sort(sample.begin(), sample.end());
  }
  std::vector<DenseVector> rows;
  rows.reserve(sample.size());
  for (auto i : sample) rows.push_back(encode_one_hot(corpus[i].state));
  pca_ = PcaProjector::fit(rows, options.pca_dim);
  rows.clear();

  std::vector<DenseVector> vectors;
  vectors.reserve(corpus.size());
  for (const auto& e : corpus) vectors.push_back(encode(e.state, e.instruction));
  index_ = IvfIndex::build(vectors, options.retrieval.index);
}

DenseVector CovrRetriever::encode(const WorldState& state, const Instruction& instr) const {
  return hybrid_encode(normalized(pca_.project(encode_one_hot(state))), tfidf_.encode(realize(instr)), options_.alpha,
                       options_.balance);
}

std::vector<Support> CovrRetriever::candidates(const Example& query) const {
  const auto hits = index_.query(encode(query.state, query.instruction), options_.retrieval.neighbours,
                                 options_.retrieval.probes);
  const auto q_grams = coverage_ngrams(query.instruction);
  const auto q_hot = encode_one_hot(query.state);

  struct Ranked {
    int bigrams = 0;
    int unigrams = 0;
    float cos = 0;
    Support support;
  };
  std::vector<Ranked> ranked;
  for (const auto& h : hits) {
    const auto& e = (*corpus_)[h.id];
    if (is_query(e, query)) continue;
    const auto grams = ngram_set(e.instruction);
    Ranked r;
    for (const auto& g : std::set<std::string>(q_grams.begin(), q_grams.end())) {
      if (!grams.count(g)) continue;
      if (g.find(' ') == std::string::npos) ++r.unigrams;
      else ++r.bigrams;
    }
    r.cos = cosine(q_hot, encode_one_hot(e.state));
    r.support = Support{e.state, e.instruction, e.actions, true, h.score, h.id};
    ranked.push_back(std::move(r));
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.bigrams != b.bigrams) return a.bigrams > b.bigrams;
    if (a.unigrams != b.unigrams) return a.unigrams > b.unigrams;
    return a.cos > b.cos;
  });
  std::vector<Support> out;
  for (auto& r : ranked) out.push_back(std::move(r.support));
  return out;
}

SupportSet CovrRetriever::supports(const Example& query, int n) const {
  return pick(Strategy::covr, query, candidates(query), n);
}

GandrRetriever::GandrRetriever(const std::vector<Example>& corpus, const GandrOptions& options)
    : corpus_(&corpus), options_(options) {
  if (corpus.empty()) throw RetrievalError("GandR needs a nonempty corpus");
  if (!(options.output_weight >= 0)) throw ConfigError("GandR output weight must be >= 0");
  instr_tfidf_ = TfIdfEncoder::fit(instruction_docs(corpus), 1);
  std::vector<Tokens> outputs;
  outputs.reserve(corpus.size());
  for (const auto& e : corpus) outputs.push_back(action_tokens(e.actions));
  output_tfidf_ = TfIdfEncoder::fit(outputs, options.output_max_ngram);

  std::vector<DenseVector> joint, instr_only;
  for (const auto& e : corpus) {
    joint.push_back(encode(e.instruction, &e.actions));
    instr_only.push_back(encode(e.instruction, nullptr));
  }
  index_ = IvfIndex::build(joint, options.retrieval.index);
  instr_index_ = IvfIndex::build(instr_only, options.retrieval.index);
}

DenseVector GandrRetriever::encode(const Instruction& instr, const ActionSequence* output) const {
  DenseVector v = instr_tfidf_.encode(realize(instr));
  if (output) {
    for (float x : output_tfidf_.encode(action_tokens(*output)))
      v.push_back(static_cast<float>(x * options_.output_weight));
  }
  return normalized(std::move(v));
}

SupportSet GandrRetriever::supports(const Example& query, Solver& helper, int n) const {
  const auto guess = helper.solve(query.state, query.instruction);
  const IvfIndex& index = guess ? index_ : instr_index_;
  const auto hits = index.query(encode(query.instruction, guess ? &*guess : nullptr), options_.retrieval.neighbours,
                                options_.retrieval.probes);
  std::vector<Support> ranked;
  for (const auto& h : hits) {
    const auto& e = (*corpus_)[h.id];
    if (is_query(e, query)) continue;
    ranked.push_back(Support{e.state, e.instruction, e.actions, true, h.score, h.id});
  }
  SupportSet set = pick(Strategy::gandr, query, ranked, n);
  if (!guess) {
    set.fallback = true;
    set.note = "helper declined; instruction-only retrieval";
  }
  return set;
}

}  // namespace gridicl

namespace gridicl {

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw ImportError(std::string("missing field '") + name + "'");
  return j[name];
}

}  // namespace

nlohmann::json query_supports_to_json(const QuerySupports& qs) {
  nlohmann::json sups = nlohmann::json::array();
  for (const auto& s : qs.supports.supports) {
    auto j = state_to_json(s.state);
    j["command"] = realize_text(s.instruction, ',');
    j["target"] = join_actions(s.actions);
    j["solved"] = s.solved;
    j["score"] = s.score;
    j["source"] = s.source ? nlohmann::json(*s.source) : nlohmann::json(nullptr);
    sups.push_back(std::move(j));
  }
  return {{"query", example_to_json(qs.query)},
          {"strategy", strategy_name(qs.supports.strategy)},
          {"fallback", qs.supports.fallback},
          {"note", qs.supports.note},
          {"supports", sups}};
}

QuerySupports query_supports_from_json(const nlohmann::json& j) {
  QuerySupports qs;
  qs.query = example_from_json(field(j, "query"));
  try {
    qs.supports.strategy = strategy_from_name(field(j, "strategy").get<std::string>());
    qs.supports.fallback = j.value("fallback", false);
    qs.supports.note = j.value("note", std::string());
    const auto& sups = field(j, "supports");
    if (!sups.is_array()) throw ImportError("field 'supports' must be an array");
    for (const auto& s : sups) {
      Support out;
      out.state = state_from_json(s);
      out.instruction = parse(std::string_view(field(s, "command").get<std::string>()));
      out.actions = split_actions(field(s, "target").get<std::string>());
      out.solved = s.value("solved", true);
      out.score = s.value("score", 0.0);
      if (s.contains("source") && !s["source"].is_null()) out.source = s["source"].get<std::size_t>();
      qs.supports.supports.push_back(std::move(out));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ImportError(e.what());
  } catch (const ConfigError& e) {
    throw ImportError(e.what());
  } catch (const ImportError&) {
    throw;
  } catch (const Error& e) {
    throw ImportError(e.what());
  }
  return qs;
}

void write_query_supports(std::ostream& out, const std::vector<QuerySupports>& records) {
  for (const auto& r : records) out << query_supports_to_json(r).dump() << '\n';
  if (!out) throw ExportError("write failed");
}

std::vector<QuerySupports> read_query_supports(std::istream& in) {
  std::vector<QuerySupports> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(query_supports_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ImportError("line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw ImportError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace gridicl
