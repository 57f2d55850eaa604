#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridicl/errors.hpp"
#include "gridicl/rng.hpp"
#include "gridicl/supports.hpp"

using namespace gridicl;

namespace {

WorldState two_green_circles() {
  WorldState s;
  s.grid_size = 6;
  s.agent = {{2, 2}, Heading::east};
  s.objects = {{Shape::circle, Color::green, 1, {1, 4}},
               {Shape::circle, Color::green, 3, {4, 1}},
               {Shape::square, Color::red, 2, {5, 5}}};
  return s;
}

Example query_of(const WorldState& s, std::string_view text) {
  Example e;
  e.state = s;
  e.instruction = parse(text);
  e.actions = solve(s, e.instruction);
  return e;
}

std::vector<std::string> texts(const SupportSet& set) {
  std::vector<std::string> out;
  for (const auto& s : set.supports) out.push_back(realize_text(s.instruction));
  return out;
}

const Dataset& corpus() {
  static const Dataset d = [] {
    DatasetConfig c;
    c.seed = 77;
    c.counts.fill(60);
    c.counts[0] = 3000;
    return generate_dataset(c);
  }();
  return d;
}

std::vector<Example> train_examples() {
  std::vector<Example> out;
  for (const auto* e : corpus().split(SplitId::train)) out.push_back(*e);
  return out;
}

// Declines everything.
class NoSolver : public Solver {
 public:
  std::optional<ActionSequence> solve(const WorldState&, const Instruction&) override { return std::nullopt; }
  std::string name() const override { return "none"; }
};

}  // namespace

TEST_CASE("heuristic rules reproduce the published pull-while-spinning set") {
  const auto q = query_of(two_green_circles(), "pull a small green circle while spinning");
  OracleSolver oracle;
  const auto set = heuristic_supports(q, oracle);
  CHECK(texts(set) == std::vector<std::string>{
                          "walk to a small green circle while spinning",
                          "push a small green circle while spinning",
                          "pull a small green circle while zigzagging",
                          "pull a small green circle hesitantly",
                          "pull a small green circle",
                      });
  for (const auto& s : set.supports) {
    CHECK(s.state == q.state);
    CHECK(s.solved);
    CHECK(s.actions == solve(s.state, s.instruction));
  }
}

TEST_CASE("heuristic exclusions") {
  auto texts_of = [](std::string_view q) {
    std::vector<std::string> out;
    for (const auto& i : heuristic_instructions(parse(q))) out.push_back(realize_text(i));
    return out;
  };
  CHECK(texts_of("walk to a circle") == std::vector<std::string>{"push a circle", "pull a circle"});
  CHECK(texts_of("push a circle while spinning") ==
        std::vector<std::string>{"push a circle while zigzagging", "push a circle hesitantly", "push a circle"});
  CHECK(texts_of("walk to a circle while spinning") ==
        std::vector<std::string>{"walk to a circle while zigzagging", "walk to a circle hesitantly", "walk to a circle"});
  CHECK(texts_of("push a circle hesitantly") == std::vector<std::string>{"walk to a circle hesitantly", "pull a circle hesitantly"});
  CHECK(texts_of("pull a circle cautiously") ==
        std::vector<std::string>{"walk to a circle cautiously", "push a circle cautiously"});
  for (const auto& instr : all_instructions())
    for (const auto& h : heuristic_instructions(instr)) {
      CHECK(h != instr);
      CHECK(h.same_description(instr));
    }
}

TEST_CASE("heuristic needs a resolvable query and caps at n") {
  auto q = query_of(two_green_circles(), "pull a small green circle while spinning");
  OracleSolver oracle;
  CHECK(heuristic_supports(q, oracle, 2).supports.size() == 2);
  q.instruction = parse("push a yellow cylinder");
  CHECK_THROWS_AS(heuristic_supports(q, oracle), UnresolvableError);
}

TEST_CASE("random supports are distinct, resolvable, seeded and never the query") {
  OracleSolver oracle;
  const auto q = query_of(two_green_circles(), "pull a small green circle while spinning");
  const auto a = random_supports(q, oracle, 5);
  const auto b = random_supports(q, oracle, 5);
  CHECK(texts(a) == texts(b));
  CHECK(a.supports.size() == 16);
  std::set<Instruction> seen;
  for (const auto& s : a.supports) {
    CHECK(seen.insert(s.instruction).second);
    CHECK(s.instruction != q.instruction);
    CHECK(resolvable(s.instruction, q.state));
    CHECK(s.state == q.state);
  }
  CHECK(texts(random_supports(q, oracle, 6)) != texts(a));
}

TEST_CASE("random supports on a single-object state describe that object") {
  WorldState s;
  s.grid_size = 6;
  s.agent = {{0, 0}, Heading::east};
  s.objects = {{Shape::square, Color::blue, 2, {3, 3}}};
  const auto q = query_of(s, "walk to a square");
  OracleSolver oracle;
  const auto set = random_supports(q, oracle, 1, 100);
  // 3 verbs x 2 color options x 5 adverbs; size words need a contrast.
  CHECK(set.supports.size() == 29);
  for (const auto& sup : set.supports) CHECK(resolve_target(sup.instruction, s).index == 0);
}

TEST_CASE("random supports hit the query target at the rate of an exact count") {
  OracleSolver oracle;
  double observed = 0, expected = 0, uniform = 0;
  int queries = 0;
  for (const auto* e : corpus().split(SplitId::a)) {
    const auto target = resolve_target(e->instruction, e->state).index;
    int same = 0, total = 0;
    for (const auto& instr : all_instructions()) {
      if (instr == e->instruction || !resolvable(instr, e->state)) continue;
      ++total;
      same += resolve_target(instr, e->state).index == target ? 1 : 0;
    }
    expected += static_cast<double>(same) / total;
    uniform += 1.0 / static_cast<double>(e->state.objects.size());
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto set = random_supports(*e, oracle, seed);
      int hit = 0;
      for (const auto& s : set.supports) hit += resolve_target(s.instruction, s.state).index == target ? 1 : 0;
      observed += static_cast<double>(hit) / static_cast<double>(set.supports.size()) / 10;
    }
    ++queries;
  }
  observed /= queries;
  expected /= queries;
  uniform /= queries;
  MESSAGE("same-target fraction " << observed << " exact " << expected << " 1/objects " << uniform);
  CHECK(observed == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("other-states supports come verbatim from TRAIN in other states") {
  const auto train = train_examples();
  const InstructionLookup lookup(train);
  int found = 0;
  for (const auto* e : corpus().split(SplitId::a)) {
    const auto set = other_states_supports(*e, lookup, 3);
    std::set<Instruction> wanted;
    for (const auto& i : heuristic_instructions(e->instruction))
      for (auto idx : lookup.find(i))
        if (train[idx].state != e->state) wanted.insert(i);
    CHECK(set.supports.size() == wanted.size());
    for (const auto& s : set.supports) {
      REQUIRE(s.source);
      const auto& src = train[*s.source];
      CHECK(s.state == src.state);
      CHECK(s.actions == src.actions);
      CHECK(s.instruction == src.instruction);
      CHECK(s.state != e->state);
      ++found;
    }
  }
  CHECK(found > 0);
}

TEST_CASE("other-states omits instructions absent from TRAIN") {
  const auto train = train_examples();
  const InstructionLookup lookup(train);
  // No TRAIN example names a yellow square, so nothing can be found.
  WorldState s;
  s.grid_size = 6;
  s.agent = {{0, 0}, Heading::east};
  s.objects = {{Shape::square, Color::yellow, 2, {3, 3}}};
  const auto q = query_of(s, "pull a yellow square while spinning");
  CHECK(other_states_supports(q, lookup, 1).supports.empty());
}

TEST_CASE("demogen with the oracle emits ranked, correct, query-free supports") {
  const auto train = train_examples();
  std::vector<Instruction> instrs;
  for (const auto& e : train) instrs.push_back(e.instruction);
  const auto model = InstructionModel::fit(instrs);
  OracleSolver oracle;
  for (const auto* e : corpus().split(SplitId::h)) {
    const auto set = demogen_supports(*e, model, oracle, {}, 11);
    CHECK(set.supports.size() <= 16);
    for (std::size_t i = 0; i < set.supports.size(); ++i) {
      const auto& s = set.supports[i];
      CHECK(s.instruction != e->instruction);
      CHECK(s.state == e->state);
      CHECK(s.solved == resolvable(s.instruction, s.state));
      if (s.solved) CHECK(s.actions == solve(s.state, s.instruction));
      if (i > 0) CHECK(set.supports[i - 1].score >= s.score);
    }
  }
}

TEST_CASE("demogen edge cases and replacement mode") {
  const auto train = train_examples();
  std::vector<Instruction> instrs;
  for (const auto& e : train) instrs.push_back(e.instruction);
  const auto model = InstructionModel::fit(instrs);
  OracleSolver oracle;
  const auto q = *corpus().split(SplitId::h).front();

  DemoGenOptions one;
  one.samples = 1;
  one.mask_rate = 0;
  CHECK(demogen_supports(q, model, oracle, one, 1).supports.empty());

  DemoGenOptions keep;
  const auto kept = demogen_supports(q, model, oracle, keep, 4);
  DemoGenOptions replace;
  replace.keep_invalid = false;
  const auto replaced = demogen_supports(q, model, oracle, replace, 4);
  for (const auto& s : replaced.supports) CHECK(s.solved);
  std::size_t kept_valid = 0;
  for (const auto& s : kept.supports) kept_valid += s.solved ? 1 : 0;
  CHECK(replaced.supports.size() >= kept_valid);

  NoSolver none;
  const auto declined = demogen_supports(q, model, none, keep, 4);
  CHECK(declined.supports.size() == kept.supports.size());
  for (const auto& s : declined.supports) {
    CHECK_FALSE(s.solved);
    CHECK(s.actions.empty());
  }
  CHECK(demogen_supports(q, model, none, replace, 4).supports.empty());

  CHECK(texts(demogen_supports(q, model, oracle, keep, 4)) == texts(kept));
}

TEST_CASE("coverage n-grams carry sentence markers on bigrams only") {
  CHECK(coverage_ngrams(parse("push a circle")) ==
        std::vector<std::string>{"push", "a", "circle", "<s> push", "push a", "a circle", "circle </s>"});
}

TEST_CASE("greedy cover takes new coverage first then fills by rank") {
  const auto q = coverage_ngrams(parse("pull a red circle while spinning"));
  const std::vector<Instruction> ranked = {parse("pull a red circle"), parse("pull a red circle hesitantly"),
                                           parse("push a circle while spinning"), parse("walk to a square")};
  CHECK(greedy_cover(q, ranked, 16) == std::vector<std::size_t>{0, 2, 1, 3});
  CHECK(greedy_cover(q, ranked, 1) == std::vector<std::size_t>{0});
}

namespace {

// Independent reimplementation of the CovR ranking over brute-force search.
std::vector<std::size_t> covr_reference(const CovrRetriever& r, const std::vector<Example>& corpus, const Example& q,
                                        int n) {
  std::vector<DenseVector> vecs;
  for (const auto& e : corpus) vecs.push_back(r.encode(e.state, e.instruction));
  const auto hits = brute_force_search(vecs, r.encode(q.state, q.instruction), r.options().retrieval.neighbours);
  const auto qg = coverage_ngrams(q.instruction);
  const std::set<std::string> qset(qg.begin(), qg.end());
  struct Row {
    int bi, uni;
    float cos;
    std::size_t id;
  };
  std::vector<Row> rows;
  for (const auto& h : hits) {
    const auto& e = corpus[h.id];
    if (e.state == q.state && e.instruction == q.instruction) continue;
    const auto g = coverage_ngrams(e.instruction);
    const std::set<std::string> gs(g.begin(), g.end());
    int bi = 0, uni = 0;
    for (const auto& x : qset)
      if (gs.count(x)) (x.find(' ') == std::string::npos ? uni : bi)++;
    rows.push_back({bi, uni, cosine(encode_one_hot(q.state), encode_one_hot(e.state)), h.id});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(b.bi, b.uni, b.cos) < std::tie(a.bi, a.uni, a.cos);
  });
  std::set<std::string> uncovered = qset;
  std::vector<std::size_t> out;
  std::vector<bool> used(rows.size());
  for (std::size_t i = 0; i < rows.size() && out.size() < static_cast<std::size_t>(n); ++i) {
    bool adds = false;
    for (const auto& x : coverage_ngrams(corpus[rows[i].id].instruction))
      if (uncovered.erase(x)) adds = true;
    if (adds) out.push_back(rows[i].id), used[i] = true;
  }
  for (std::size_t i = 0; i < rows.size() && out.size() < static_cast<std::size_t>(n); ++i)
    if (!used[i]) out.push_back(rows[i].id);
  return out;
}

CovrOptions small_covr() {
  CovrOptions o;
  o.pca_dim = 32;
  o.retrieval.index.cells = 8;
  o.retrieval.probes = 8;
  return o;
}

}  // namespace

TEST_CASE("covr selection matches a brute-force reference on a toy corpus") {
  auto train = train_examples();
  train.resize(200);
  const CovrRetriever r(train, small_covr());
  for (const auto* q : corpus().split(SplitId::h)) {
    std::vector<std::size_t> ids;
    for (const auto& s : r.supports(*q).supports) ids.push_back(*s.source);
    CHECK(ids == covr_reference(r, train, *q, 16));
  }
}

TEST_CASE("covr never returns the query and covers at least as much as any candidate") {
  auto train = train_examples();
  train.resize(300);
  const CovrRetriever r(train, small_covr());
  const Example q = train[17];
  const auto cands = r.candidates(q);
  for (const auto& c : cands) CHECK_FALSE((c.state == q.state && c.instruction == q.instruction));
  const auto set = r.supports(q);
  const auto qg = coverage_ngrams(q.instruction);
  auto covered = [&](const std::vector<Instruction>& instrs) {
    std::set<std::string> got;
    for (const auto& i : instrs)
      for (const auto& g : coverage_ngrams(i))
        if (std::find(qg.begin(), qg.end(), g) != qg.end()) got.insert(g);
    return got.size();
  };
  std::vector<Instruction> chosen;
  for (const auto& s : set.supports) chosen.push_back(s.instruction);
  for (const auto& c : cands) CHECK(covered(chosen) >= covered({c.instruction}));
  // The top-ranked same-state neighbour would be the query itself.
  CHECK(cands.front().source != std::optional<std::size_t>(17));
}

TEST_CASE("gandr output weight zero equals instruction-only retrieval") {
  auto train = train_examples();
  train.resize(500);
  GandrOptions zero;
  zero.output_weight = 0;
  zero.retrieval.index.cells = 4;
  zero.retrieval.probes = 4;
  const GandrRetriever r(train, zero);
  OracleSolver oracle;
  NoSolver none;
  for (const auto* q : corpus().split(SplitId::a)) {
    const auto with = r.supports(*q, oracle);
    const auto without = r.supports(*q, none);
    CHECK_FALSE(with.fallback);
    CHECK(without.fallback);
    std::vector<std::size_t> a, b;
    for (const auto& s : with.supports) a.push_back(*s.source);
    for (const auto& s : without.supports) b.push_back(*s.source);
    CHECK(a == b);
  }
}

TEST_CASE("gandr with the oracle retrieves outputs that overlap the true target") {
  const auto train = train_examples();
  GandrOptions o;
  o.retrieval.index.cells = 16;
  o.retrieval.probes = 16;
  const GandrRetriever r(train, o);
  OracleSolver oracle;
  auto bigrams = [](const ActionSequence& s) {
    std::set<std::pair<Action, Action>> out;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) out.insert({s[i], s[i + 1]});
    return out;
  };
  auto overlap = [&](const ActionSequence& a, const ActionSequence& b) {
    const auto x = bigrams(a), y = bigrams(b);
    if (x.empty()) return 0.0;
    int n = 0;
    for (const auto& g : x) n += y.count(g) ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(x.size());
  };
  double gandr = 0, random = 0;
  int count = 0;
  Rng rng(5);
  for (const auto* q : corpus().split(SplitId::a)) {
    for (const auto& s : r.supports(*q, oracle).supports) {
      gandr += overlap(q->actions, s.actions);
      random += overlap(q->actions, train[rng.below(train.size())].actions);
      ++count;
    }
  }
  MESSAGE("output bigram overlap: gandr " << gandr / count << " random " << random / count);
  CHECK(gandr > random);
}

TEST_CASE("external solver parses, declines and rejects protocol violations") {
  const auto q = query_of(two_green_circles(), "pull a small green circle while spinning");
  {
    ExternalSolver s({{GRIDICL_FAKE_SOLVER, "fixed"}});
    CHECK(s.solve(q.state, q.instruction) == ActionSequence{Action::walk, Action::walk});
    CHECK(s.solve(q.state, q.instruction) == ActionSequence{Action::walk, Action::walk});
  }
  {
    ExternalSolver s({{GRIDICL_FAKE_SOLVER, "decline"}});
    CHECK_FALSE(s.solve(q.state, q.instruction).has_value());
  }
  {
    ExternalSolver s({{GRIDICL_FAKE_SOLVER, "malformed"}});
    CHECK_THROWS_AS(s.solve(q.state, q.instruction), ProtocolError);
  }
  {
    ExternalSolver s({{GRIDICL_FAKE_SOLVER, "unknown"}});
    CHECK_THROWS_AS(s.solve(q.state, q.instruction), ProtocolError);
  }
  {
    ExternalSolver s({{GRIDICL_FAKE_SOLVER, "silent"}, std::chrono::milliseconds(200)});
    CHECK_THROWS_AS(s.solve(q.state, q.instruction), TimeoutError);
  }
  {
    ExternalSolver s({{"/nonexistent/solver"}});
    CHECK_THROWS_AS(s.solve(q.state, q.instruction), ProtocolError);
  }
  CHECK_THROWS_AS(ExternalSolver(ExternalSolver::Options{}), ConfigError);
}

TEST_CASE("external solver accepts responses out of order") {
  const auto q = query_of(two_green_circles(), "pull a small green circle while spinning");
  ExternalSolver s({{GRIDICL_FAKE_SOLVER, "swap"}});
  const auto out = s.solve_batch({{q.state, q.instruction}, {q.state, q.instruction}});
  REQUIRE(out.size() == 2);
  CHECK(out[0] == ActionSequence{Action::stay});
  CHECK(out[1] == ActionSequence{Action::stay});
}

TEST_CASE("oracle behind the line protocol matches the in-process oracle") {
  ExternalSolver remote({{GRIDICL_FAKE_SOLVER, "oracle"}});
  OracleSolver local;
  std::vector<std::pair<WorldState, Instruction>> batch;
  Rng rng(12);
  while (batch.size() < 100) {
    const auto s = new_random_state(rng.next(), 6, static_cast<int>(3 + rng.below(6)));
    const auto instr = Instruction::from_index(static_cast<int>(rng.below(kNumInstructions)));
    batch.emplace_back(s, instr);
  }
  const auto got = remote.solve_batch(batch);
  int solved = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(got[i] == local.solve(batch[i].first, batch[i].second));
    solved += got[i] ? 1 : 0;
  }
  CHECK(solved > 0);
}

TEST_CASE("serve_solver answers bad requests with errors") {
  OracleSolver oracle;
  std::istringstream in("garbage\n{\"id\":4}\n{\"id\":5,\"state\":{},\"instruction\":[\"walk\"]}\n");
  std::ostringstream out;
  serve_solver(in, out, oracle);
  std::istringstream lines(out.str());
  std::string line;
  std::vector<nlohmann::json> replies;
  while (std::getline(lines, line)) replies.push_back(nlohmann::json::parse(line));
  REQUIRE(replies.size() == 3);
  CHECK(replies[0]["id"].is_null());
  CHECK(replies[1]["id"] == 4);
  CHECK(replies[2]["id"] == 5);
  for (const auto& r : replies) CHECK(r.contains("error"));
}

TEST_CASE("strategy names round trip") {
  for (auto s : {Strategy::heuristic, Strategy::random, Strategy::other_states, Strategy::demogen, Strategy::covr,
                 Strategy::gandr})
    CHECK(strategy_from_name(strategy_name(s)) == s);
  CHECK_THROWS_AS(strategy_from_name("best"), ConfigError);
}
