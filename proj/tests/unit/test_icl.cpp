#include <doctest.h>

#include <map>
#include <sstream>

#include "gridicl/errors.hpp"
#include "gridicl/icl.hpp"

using namespace gridicl;

namespace {

std::vector<QuerySupports> augmented() {
  DatasetConfig c;
  c.seed = 5;
  c.counts.fill(0);
  c.counts[static_cast<int>(SplitId::h)] = 20;
  const auto d = generate_dataset(c);
  OracleSolver oracle;
  std::vector<QuerySupports> out;
  for (const auto& e : d.examples) out.push_back({e, heuristic_supports(e, oracle)});
  return out;
}

}  // namespace

TEST_CASE("support sets survive a JSON lines round trip") {
  auto recs = augmented();
  recs[0].supports.supports[0].solved = false;
  recs[0].supports.supports[0].actions.clear();
  recs[1].supports.supports[0].source = 42;
  recs[1].supports.supports[0].score = -0.75;
  recs[2].supports.fallback = true;
  recs[2].supports.note = "x";
  std::stringstream ss;
  write_query_supports(ss, recs);
  const auto back = read_query_supports(ss);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].query == recs[i].query);
    CHECK(back[i].supports.supports == recs[i].supports.supports);
    CHECK(back[i].supports.fallback == recs[i].supports.fallback);
    CHECK(back[i].supports.note == recs[i].supports.note);
  }
  std::stringstream plain("{\"grid_size\":6}\n");
  CHECK_THROWS_WITH_AS(read_query_supports(plain), doctest::Contains("line 1"), ImportError);
}

TEST_CASE("identity export keeps the stored targets") {
  const auto recs = augmented();
  IclOptions opt;
  opt.policy = PermutationPolicy::identity;
  const auto j = export_icl_record(recs[0], 0, opt);
  CHECK(j["action_permutation"] == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(j["word_permutation"].is_null());
  CHECK(j["target_codes"].get<std::vector<int>>() == action_codes(recs[0].query.actions));
  for (std::size_t i = 0; i < recs[0].supports.supports.size(); ++i)
    CHECK(j["supports"][i]["target_codes"].get<std::vector<int>>() ==
          action_codes(recs[0].supports.supports[i].actions));
  CHECK(j["query"]["command_codes"].get<std::vector<int>>() == encode_tokens(realize(recs[0].query.instruction)));
}

TEST_CASE("permuted export decodes back and is deterministic") {
  const auto recs = augmented();
  IclOptions opt;
  opt.seed = 99;
  std::stringstream a, b;
  export_icl(a, recs, opt);
  export_icl(b, recs, opt);
  CHECK(a.str() == b.str());
  std::string line;
  std::size_t i = 0;
  std::set<std::vector<int>> perms;
  while (std::getline(a, line)) {
    const auto j = nlohmann::json::parse(line);
    perms.insert(j["action_permutation"].get<std::vector<int>>());
    const auto d = decode_icl_record(j);
    CHECK(d.query_target == recs[i].query.actions);
    for (std::size_t k = 0; k < d.support_targets.size(); ++k)
      CHECK(d.support_targets[k] == recs[i].supports.supports[k].actions);
    ++i;
  }
  CHECK(i == recs.size());
  CHECK(perms.size() > 1);
}

TEST_CASE("one permutation maps supports and query consistently") {
  const auto recs = augmented();
  IclOptions opt;
  opt.seed = 3;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    const auto j = export_icl_record(recs[r], r, opt);
    // Rebuild the symbol map from every (stored, emitted) pair in the record
    // and require it to be a single function.
    std::map<int, int> seen;
    auto absorb = [&](const ActionSequence& stored, const std::vector<int>& emitted) {
      REQUIRE(stored.size() == emitted.size());
      for (std::size_t k = 0; k < stored.size(); ++k) {
        const auto [it, fresh] = seen.emplace(static_cast<int>(stored[k]), emitted[k]);
        CHECK(it->second == emitted[k]);
      }
    };
    absorb(recs[r].query.actions, j["target_codes"].get<std::vector<int>>());
    for (std::size_t k = 0; k < recs[r].supports.supports.size(); ++k)
      absorb(recs[r].supports.supports[k].actions, j["supports"][k]["target_codes"].get<std::vector<int>>());
    // Symbol histograms agree after decoding.
    std::map<int, int> hist_stored, hist_emitted;
    for (auto a : recs[r].query.actions) ++hist_stored[j["action_permutation"][static_cast<int>(a)].get<int>()];
    for (int c : j["target_codes"].get<std::vector<int>>()) ++hist_emitted[c];
    CHECK(hist_stored == hist_emitted);
  }
}

TEST_CASE("word permutation is optional and recorded") {
  const auto recs = augmented();
  IclOptions opt;
  opt.seed = 8;
  opt.permute_words = true;
  const auto j = export_icl_record(recs[0], 0, opt);
  REQUIRE(j["word_permutation"].is_array());
  const Permutation words(j["word_permutation"].get<std::vector<int>>());
  CHECK(j["query"]["command_codes"].get<std::vector<int>>() == words.apply(encode_tokens(realize(recs[0].query.instruction))));
}
