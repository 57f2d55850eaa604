#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "gridicl/dataset.hpp"
#include "gridicl/errors.hpp"

using namespace gridicl;
using gridicl::testing::s0;

namespace {

DatasetConfig small_config(std::uint64_t seed, int train, int per_split) {
  DatasetConfig c;
  c.seed = seed;
  c.counts.fill(per_split);
  c.counts[0] = train;
  return c;
}

}  // namespace

TEST_CASE("classify examples") {
  WorldState h;
  h.agent = {{1, 1}, Heading::east};
  h.objects = {{Shape::cylinder, Color::yellow, 1, {4, 0}}, {Shape::cylinder, Color::yellow, 3, {5, 5}}};
  CHECK(classify(h, parse("pull a small yellow cylinder while spinning")) == SplitSet{SplitId::h});
  CHECK(classify(s0(), parse("walk to a red circle")).empty());

  WorldState c;
  c.agent = {{4, 1}, Heading::north};
  c.objects = {{Shape::square, Color::red, 3, {1, 4}}};
  CHECK(classify(c, parse("push a red square cautiously")) ==
        SplitSet{SplitId::c, SplitId::d, SplitId::f, SplitId::g});

  WorldState b;
  b.agent = {{0, 0}, Heading::east};
  b.objects = {{Shape::square, Color::yellow, 2, {3, 0}}};
  CHECK(classify(b, parse("walk to a yellow square")) == SplitSet{SplitId::b});
  // Without the color word the object is still a yellow square but B needs the word.
  CHECK(classify(b, parse("walk to a square")).empty());

  WorldState e;
  e.agent = {{0, 0}, Heading::east};
  e.objects = {{Shape::circle, Color::blue, 2, {3, 0}}, {Shape::circle, Color::blue, 4, {3, 3}}};
  CHECK(classify(e, parse("walk to a small circle")) == SplitSet{SplitId::e});
  CHECK(classify(e, parse("walk to a circle")).empty());
  // Unresolvable instructions still carry their instruction-level labels.
  CHECK(classify(e, parse("pull a red cylinder while spinning")) == SplitSet{SplitId::h});
  // Directly south is not south-west.
  WorldState d;
  d.agent = {{2, 2}, Heading::east};
  d.objects = {{Shape::circle, Color::red, 1, {2, 5}}};
  CHECK(classify(d, parse("walk to a circle")).empty());
  d.objects[0].pos = {1, 5};
  CHECK(classify(d, parse("walk to a circle")) == SplitSet{SplitId::d});
}

TEST_CASE("split names") {
  for (auto s : kAllSplits) CHECK(split_from_name(split_name(s)) == s);
  CHECK_THROWS_AS(split_from_name("Z"), MappingError);
}

TEST_CASE("generated splits are pure and oracle consistent") {
  const auto d = generate_dataset(small_config(7, 1000, 60));
  CHECK(d.count(SplitId::train) == 1000);
  for (auto s : kAllSplits) {
    if (s != SplitId::train) CHECK(d.count(s) == 60);
  }
  for (const auto& e : d.examples) {
    const auto labels = classify(e);
    if (e.split == SplitId::train || e.split == SplitId::a) {
      CHECK(labels.empty());
    } else {
      CHECK(labels == SplitSet{e.split});
    }
    CHECK(oracle_consistent(e));
    const auto r = try_resolve_target(e.instruction, e.state);
    REQUIRE(r.has_value());
    CHECK(r->unique);
    CHECK(e.state.objects.size() >= 3);
    CHECK(e.state.objects.size() <= 10);
    if (e.instruction.verb != Verb::walk_to) {
      const Action act = e.instruction.verb == Verb::push ? Action::push : Action::pull;
      CHECK(std::count(e.actions.begin(), e.actions.end(), act) > 0);
    }
  }
  for (const auto* e : d.split(SplitId::h)) {
    CHECK(e->instruction.verb == Verb::pull);
    CHECK(e->instruction.adverb == Adverb::while_spinning);
  }
}

TEST_CASE("generation is deterministic and worker-count independent") {
  auto c = small_config(11, 200, 20);
  const auto a = generate_dataset(c);
  c.workers = 3;
  const auto b = generate_dataset(c);
  REQUIRE(a.examples.size() == b.examples.size());
  CHECK(a.examples == b.examples);
  std::ostringstream sa, sb;
  write_examples(sa, a.examples);
  write_examples(sb, b.examples);
  CHECK(sha256_hex(sa.str()) == sha256_hex(sb.str()));
  c.seed = 12;
  CHECK_FALSE(generate_dataset(c).examples == a.examples);
}

TEST_CASE("holdout toggles let predicates into TRAIN") {
  auto c = small_config(5, 600, 0);
  c.holdouts.erase(SplitId::g);
  const auto d = generate_dataset(c);
  int cautious = 0;
  for (const auto& e : d.examples) {
    const auto labels = classify(e);
    CHECK((labels.empty() || labels == SplitSet{SplitId::g}));
    cautious += e.instruction.adverb == Adverb::cautiously;
  }
  CHECK(cautious > 0);
}

TEST_CASE("config validation and unsatisfiable requests") {
  auto c = small_config(1, 1, 0);
  c.min_objects = 0;
  CHECK_THROWS_AS(generate_dataset(c), ConfigError);
  c = small_config(1, 1, 0);
  c.max_objects = 40;
  CHECK_THROWS_AS(generate_dataset(c), ConfigError);
  c = small_config(1, 1, 0);
  c.counts[1] = -1;
  CHECK_THROWS_AS(generate_dataset(c), ConfigError);

  // Split E needs two circles; a single object can never qualify.
  c = small_config(1, 0, 0);
  c.min_objects = c.max_objects = 1;
  c.counts[static_cast<int>(SplitId::e)] = 1;
  c.max_attempts = 50;
  CHECK_THROWS_AS(generate_dataset(c), GenerationError);
}

TEST_CASE("record format") {
  Example e{s0(), parse("walk to a red circle"), {Action::walk, Action::walk}, SplitId::train};
  CHECK(example_to_line(e) ==
        R"({"agent":{"d":1,"x":2,"y":2},"command":"walk,to,a,red,circle","grid_size":6,)"
        R"("objects":[{"color":"red","shape":"circle","size":2,"x":4,"y":2},)"
        R"({"color":"blue","shape":"square","size":1,"x":0,"y":0},)"
        R"({"color":"green","shape":"circle","size":4,"x":2,"y":5}],"split":"TRAIN","target":"WALK,WALK"})");
}

TEST_CASE("export and import round trip") {
  const auto d = generate_dataset(small_config(3, 1000, 0));
  std::stringstream buf;
  write_examples(buf, d.examples);
  const auto back = read_examples(buf);
  CHECK(back == d.examples);
}

TEST_CASE("import errors name the field and line") {
  Example e{s0(), parse("walk to a red circle"), {Action::walk, Action::walk}, SplitId::train};
  auto j = example_to_json(e);
  j.erase("target");
  std::stringstream buf;
  buf << example_to_line(e) << "\n" << j.dump() << "\n";
  try {
    read_examples(buf);
    FAIL("expected ImportError");
  } catch (const ImportError& err) {
    const std::string what = err.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("target") != std::string::npos);
  }

  std::stringstream bad("{not json\n");
  CHECK_THROWS_AS(read_examples(bad), ImportError);
  auto j2 = example_to_json(e);
  j2["objects"][0]["x"] = 2;
  j2["objects"][0]["y"] = 2;
  j2["objects"][1]["x"] = 2;
  j2["objects"][1]["y"] = 2;
  std::stringstream dup(j2.dump());
  CHECK_THROWS_AS(read_examples(dup), ImportError);
  auto j3 = example_to_json(e);
  j3["command"] = "walk to a";
  std::stringstream badcmd(j3.dump());
  CHECK_THROWS_AS(read_examples(badcmd), ImportError);
}

TEST_CASE("gSCAN importer maps the published layout") {
  const auto root = nlohmann::json::parse(R"({
    "examples": {
      "train": [{
        "command": "pull,a,small,yellow,cylinder,hesitantly",
        "target_commands": "turn left,walk,stay,pull,stay,pull,stay,pull,stay,pull,stay",
        "situation": {
          "grid_size": 6,
          "agent_position": {"row": "2", "column": "3"},
          "agent_direction": 0,
          "placed_objects": {
            "1": {"object": {"shape": "cylinder", "color": "yellow", "size": "4"}, "position": {"row": "5", "column": "5"}},
            "0": {"object": {"shape": "cylinder", "color": "yellow", "size": "1"}, "position": {"row": "1", "column": "3"}}
          }
        }
      }],
      "adverb_2": [{
        "command": "pull,a,circle,while,spinning",
        "target_commands": "turn right,turn right,turn right,turn right,walk",
        "situation": {
          "grid_size": 6,
          "agent_position": {"row": "0", "column": "0"},
          "agent_direction": 3,
          "placed_objects": {"0": {"object": {"shape": "circle", "color": "red", "size": "2"}, "position": {"row": "0", "column": "1"}}}
        }
      }],
      "dev": []
    }
  })");
  std::vector<std::string> skipped;
  const auto d = import_gscan(root, &skipped);
  CHECK(skipped == std::vector<std::string>{"dev"});
  REQUIRE(d.examples.size() == 2);
  const auto& t = d.examples[0];
  CHECK(t.split == SplitId::train);
  CHECK(t.instruction == parse("pull a small yellow cylinder hesitantly"));
  CHECK(t.state.agent.pos == Position{3, 2});
  CHECK(t.state.agent.dir == Heading::east);
  CHECK(t.state.objects[0].pos == Position{3, 1});
  CHECK(t.state.objects[0].size == 1);
  CHECK(t.state.objects[1].size == 4);
  CHECK(t.actions.size() == 11);
  CHECK(t.actions[0] == Action::lturn);
  CHECK(t.actions[3] == Action::pull);
  // Our oracle agrees on this hand-built record.
  CHECK(oracle_consistent(t));
  CHECK(d.examples[1].split == SplitId::h);
  CHECK(d.examples[1].state.agent.dir == Heading::north);

  auto broken = root;
  broken["examples"]["train"][0]["target_commands"] = "fly";
  CHECK_THROWS_AS(import_gscan(broken), ImportError);
  broken = root;
  broken["examples"]["train"][0]["situation"].erase("grid_size");
  CHECK_THROWS_AS(import_gscan(broken), ImportError);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
