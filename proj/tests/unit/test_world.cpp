#include <doctest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "gridicl/errors.hpp"
#include "gridicl/world.hpp"

using namespace gridicl;
using gridicl::testing::rep;
using gridicl::testing::s0;

TEST_CASE("new_random_state places objects deterministically") {
  const auto empty = new_random_state(7, 6, 0);
  CHECK(empty.objects.empty());
  CHECK(empty.grid_size == 6);

  CHECK(new_random_state(7, 6, 10) == new_random_state(7, 6, 10));
  CHECK_FALSE(new_random_state(7, 6, 10) == new_random_state(8, 6, 10));

  const auto full = new_random_state(3, 6, 35);
  CHECK(full.objects.size() == 35);
  CHECK_NOTHROW(validate(full));
  CHECK_FALSE(full.object_at(full.agent.pos).has_value());

  CHECK_THROWS_AS(new_random_state(7, 6, 36), CapacityError);
  CHECK_THROWS_AS(new_random_state(7, 6, -1), CapacityError);
}

TEST_CASE("random states are valid") {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto s = new_random_state(seed, 6, static_cast<int>(seed % 12));
    REQUIRE_NOTHROW(validate(s));
    std::set<Position> seen;
    for (const auto& o : s.objects) {
      CHECK(s.in_bounds(o.pos));
      CHECK(o.size >= kMinSize);
      CHECK(o.size <= kMaxSize);
      CHECK(seen.insert(o.pos).second);
    }
  }
}

TEST_CASE("validate rejects broken states") {
  auto s = s0();
  s.objects[0].pos = {0, 0};
  CHECK_THROWS_AS(validate(s), Error);
  s = s0();
  s.objects[0].size = 5;
  CHECK_THROWS_AS(validate(s), Error);
  s = s0();
  s.agent.pos = {6, 0};
  CHECK_THROWS_AS(validate(s), Error);
}

TEST_CASE("simulate movement") {
  const auto s = s0();
  const auto end = simulate(s, {Action::walk, Action::walk});
  CHECK(end.agent.pos == Position{4, 2});
  CHECK(end.agent.dir == Heading::east);
  CHECK(simulate(s, {}) == s);
  CHECK(simulate(s, rep(Action::lturn, 4)) == s);
  CHECK(simulate(s, rep(Action::rturn, 4)) == s);
  CHECK(simulate(s, {Action::stay, Action::stay}) == s);
  CHECK(simulate(s, {Action::lturn}).agent.dir == Heading::north);
  CHECK(simulate(s, {Action::rturn}).agent.dir == Heading::south);
  CHECK(simulate(s, {Action::lturn, Action::walk}).agent.pos == Position{2, 1});

  CHECK_THROWS_AS(simulate(s, rep(Action::walk, 4)), ExecutionError);
  CHECK_THROWS_AS(simulate(s, {Action::push}), ExecutionError);
  CHECK_THROWS_AS(simulate(s, {Action::pull}), ExecutionError);
}

TEST_CASE("simulate push and pull respect weight") {
  auto s = s0();
  s.agent.pos = {4, 2};  // on the light red circle, facing east
  auto end = simulate(s, {Action::push});
  CHECK(end.objects[0].pos == Position{5, 2});
  CHECK(end.agent.pos == Position{5, 2});
  CHECK_THROWS_AS(simulate(s, {Action::push, Action::push}), ExecutionError);

  end = simulate(s, {Action::pull, Action::pull});
  CHECK(end.objects[0].pos == Position{2, 2});
  CHECK(end.agent.pos == Position{2, 2});
  CHECK(end.agent.dir == Heading::east);

  // Heavy green circle moves once per two actions.
  s.agent = {{2, 5}, Heading::north};
  end = simulate(s, {Action::push});
  CHECK(end.objects[2].pos == Position{2, 5});
  end = simulate(s, {Action::push, Action::push});
  CHECK(end.objects[2].pos == Position{2, 4});
  CHECK(end.agent.pos == Position{2, 4});
  // Pulling south runs into the wall.
  CHECK_THROWS_AS(simulate(s, {Action::pull}), ExecutionError);
}

TEST_CASE("simulate blocks on other objects") {
  WorldState s;
  s.agent = {{1, 1}, Heading::east};
  s.objects = {{Shape::square, Color::red, 1, {1, 1}}, {Shape::circle, Color::blue, 1, {2, 1}}};
  CHECK_THROWS_AS(simulate(s, {Action::push}), ExecutionError);
  CHECK(simulate(s, {Action::pull}).objects[0].pos == Position{0, 1});
}

namespace {

// Active one-hot slots: three per cell plus agent flag and heading.
double active_slots(int grid) { return 3.0 * grid * grid + 2.0; }

}  // namespace

TEST_CASE("one-hot encoding geometry") {
  const auto s = s0();
  const auto v = encode_one_hot(s);
  CHECK(v.size() == static_cast<std::size_t>(36 * kCellWidth));
  double norm = 0;
  for (float x : v) norm += static_cast<double>(x) * x;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-6));

  // Moving an object to an empty cell flips three slots off and three on in
  // each of the two cells involved: six of D active slots no longer agree.
  auto moved = s;
  moved.objects[0].pos = {5, 2};
  const double d = active_slots(6);
  CHECK(cosine(v, encode_one_hot(moved)) == doctest::Approx((d - 6) / d).epsilon(1e-6));

  // Heading-only change: one active slot moves.
  WorldState e1, e2;
  e1.agent = {{0, 0}, Heading::east};
  e2.agent = {{0, 0}, Heading::south};
  CHECK(cosine(encode_one_hot(e1), encode_one_hot(e2)) == doctest::Approx((d - 1) / d).epsilon(1e-6));
}

TEST_CASE("one-hot encoding is injective on random states") {
  std::set<std::vector<float>> vectors;
  std::set<std::string> states;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto s = canonical(new_random_state(seed, 6, 1 + static_cast<int>(seed % 5)));
    std::string key = std::to_string(s.agent.pos.x) + "," + std::to_string(s.agent.pos.y) + "," +
                      std::to_string(static_cast<int>(s.agent.dir));
    for (const auto& o : s.objects)
      key += ";" + std::to_string(o.pos.x) + "," + std::to_string(o.pos.y) + "," +
             std::to_string(static_cast<int>(o.shape)) + std::to_string(static_cast<int>(o.color)) +
             std::to_string(o.size);
    states.insert(key);
    vectors.insert(encode_one_hot(s));
  }
  CHECK(vectors.size() == states.size());
}

namespace {

// Independent cell-by-cell comparison used as the oracle.
double brute_hamming(const WorldState& a, const WorldState& b) {
  int same = 0, n = a.grid_size;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const Position p{x, y};
      const auto oa = a.object_at(p), ob = b.object_at(p);
      bool eq = oa.has_value() == ob.has_value();
      if (eq && oa) eq = a.objects[*oa].same_kind(b.objects[*ob]);
      const bool ga = a.agent.pos == p, gb = b.agent.pos == p;
      eq = eq && ga == gb && (!ga || a.agent.dir == b.agent.dir);
      same += eq;
    }
  return static_cast<double>(same) / (n * n);
}

}  // namespace

TEST_CASE("hamming similarity") {
  const auto s = s0();
  CHECK(hamming_similarity(s, s) == 1.0);

  auto fewer = s;
  fewer.objects.pop_back();
  CHECK(hamming_similarity(s, fewer) == doctest::Approx(35.0 / 36.0));

  WorldState a, b;
  a.agent = b.agent = {{0, 0}, Heading::east};
  a.objects = {{Shape::circle, Color::red, 1, {3, 3}}};
  b.objects = {{Shape::square, Color::blue, 2, {4, 4}}};
  CHECK(hamming_similarity(a, b) == doctest::Approx(brute_hamming(a, b)));
  CHECK(hamming_similarity(a, b) == doctest::Approx(34.0 / 36.0));
  b.agent.pos = {5, 5};
  CHECK(hamming_similarity(a, b) == doctest::Approx(brute_hamming(a, b)));

  WorldState big;
  big.grid_size = 7;
  CHECK_THROWS_AS(hamming_similarity(s, big), DimensionError);
}

TEST_CASE("hamming similarity is symmetric and 1 only for equal states") {
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto a = new_random_state(seed, 6, 4);
    auto b = seed % 2 ? new_random_state(seed + 1000, 6, 4) : a;
    if (seed % 4 == 0) b.agent.dir = turn_left(b.agent.dir);
    if (seed % 4 == 2) std::reverse(b.objects.begin(), b.objects.end());
    const double ab = hamming_similarity(a, b);
    CHECK(ab == hamming_similarity(b, a));
    CHECK(ab == doctest::Approx(brute_hamming(a, b)));
    CHECK((ab == 1.0) == (a == b));
  }
}

TEST_CASE("action names") {
  CHECK(static_cast<int>(Action::pull) == 0);
  CHECK(static_cast<int>(Action::walk) == 5);
  CHECK(action_from_name("lturn") == Action::lturn);
  CHECK(join_actions({Action::walk, Action::push}) == "WALK,PUSH");
  CHECK(split_actions("WALK,PUSH") == ActionSequence{Action::walk, Action::push});
  CHECK(split_actions("").empty());
  CHECK_THROWS_AS(action_from_name("JUMP"), MappingError);
}
