#include "gridicl/planner.hpp"

#include <cstdlib>

#include "gridicl/errors.hpp"

namespace gridicl {

namespace {

void walk_leg(ActionSequence& out, Heading& facing, Heading dir, int cells) {
  if (cells <= 0) return;
  const auto turns = turns_between(facing, dir);
  out.insert(out.end(), turns.begin(), turns.end());
  facing = dir;
  out.insert(out.end(), static_cast<std::size_t>(cells), Action::walk);
}

Heading horizontal_dir(int dx) { return dx > 0 ? Heading::east : Heading::west; }
Heading vertical_dir(int dy) { return dy > 0 ? Heading::south : Heading::north; }

// Manner decorations shared by navigation and verb actions.
ActionSequence decorate(const ActionSequence& steps, Adverb adverb, const PlannerConfig& config) {
  ActionSequence out;
  out.reserve(steps.size() * 2);
  switch (adverb) {
    case Adverb::hesitantly:
      for (auto a : steps) {
        out.push_back(a);
        if (!is_turn(a)) out.push_back(Action::stay);
      }
      return out;
    case Adverb::while_spinning: {
      // A full left spin precedes the run of direction turns leading into
      // every non-turn action, giving streams such as LTURN(6) WALK.
      std::size_t run_start = 0;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        if (is_turn(steps[i])) continue;
        out.insert(out.end(), 4, Action::lturn);
        out.insert(out.end(), steps.begin() + static_cast<std::ptrdiff_t>(run_start),
                   steps.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        run_start = i + 1;
      }
      out.insert(out.end(), steps.begin() + static_cast<std::ptrdiff_t>(run_start), steps.end());
      return out;
    }
    case Adverb::cautiously:
      for (auto a : steps) {
        if (a == Action::walk) out.insert(out.end(), config.cautious_prefix.begin(), config.cautious_prefix.end());
        out.push_back(a);
      }
      return out;
    case Adverb::none:
    case Adverb::while_zigzagging:
      return steps;
  }
  return steps;
}

Heading heading_after(Heading h, const ActionSequence& seq) {
  for (auto a : seq) {
    if (a == Action::lturn) h = turn_left(h);
    if (a == Action::rturn) h = turn_right(h);
  }
  return h;
}

}  // namespace

void validate(const PlannerConfig& config) {
  int net = 0;
  for (auto a : config.cautious_prefix) {
    if (!is_turn(a)) throw ConfigError("cautious prefix may only contain LTURN/RTURN");
    net += a == Action::rturn ? 1 : -1;
  }
  if (((net % 4) + 4) % 4 != 0) throw ConfigError("cautious prefix must leave the heading unchanged");
}

ActionSequence turns_between(Heading from, Heading to) {
  const int diff = ((static_cast<int>(to) - static_cast<int>(from)) % 4 + 4) % 4;
  switch (diff) {
    case 1: return {Action::rturn};
    case 2: return {Action::lturn, Action::lturn};
    case 3: return {Action::lturn};
    default: return {};
  }
}

Plan plan_navigation(const WorldState& state, Position target) {
  if (!state.in_bounds(target)) throw PlannerError("navigation target out of bounds");
  Plan plan{state.agent, target, {}};
  Heading facing = state.agent.dir;
  const int dx = plan.dx(), dy = plan.dy();
  walk_leg(plan.steps, facing, horizontal_dir(dx), std::abs(dx));
  walk_leg(plan.steps, facing, vertical_dir(dy), std::abs(dy));
  return plan;
}

ActionSequence apply_adverb(const Plan& plan, Adverb adverb, const PlannerConfig& config) {
  if (adverb != Adverb::while_zigzagging) return decorate(plan.steps, adverb, config);

  ActionSequence out;
  Heading facing = plan.start.dir;
  int h = std::abs(plan.dx()), v = std::abs(plan.dy());
  const Heading hdir = horizontal_dir(plan.dx()), vdir = vertical_dir(plan.dy());
  while (h > 0 && v > 0) {
    walk_leg(out, facing, hdir, 1);
    walk_leg(out, facing, vdir, 1);
    --h;
    --v;
  }
  walk_leg(out, facing, hdir, h);
  walk_leg(out, facing, vdir, v);
  return out;
}

int free_cells(const WorldState& state, Position object, Heading dir) {
  int n = 0;
  Position p = step(object, dir);
  while (state.in_bounds(p) && !state.object_at(p)) {
    ++n;
    p = step(p, dir);
  }
  return n;
}

ActionSequence apply_verb(const WorldState& state, const ActionSequence& navigation, Verb verb, Adverb adverb,
                          const ObjectSpec& target) {
  AgentPose end = state.agent;
  for (auto a : navigation) {
    if (a == Action::walk) end.pos = step(end.pos, end.dir);
    end.dir = heading_after(end.dir, {a});
  }
  if (end.pos != target.pos) throw PlannerError("navigation does not end on the target object");
  if (verb == Verb::walk_to) return navigation;

  const Action act = verb == Verb::push ? Action::push : Action::pull;
  const Heading dir = verb == Verb::push ? end.dir : opposite(end.dir);
  const int cells = free_cells(state, target.pos, dir);
  const ActionSequence moves(static_cast<std::size_t>(cells * (target.heavy() ? 2 : 1)), act);

  ActionSequence out = navigation;
  const auto decorated = decorate(moves, adverb, PlannerConfig{});
  out.insert(out.end(), decorated.begin(), decorated.end());
  return out;
}

ActionSequence solve(const WorldState& state, const Instruction& instr, const PlannerConfig& config) {
  const auto target = resolve_target(instr, state);
  const auto plan = plan_navigation(state, target.object.pos);
  const auto nav = apply_adverb(plan, instr.adverb, config);
  return apply_verb(state, nav, instr.verb, instr.adverb, target.object);
}

bool goal_satisfied(const WorldState& state, const Instruction& instr, const ActionSequence& actions) {
  const auto target = try_resolve_target(instr, state);
  if (!target) return false;
  WorldState end;
  try {
    end = simulate(state, actions);
  } catch (const ExecutionError&) {
    return false;
  }
  const Position moved = end.objects[target->index].pos;
  if (end.agent.pos != moved) return false;
  if (instr.verb == Verb::walk_to) return moved == target->object.pos;

  const Heading dir = instr.verb == Verb::push ? end.agent.dir : opposite(end.agent.dir);
  Position expect = target->object.pos;
  for (int i = free_cells(state, target->object.pos, dir); i > 0; --i) expect = step(expect, dir);
  return moved == expect;
}

}  // namespace gridicl
