#pragma once

#include "gridicl/grammar.hpp"
#include "gridicl/world.hpp"

namespace gridicl {

// Undecorated navigation: turns and walks, horizontal leg first.
struct Plan {
  AgentPose start;
  Position target;
  ActionSequence steps;

  int dx() const { return target.x - start.pos.x; }
  int dy() const { return target.y - start.pos.y; }
};

struct PlannerConfig {
  // Inserted before every WALK for "cautiously". Must be turn-only and
  // rotation-neutral so navigation still ends on the target.
  ActionSequence cautious_prefix = {Action::lturn, Action::rturn, Action::rturn, Action::lturn};
};

void validate(const PlannerConfig& config);

// Minimal turns taking `from` to `to`; a half turn is LTURN LTURN.
ActionSequence turns_between(Heading from, Heading to);

Plan plan_navigation(const WorldState& state, Position target);

// Decorates navigation with the adverb's manner. Zigzag re-plans the path as
// alternating horizontal/vertical steps; the others rewrite plan.steps.
ActionSequence apply_adverb(const Plan& plan, Adverb adverb, const PlannerConfig& config = {});

// Appends the verb's object interaction to already decorated navigation.
// Push/pull move the object until a wall or another object blocks it; heavy
// objects (size >= 3) take two actions per cell.
ActionSequence apply_verb(const WorldState& state, const ActionSequence& navigation, Verb verb, Adverb adverb,
                          const ObjectSpec& target);

// Number of cells the object at `object` can travel along `dir`.
int free_cells(const WorldState& state, Position object, Heading dir);

// resolve -> plan -> decorate -> verb. Throws UnresolvableError.
ActionSequence solve(const WorldState& state, const Instruction& instr, const PlannerConfig& config = {});

// Executes actions and checks the verb's goal: the agent ends on the target
// and, for push/pull, the object has been moved as far as it can go.
bool goal_satisfied(const WorldState& state, const Instruction& instr, const ActionSequence& actions);

}  // namespace gridicl
