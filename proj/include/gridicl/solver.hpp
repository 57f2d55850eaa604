#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridicl/grammar.hpp"
#include "gridicl/planner.hpp"
#include "gridicl/world.hpp"

namespace gridicl {

// Produces support outputs. nullopt means the solver declined the query
// (e.g. the instruction does not resolve). Transport problems throw.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual std::optional<ActionSequence> solve(const WorldState& state, const Instruction& instr) = 0;
  virtual std::string name() const = 0;
};

class OracleSolver : public Solver {
 public:
  explicit OracleSolver(PlannerConfig config = {}) : config_(std::move(config)) {}
  std::optional<ActionSequence> solve(const WorldState& state, const Instruction& instr) override;
  std::string name() const override { return "oracle"; }

 private:
  PlannerConfig config_;
};

// Child process speaking newline-delimited JSON over its stdin/stdout:
//   request  {"id":N,"state":{...},"instruction":["push","a","red","square"]}
//   response {"id":N,"actions":["WALK",...]} or {"id":N,"error":"..."}
// Responses may arrive in any order. An error response is a decline.
// Malformed lines, unknown ids or actions raise ProtocolError; a silent
// child raises TimeoutError.
class ExternalSolver : public Solver {
 public:
  struct Options {
    std::vector<std::string> argv;
    std::chrono::milliseconds timeout{30000};
  };

  explicit ExternalSolver(Options options);
  ~ExternalSolver() override;
  ExternalSolver(const ExternalSolver&) = delete;
  ExternalSolver& operator=(const ExternalSolver&) = delete;

  std::optional<ActionSequence> solve(const WorldState& state, const Instruction& instr) override;
  // Writes every request before reading, so the child may answer out of order.
  std::vector<std::optional<ActionSequence>> solve_batch(
      const std::vector<std::pair<WorldState, Instruction>>& queries);
  std::string name() const override { return "external"; }

 private:
  void send_line(const std::string& line);
  std::string read_line();

  Options options_;
  int pid_ = -1;
  int fd_ = -1;
  long long next_id_ = 0;
  std::string buffer_;
};

// Serves `solver` over the line protocol until `in` ends. Requests that
// cannot be parsed get an error response (id null if unreadable).
void serve_solver(std::istream& in, std::ostream& out, Solver& solver);

}  // namespace gridicl
