// Test double for the external solver protocol.
//   fake_solver fixed        answers every request with WALK WALK
//   fake_solver malformed    answers with a line that is not JSON
//   fake_solver silent       reads requests and never answers
//   fake_solver unknown      answers with an action name that does not exist
//   fake_solver decline      answers every request with an error
//   fake_solver swap         answers each pair of requests in reverse order
//   fake_solver oracle       serves the in-process oracle
#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "gridicl/solver.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "fixed";
  if (mode == "oracle") {
    gridicl::OracleSolver oracle;
    gridicl::serve_solver(std::cin, std::cout, oracle);
    return 0;
  }
  std::string line, held;
  while (std::getline(std::cin, line)) {
    const auto id = json::parse(line)["id"];
    if (mode == "silent") {
      std::this_thread::sleep_for(std::chrono::seconds(60));
      return 0;
    }
    if (mode == "malformed") {
      std::cout << "{not json\n" << std::flush;
    } else if (mode == "unknown") {
      std::cout << json{{"id", id}, {"actions", {"WALK", "JUMP"}}}.dump() << '\n' << std::flush;
    } else if (mode == "decline") {
      std::cout << json{{"id", id}, {"error", "no"}}.dump() << '\n' << std::flush;
    } else if (mode == "swap") {
      const std::string reply = json{{"id", id}, {"actions", {"STAY"}}}.dump();
      if (held.empty()) {
        held = reply;
      } else {
        std::cout << reply << '\n' << held << '\n' << std::flush;
        held.clear();
      }
    } else {
      std::cout << json{{"id", id}, {"actions", {"WALK", "WALK"}}}.dump() << '\n' << std::flush;
    }
  }
  if (!held.empty()) std::cout << held << '\n' << std::flush;
  return 0;
}
