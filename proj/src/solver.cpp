#include "gridicl/solver.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "gridicl/dataset.hpp"
#include "gridicl/errors.hpp"

namespace gridicl {

using nlohmann::json;

std::optional<ActionSequence> OracleSolver::solve(const WorldState& state, const Instruction& instr) {
  if (!resolvable(instr, state)) return std::nullopt;
  return gridicl::solve(state, instr, config_);
}

ExternalSolver::ExternalSolver(Options options) : options_(std::move(options)) {
  if (options_.argv.empty()) throw ConfigError("external solver needs a command");
  if (options_.timeout.count() <= 0) throw ConfigError("external solver timeout must be positive");
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
    throw TransportError(std::string("socketpair: ") + std::strerror(errno));
  std::vector<char*> args;
  for (auto& a : options_.argv) args.push_back(a.data());
  args.push_back(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw TransportError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(sv[1]);
  pid_ = pid;
  fd_ = sv[0];
}

ExternalSolver::~ExternalSolver() {
  if (fd_ >= 0) ::close(fd_);
  if (pid_ > 0) {
    // Give the child a moment to see EOF before forcing it down.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      ::usleep(2000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }
}

void ExternalSolver::send_line(const std::string& line) {
  std::string data = line + '\n';
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE || errno == ECONNRESET) throw ProtocolError("solver process exited");
      throw TransportError(std::string("write to solver: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ExternalSolver::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw TimeoutError("solver did not answer within " + std::to_string(options_.timeout.count()) + " ms");
    pollfd p{fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("poll: ") + std::strerror(errno));
    }
    if (r == 0) continue;
    char chunk[4096];
    const auto n = ::read(fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ECONNRESET) throw ProtocolError("solver process exited");
      throw TransportError(std::string("read from solver: ") + std::strerror(errno));
    }
    if (n == 0) throw ProtocolError("solver closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::optional<ActionSequence> ExternalSolver::solve(const WorldState& state, const Instruction& instr) {
  return solve_batch({{state, instr}}).front();
}

std::vector<std::optional<ActionSequence>> ExternalSolver::solve_batch(
    const std::vector<std::pair<WorldState, Instruction>>& queries) {
  std::map<long long, std::size_t> pending;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const long long id = next_id_++;
    json req = {{"id", id}, {"state", state_to_json(queries[i].first)}, {"instruction", realize(queries[i].second)}};
    send_line(req.dump());
    pending[id] = i;
  }
  std::vector<std::optional<ActionSequence>> out(queries.size());
  while (!pending.empty()) {
    const std::string line = read_line();
    json resp;
    try {
      resp = json::parse(line);
    } catch (const json::exception&) {
      throw ProtocolError("malformed solver response: " + line.substr(0, 200));
    }
    if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_number_integer())
      throw ProtocolError("solver response without an integer id: " + line.substr(0, 200));
    const auto it = pending.find(resp["id"].get<long long>());
    if (it == pending.end()) throw ProtocolError("solver answered unknown id " + resp["id"].dump());
    const std::size_t slot = it->second;
    pending.erase(it);
    if (resp.contains("error")) continue;
    if (!resp.contains("actions") || !resp["actions"].is_array())
      throw ProtocolError("solver response needs \"actions\" or \"error\"");
    ActionSequence seq;
    for (const auto& a : resp["actions"]) {
      if (!a.is_string()) throw ProtocolError("action names must be strings");
      try {
        seq.push_back(action_from_name(a.get<std::string>()));
      } catch (const MappingError&) {
        throw ProtocolError("solver returned unknown action " + a.dump());
      }
    }
    out[slot] = std::move(seq);
  }
  return out;
}

void serve_solver(std::istream& in, std::ostream& out, Solver& solver) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json id = nullptr;
    json resp;
    try {
      const json req = json::parse(line);
      if (!req.is_object() || !req.contains("id") || !req["id"].is_number_integer())
        throw ProtocolError("request needs an integer id");
      id = req["id"];
      if (!req.contains("state") || !req.contains("instruction")) throw ProtocolError("request needs state and instruction");
      const WorldState state = state_from_json(req["state"]);
      const Instruction instr = parse(req["instruction"].get<Tokens>());
      const auto actions = solver.solve(state, instr);
      if (actions) {
        std::vector<std::string> names;
        for (auto a : *actions) names.emplace_back(action_name(a));
        resp = {{"id", id}, {"actions", names}};
      } else {
        resp = {{"id", id}, {"error", "unsolvable"}};
      }
    } catch (const json::exception& e) {
      resp = {{"id", id}, {"error", std::string("bad request: ") + e.what()}};
    } catch (const Error& e) {
      resp = {{"id", id}, {"error", e.what()}};
    }
    out << resp.dump() << '\n' << std::flush;
  }
}

}  // namespace gridicl
