#include "gridicl/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "gridicl/errors.hpp"
#include "gridicl/rng.hpp"

namespace gridicl {

namespace {

constexpr std::array<std::string_view, kNumSplits> kSplitNames = {"TRAIN", "A", "B", "C", "D",
                                                                  "E",     "F", "G", "H"};

bool is_color(const ObjectSpec& o, Color c) { return o.color == c; }

template <std::size_t N>
int weighted_pick(Rng& rng, const std::array<double, N>& weights, const std::array<bool, N>& allowed) {
  double total = 0;
  for (std::size_t i = 0; i < N; ++i)
    if (allowed[i]) total += weights[i];
  if (total <= 0) return -1;
  double r = rng.uniform() * total;
  int last = -1;
  for (std::size_t i = 0; i < N; ++i) {
    if (!allowed[i] || weights[i] <= 0) continue;
    last = static_cast<int>(i);
    if (r < weights[i]) return last;
    r -= weights[i];
  }
  return last;
}

bool accepted(const DatasetConfig& config, SplitId split, const SplitSet& labels) {
  if (split == SplitId::train) {
    return std::none_of(labels.begin(), labels.end(), [&](SplitId s) { return config.holdouts.count(s) > 0; });
  }
  if (split == SplitId::a) return labels.empty();
  return labels == SplitSet{split};
}

// One guided proposal. The split's defining attributes are forced onto the
// sampled state and instruction; classify() still has the final say.
std::optional<Example> propose(const DatasetConfig& config, SplitId split, Rng& rng) {
  const int n_objects = rng.range(config.min_objects, config.max_objects);
  WorldState state = new_random_state(rng.next(), config.grid_size, n_objects);
  const auto target = static_cast<std::size_t>(rng.below(state.objects.size()));
  ObjectSpec& obj = state.objects[target];

  std::array<bool, kNumVerbs> verbs_ok = {true, true, true};
  std::array<bool, kNumAdverbs> adverbs_ok = {true, true, true, true, true};
  const bool cautious_rejected =
      split != SplitId::g && !(split == SplitId::train && !config.holdouts.count(SplitId::g));
  if (cautious_rejected) adverbs_ok[static_cast<int>(Adverb::cautiously)] = false;

  Verb verb;
  Adverb adverb;
  switch (split) {
    case SplitId::f: verb = Verb::push; break;
    case SplitId::h: verb = Verb::pull; break;
    default: {
      const int v = weighted_pick(rng, config.verb_weights, verbs_ok);
      if (v < 0) return std::nullopt;
      verb = static_cast<Verb>(v);
    }
  }
  switch (split) {
    case SplitId::g: adverb = Adverb::cautiously; break;
    case SplitId::h: adverb = Adverb::while_spinning; break;
    default: {
      const int a = weighted_pick(rng, config.adverb_weights, adverbs_ok);
      if (a < 0) return std::nullopt;
      adverb = static_cast<Adverb>(a);
    }
  }

  switch (split) {
    case SplitId::b:
      obj.shape = Shape::square;
      obj.color = Color::yellow;
      break;
    case SplitId::c:
      obj.shape = Shape::square;
      obj.color = Color::red;
      break;
    case SplitId::d: {
      std::vector<Position> cells;
      for (int y = state.agent.pos.y + 1; y < state.grid_size; ++y)
        for (int x = 0; x < state.agent.pos.x; ++x)
          if (!state.object_at({x, y}) || *state.object_at({x, y}) == target) cells.push_back({x, y});
      if (cells.empty()) return std::nullopt;
      obj.pos = cells[static_cast<std::size_t>(rng.below(cells.size()))];
      break;
    }
    case SplitId::e: {
      if (state.objects.size() < 2) return std::nullopt;
      obj.shape = Shape::circle;
      obj.size = 2;
      auto other = static_cast<std::size_t>(rng.below(state.objects.size() - 1));
      if (other >= target) ++other;
      state.objects[other].shape = Shape::circle;
      state.objects[other].color = obj.color;
      state.objects[other].size = rng.range(3, kMaxSize);
      break;
    }
    case SplitId::f: obj.size = 3; break;
    default: break;
  }
  const ObjectSpec chosen = state.objects[target];

  // Every description that singles out the chosen object.
  std::vector<Instruction> options;
  const auto own_color = static_cast<ColorWord>(static_cast<int>(chosen.color) + 1);
  for (auto size : {SizeWord::none, SizeWord::small, SizeWord::big}) {
    for (auto color : {ColorWord::none, own_color}) {
      if (split == SplitId::b && color != ColorWord::yellow) continue;
      if (split == SplitId::e && size != SizeWord::small) continue;
      const Instruction in{verb, size, color, chosen.shape, adverb};
      const auto r = try_resolve_target(in, state);
      if (r && r->unique && r->index == target) options.push_back(in);
    }
  }
  if (options.empty()) return std::nullopt;
  const Instruction instr = options[static_cast<std::size_t>(rng.below(options.size()))];

  if (!accepted(config, split, classify(state, instr))) return std::nullopt;
  Example ex{state, instr, solve(state, instr, config.planner), split};
  if (config.require_movement && instr.verb != Verb::walk_to) {
    const Action act = instr.verb == Verb::push ? Action::push : Action::pull;
    if (std::find(ex.actions.begin(), ex.actions.end(), act) == ex.actions.end()) return std::nullopt;
  }
  return ex;
}

std::string require_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ImportError(std::string("missing field '") + key + "'");
  if (!j[key].is_string()) throw ImportError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

int require_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ImportError(std::string("missing field '") + key + "'");
  const auto& v = j[key];
  if (v.is_number_integer()) return v.get<int>();
  // The original environment stores coordinates and sizes as strings.
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      const int out = std::stoi(v.get<std::string>(), &used);
      if (used == v.get<std::string>().size()) return out;
    } catch (const std::exception&) {
    }
  }
  throw ImportError(std::string("field '") + key + "' must be an integer");
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ImportError(std::string("missing field '") + key + "'");
  return j[key];
}

}  // namespace

std::string_view split_name(SplitId s) { return kSplitNames[static_cast<std::size_t>(s)]; }

SplitId split_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i)
    if (kSplitNames[i] == name) return static_cast<SplitId>(i);
  throw MappingError("unknown split '" + std::string(name) + "'");
}

SplitSet classify(const WorldState& state, const Instruction& in) {
  SplitSet out;
  if (in.color == ColorWord::yellow && in.shape == Shape::square) out.insert(SplitId::b);
  if (in.adverb == Adverb::cautiously) out.insert(SplitId::g);
  if (in.verb == Verb::pull && in.adverb == Adverb::while_spinning) out.insert(SplitId::h);
  const auto r = try_resolve_target(in, state);
  if (!r) return out;
  const auto& o = r->object;
  if (o.shape == Shape::square && is_color(o, Color::red)) out.insert(SplitId::c);
  if (o.pos.x < state.agent.pos.x && o.pos.y > state.agent.pos.y) out.insert(SplitId::d);
  if (in.size == SizeWord::small && in.shape == Shape::circle && o.size == 2) out.insert(SplitId::e);
  if (in.verb == Verb::push && o.size == 3) out.insert(SplitId::f);
  return out;
}

void validate(const DatasetConfig& c) {
  if (c.grid_size < 2) throw ConfigError("grid size must be at least 2");
  if (c.min_objects < 1 || c.min_objects > c.max_objects)
    throw ConfigError("object range must satisfy 1 <= min <= max");
  if (c.max_objects > c.grid_size * c.grid_size - 1) throw ConfigError("too many objects for the grid");
  for (int n : c.counts)
    if (n < 0) throw ConfigError("split counts must be non-negative");
  for (double w : c.verb_weights)
    if (!(w >= 0)) throw ConfigError("verb weights must be non-negative");
  for (double w : c.adverb_weights)
    if (!(w >= 0)) throw ConfigError("adverb weights must be non-negative");
  if (c.max_attempts < 1) throw ConfigError("max_attempts must be positive");
  if (c.workers < 1) throw ConfigError("workers must be positive");
  validate(c.planner);
}

std::vector<const Example*> Dataset::split(SplitId s) const {
  std::vector<const Example*> out;
  for (const auto& e : examples)
    if (e.split == s) out.push_back(&e);
  return out;
}

std::size_t Dataset::count(SplitId s) const {
  return static_cast<std::size_t>(
      std::count_if(examples.begin(), examples.end(), [s](const Example& e) { return e.split == s; }));
}

Example generate_example(const DatasetConfig& config, SplitId split, std::uint64_t index) {
  Rng rng(Rng::derive(config.seed, static_cast<std::uint64_t>(split), index));
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    if (auto ex = propose(config, split, rng)) return *ex;
  }
  throw GenerationError("no example for split " + std::string(split_name(split)) + " after " +
                        std::to_string(config.max_attempts) + " attempts");
}

Dataset generate_dataset(const DatasetConfig& config) {
  validate(config);
  std::vector<std::pair<SplitId, std::uint64_t>> jobs;
  for (auto s : kAllSplits)
    for (int i = 0; i < config.counts[static_cast<std::size_t>(s)]; ++i)
      jobs.emplace_back(s, static_cast<std::uint64_t>(i));

  Dataset out;
  out.examples.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out.examples[i] = generate_example(config, jobs[i].first, jobs[i].second);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  if (config.workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < config.workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

nlohmann::json state_to_json(const WorldState& s) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : s.objects)
    objects.push_back({{"color", color_name(o.color)},
                       {"shape", shape_name(o.shape)},
                       {"size", o.size},
                       {"x", o.pos.x},
                       {"y", o.pos.y}});
  return {{"grid_size", s.grid_size},
          {"agent", {{"x", s.agent.pos.x}, {"y", s.agent.pos.y}, {"d", static_cast<int>(s.agent.dir)}}},
          {"objects", objects}};
}

WorldState state_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ImportError("state must be a JSON object");
  WorldState s;
  s.grid_size = require_int(j, "grid_size");
  const auto& agent = require(j, "agent");
  s.agent.pos = {require_int(agent, "x"), require_int(agent, "y")};
  const int d = require_int(agent, "d");
  if (d < 0 || d > 3) throw ImportError("field 'd' must be in 0..3");
  s.agent.dir = static_cast<Heading>(d);
  const auto& objects = require(j, "objects");
  if (!objects.is_array()) throw ImportError("field 'objects' must be an array");
  for (const auto& o : objects) {
    ObjectSpec spec;
    try {
      spec.color = color_from_name(require_string(o, "color"));
      spec.shape = shape_from_name(require_string(o, "shape"));
    } catch (const MappingError& e) {
      throw ImportError(e.what());
    }
    spec.size = require_int(o, "size");
    spec.pos = {require_int(o, "x"), require_int(o, "y")};
    s.objects.push_back(spec);
  }
  try {
    validate(s);
  } catch (const Error& e) {
    throw ImportError(std::string("invalid state: ") + e.what());
  }
  return s;
}

nlohmann::json example_to_json(const Example& e) {
  auto j = state_to_json(e.state);
  j["command"] = realize_text(e.instruction, ',');
  j["target"] = join_actions(e.actions);
  j["split"] = split_name(e.split);
  return j;
}

Example example_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ImportError("record must be a JSON object");
  Example e;
  const auto command = require_string(j, "command");
  const auto target = require_string(j, "target");
  const auto split = require_string(j, "split");
  e.state = state_from_json(j);
  try {
    e.instruction = parse(std::string_view(command));
    e.actions = split_actions(target);
    e.split = split_from_name(split);
  } catch (const Error& err) {
    throw ImportError(err.what());
  }
  return e;
}

std::string example_to_line(const Example& e) { return example_to_json(e).dump(); }

void write_examples(std::ostream& out, const std::vector<Example>& examples) {
  for (const auto& e : examples) out << example_to_line(e) << '\n';
  if (!out) throw ExportError("write failed");
}

std::vector<Example> read_examples(std::istream& in) {
  std::vector<Example> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ImportError("line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw ImportError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_dataset(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExportError("cannot open " + path + " for writing");
  write_examples(out, d.examples);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImportError("cannot open " + path);
  return Dataset{read_examples(in)};
}

namespace {

std::optional<SplitId> gscan_split(std::string_view name) {
  static const std::array<std::pair<std::string_view, SplitId>, 9> table = {{
      {"train", SplitId::train},
      {"test", SplitId::a},
      {"visual_easier", SplitId::b},
      {"visual", SplitId::c},
      {"situational_1", SplitId::d},
      {"situational_2", SplitId::e},
      {"contextual", SplitId::f},
      {"adverb_1", SplitId::g},
      {"adverb_2", SplitId::h},
  }};
  for (const auto& [k, v] : table)
    if (k == name) return v;
  return std::nullopt;
}

Heading gscan_heading(int code) {
  switch (code) {
    case 0: return Heading::east;
    case 1: return Heading::south;
    case 2: return Heading::west;
    case 3: return Heading::north;
    default: throw ImportError("agent_direction must be in 0..3");
  }
}

Action gscan_action(std::string_view token) {
  if (token == "walk") return Action::walk;
  if (token == "turn left") return Action::lturn;
  if (token == "turn right") return Action::rturn;
  if (token == "stay") return Action::stay;
  if (token == "push") return Action::push;
  if (token == "pull") return Action::pull;
  throw ImportError("unknown target command '" + std::string(token) + "'");
}

Position gscan_position(const nlohmann::json& j) { return {require_int(j, "column"), require_int(j, "row")}; }

Example gscan_example(const nlohmann::json& rec, SplitId split) {
  Example e;
  e.split = split;
  Tokens tokens;
  std::stringstream cmd(require_string(rec, "command"));
  for (std::string t; std::getline(cmd, t, ',');)
    if (!t.empty()) tokens.push_back(t);
  try {
    e.instruction = parse(tokens);
  } catch (const Error& err) {
    throw ImportError(err.what());
  }

  std::stringstream target(require_string(rec, "target_commands"));
  for (std::string t; std::getline(target, t, ',');)
    if (!t.empty()) e.actions.push_back(gscan_action(t));

  const auto& sit = require(rec, "situation");
  e.state.grid_size = require_int(sit, "grid_size");
  e.state.agent.pos = gscan_position(require(sit, "agent_position"));
  e.state.agent.dir = gscan_heading(require_int(sit, "agent_direction"));
  const auto& placed = require(sit, "placed_objects");
  std::vector<std::pair<int, ObjectSpec>> objects;
  for (auto it = placed.begin(); it != placed.end(); ++it) {
    const auto& obj = require(it.value(), "object");
    ObjectSpec spec;
    try {
      spec.shape = shape_from_name(require_string(obj, "shape"));
      spec.color = color_from_name(require_string(obj, "color"));
    } catch (const MappingError& err) {
      throw ImportError(err.what());
    }
    spec.size = require_int(obj, "size");
    spec.pos = gscan_position(require(it.value(), "position"));
    int key = 0;
    try {
      key = std::stoi(it.key());
    } catch (const std::exception&) {
      key = static_cast<int>(objects.size());
    }
    objects.emplace_back(key, spec);
  }
  std::stable_sort(objects.begin(), objects.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [k, spec] : objects) e.state.objects.push_back(spec);
  try {
    validate(e.state);
  } catch (const Error& err) {
    throw ImportError(std::string("invalid situation: ") + err.what());
  }
  return e;
}

}  // namespace

Dataset import_gscan(const nlohmann::json& root, std::vector<std::string>* skipped) {
  const auto& examples = require(root, "examples");
  if (!examples.is_object()) throw ImportError("field 'examples' must be an object");
  Dataset out;
  for (auto it = examples.begin(); it != examples.end(); ++it) {
    const auto split = gscan_split(it.key());
    if (!split) {
      if (skipped) skipped->push_back(it.key());
      continue;
    }
    std::size_t n = 0;
    for (const auto& rec : it.value()) {
      try {
        out.examples.push_back(gscan_example(rec, *split));
      } catch (const Error& err) {
        throw ImportError(it.key() + " record " + std::to_string(n) + ": " + err.what());
      }
      ++n;
    }
  }
  // Keep the generator's grouping so exports look alike.
  std::stable_sort(out.examples.begin(), out.examples.end(),
                   [](const Example& a, const Example& b) { return a.split < b.split; });
  return out;
}

Dataset import_gscan_file(const std::string& path, std::vector<std::string>* skipped) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImportError("cannot open " + path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ImportError(path + ": " + e.what());
  }
  return import_gscan(root, skipped);
}

bool oracle_consistent(const Example& e, const PlannerConfig& config) {
  try {
    return solve(e.state, e.instruction, config) == e.actions;
  } catch (const Error&) {
    return false;
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCategory::data, "SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

}  // namespace gridicl
