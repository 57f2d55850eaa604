#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gridicl/dataset.hpp"
#include "gridicl/errors.hpp"
#include "gridicl/icl.hpp"
#include "gridicl/instruction_model.hpp"
#include "gridicl/metrics.hpp"
#include "gridicl/paraphrase.hpp"
#include "gridicl/permuter.hpp"
#include "gridicl/rng.hpp"
#include "gridicl/solver.hpp"
#include "gridicl/supports.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gridicl::cli {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImportError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExportError("cannot open " + path + " for writing");
  return out;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
  if (!seed) throw ConfigError("--seed is required");
  return *seed;
}

// Records the config, its digest and a hash of every output. `digest`
// covers output contents only, so runs writing to different paths compare
// equal when they produced the same bytes.
void write_manifest(const std::string& path, const std::string& command, std::optional<std::uint64_t> seed,
                    const json& config, const std::vector<std::string>& outputs, const json& counts) {
  json files = json::object();
  std::string all;
  for (const auto& o : outputs) {
    const auto h = sha256_hex(read_file(o));
    files[fs::path(o).filename().string()] = h;
    all += h + '\n';
  }
  const json m = {{"command", command},
                  {"version", GRIDICL_VERSION},
                  {"seed", seed ? json(*seed) : json(nullptr)},
                  {"config", config},
                  {"config_digest", sha256_hex(config.dump())},
                  {"counts", counts},
                  {"outputs", files},
                  {"digest", sha256_hex(all)}};
  auto out = open_out(path);
  out << m.dump(2) << '\n';
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
  } catch (const std::logic_error&) {
    throw ConfigError("expected N or LO..HI, got '" + text + "'");
  }
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("expected comma-separated integers, got '" + text + "'");
    }
  }
  return out;
}

// Runs fn(worker, i) for i in [0, n). Results must be written by index so
// the output does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(0, i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&](int w) {
    for (std::size_t i; !stop && (i = next++) < n;) {
      try {
        fn(w, i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

class DecliningSolver : public Solver {
 public:
  std::optional<ActionSequence> solve(const WorldState&, const Instruction&) override { return std::nullopt; }
  std::string name() const override { return "none"; }
};

std::unique_ptr<Solver> make_solver(const std::string& kind, const std::string& cmd, int timeout_ms) {
  if (kind == "oracle") return std::make_unique<OracleSolver>();
  if (kind == "none") return std::make_unique<DecliningSolver>();
  if (kind == "external") {
    if (cmd.empty()) throw ConfigError("--solver external needs --solver-cmd");
    ExternalSolver::Options o;
    std::istringstream ss(cmd);
    for (std::string a; ss >> a;) o.argv.push_back(a);
    o.timeout = std::chrono::milliseconds(timeout_ms);
    return std::make_unique<ExternalSolver>(o);
  }
  throw ConfigError("unknown solver '" + kind + "' (oracle, external, none)");
}

struct Input {
  std::vector<QuerySupports> records;  // empty for plain datasets
  std::vector<Example> examples;       // queries when records are present
  bool has_supports = false;
};

Input load_input(const std::string& path) {
  const auto text = read_file(path);
  Input in;
  const auto first_end = text.find('\n');
  const auto first = text.substr(0, first_end);
  try {
    in.has_supports = !first.empty() && json::parse(first).contains("supports");
  } catch (const json::exception&) {
    throw ImportError(path + ": line 1 is not JSON");
  }
  std::istringstream ss(text);
  if (in.has_supports) {
    in.records = read_query_supports(ss);
    for (const auto& r : in.records) in.examples.push_back(r.query);
  } else {
    in.examples = read_examples(ss);
  }
  return in;
}

std::vector<Example> load_examples(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string(flag) + " is required");
  return read_dataset(path).examples;
}

}  // namespace

void gen_data(const GenDataArgs& args) {
  const auto seed = require_seed(args.seed);
  DatasetConfig c;
  c.seed = seed;
  c.grid_size = args.grid;
  std::tie(c.min_objects, c.max_objects) = parse_range(args.objects);
  c.counts.fill(args.per_split);
  c.counts[0] = args.train;
  c.workers = args.workers;
  c.require_movement = !args.allow_static;
  for (const auto& s : args.no_holdout) c.holdouts.erase(split_from_name(s));
  validate(c);

  const auto d = generate_dataset(c);
  std::vector<std::string> outputs;
  json counts = json::object();
  for (auto s : kAllSplits) {
    std::string name(split_name(s));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
    const auto path = (fs::path(args.out) / (name + ".jsonl")).string();
    std::vector<Example> part;
    for (const auto* e : d.split(s)) part.push_back(*e);
    auto out = open_out(path);
    write_examples(out, part);
    out.close();
    outputs.push_back(path);
    counts[std::string(split_name(s))] = part.size();
  }
  json holdouts = json::array();
  for (auto s : c.holdouts) holdouts.push_back(split_name(s));
  const json config = {{"train", args.train},     {"per_split", args.per_split},
                       {"grid", c.grid_size},     {"min_objects", c.min_objects},
                       {"max_objects", c.max_objects}, {"holdouts", holdouts},
                       {"require_movement", c.require_movement}};
  write_manifest((fs::path(args.out) / "manifest.json").string(), "gen-data", seed, config, outputs, counts);
}

void fit_model(const FitModelArgs& args) {
  const auto train = load_examples(args.train, "--train");
  std::vector<Instruction> corpus;
  corpus.reserve(train.size());
  for (const auto& e : train) corpus.push_back(e.instruction);
  const auto model = InstructionModel::fit(corpus, args.smoothing);
  if (const auto parent = fs::path(args.out).parent_path(); !parent.empty()) fs::create_directories(parent);
  model.save(args.out);
  write_manifest(args.out + ".manifest.json", "fit-model", std::nullopt,
                 {{"train", fs::path(args.train).filename().string()}, {"smoothing", args.smoothing}}, {args.out},
                 {{"instructions", model.corpus().size()}});
}

void gen_supports(const GenSupportsArgs& a) {
  const auto seed = require_seed(a.seed);
  const Strategy strategy = strategy_from_name(a.strategy);
  if (a.n < 1) throw ConfigError("--n must be positive");
  if (a.workers < 1) throw ConfigError("--workers must be positive");
  std::string solver_kind = a.solver;
  if (solver_kind.empty()) {
    if (strategy == Strategy::gandr) throw ConfigError("gandr needs a helper solver (--solver)");
    solver_kind = "oracle";
  }

  auto queries = read_dataset(a.input).examples;
  if (a.limit > 0 && queries.size() > a.limit) queries.resize(a.limit);
  const bool needs_train = strategy == Strategy::other_states || strategy == Strategy::covr ||
                           strategy == Strategy::gandr || (strategy == Strategy::demogen && a.model.empty());
  std::vector<Example> train;
  if (needs_train) train = load_examples(a.train, "--train");

  RetrievalOptions retrieval;
  retrieval.neighbours = a.neighbours;
  retrieval.probes = a.probes;
  retrieval.index.cells = a.cells;
  retrieval.index.seed = seed;

  std::optional<InstructionLookup> lookup;
  std::optional<InstructionModel> model;
  std::optional<CovrRetriever> covr;
  std::optional<GandrRetriever> gandr;
  DemoGenOptions dg;
  dg.samples = a.k;
  dg.n = a.n;
  dg.mask_rate = a.mask_rate;
  dg.keep_invalid = a.keep_invalid;
  switch (strategy) {
    case Strategy::other_states: lookup.emplace(train); break;
    case Strategy::demogen:
      if (!a.model.empty()) {
        model = InstructionModel::load(a.model);
      } else {
        std::vector<Instruction> corpus;
        for (const auto& e : train) corpus.push_back(e.instruction);
        model = InstructionModel::fit(corpus);
      }
      break;
    case Strategy::covr: {
      CovrOptions o;
      o.alpha = a.alpha;
      o.pca_dim = a.pca_dim;
      o.pca_samples = a.pca_samples;
      o.pca_seed = seed;
      o.retrieval = retrieval;
      covr.emplace(train, o);
      break;
    }
    case Strategy::gandr: {
      GandrOptions o;
      o.output_weight = a.output_weight;
      o.retrieval = retrieval;
      gandr.emplace(train, o);
      break;
    }
    default: break;
  }

  const int workers = static_cast<int>(std::min<std::size_t>(a.workers, std::max<std::size_t>(queries.size(), 1)));
  std::vector<std::unique_ptr<Solver>> solvers;
  for (int w = 0; w < workers; ++w) solvers.push_back(make_solver(solver_kind, a.solver_cmd, a.solver_timeout_ms));

  std::vector<QuerySupports> out(queries.size());
  parallel_for(queries.size(), workers, [&](int w, std::size_t i) {
    const auto& q = queries[i];
    Solver& solver = *solvers[static_cast<std::size_t>(w)];
    const auto s = Rng::derive(seed, i, static_cast<std::uint64_t>(strategy));
    SupportSet set;
    switch (strategy) {
      case Strategy::heuristic: set = heuristic_supports(q, solver, a.n); break;
      case Strategy::random: set = random_supports(q, solver, s, a.n); break;
      case Strategy::other_states: set = other_states_supports(q, *lookup, s, a.n); break;
      case Strategy::demogen: set = demogen_supports(q, *model, solver, dg, s); break;
      case Strategy::covr: set = covr->supports(q, a.n); break;
      case Strategy::gandr: set = gandr->supports(q, solver, a.n); break;
    }
    out[i] = {q, std::move(set)};
  });

  {
    auto f = open_out(a.out);
    write_query_supports(f, out);
  }
  std::size_t total = 0, fallbacks = 0;
  for (const auto& r : out) {
    total += r.supports.supports.size();
    fallbacks += r.supports.fallback ? 1 : 0;
  }
  json config = {{"strategy", strategy_name(strategy)},
                 {"input", fs::path(a.input).filename().string()},
                 {"train", needs_train ? json(fs::path(a.train).filename().string()) : json(nullptr)},
                 {"limit", a.limit},
                 {"n", a.n},
                 {"solver", solver_kind}};
  if (strategy == Strategy::demogen)
    config.update({{"k", a.k},
                   {"mask_rate", a.mask_rate},
                   {"keep_invalid", dg.keep_invalid},
                   {"model", a.model.empty() ? json(nullptr) : json(sha256_hex(read_file(a.model)))}});
  if (strategy == Strategy::covr)
    config.update({{"alpha", a.alpha}, {"pca_dim", a.pca_dim}, {"pca_samples", a.pca_samples}});
  if (strategy == Strategy::gandr) config["output_weight"] = a.output_weight;
  if (strategy == Strategy::covr || strategy == Strategy::gandr)
    config.update({{"cells", a.cells}, {"probes", a.probes}, {"neighbours", a.neighbours}});
  write_manifest(a.out + ".manifest.json", "gen-supports", seed, config, {a.out},
                 {{"queries", out.size()}, {"supports", total}, {"fallbacks", fallbacks}});
}

void analyze(const AnalyzeArgs& a) {
  if (!(a.criteria || a.validity || a.nn_profile || a.zipf || !a.pattern.empty() || a.diversity))
    throw ConfigError("nothing to analyze; pass at least one report flag");
  const bool needs_input = a.criteria || a.validity || a.nn_profile || !a.pattern.empty() || a.diversity ||
                           (a.zipf && a.zipf_corpus.empty());
  Input in;
  if (needs_input) {
    if (a.input.empty()) throw ConfigError("--input is required for the requested reports");
    in = load_input(a.input);
  }
  auto need_supports = [&](const char* flag) {
    if (!in.has_supports) throw ConfigError(std::string(flag) + " needs a support file from gen-supports");
  };

  json report = json::object();
  if (a.criteria) {
    need_supports("--criteria");
    report["criteria"] = support_criteria(in.records).to_json();
  }
  if (a.validity) {
    need_supports("--validity");
    std::vector<Support> all;
    for (const auto& r : in.records) all.insert(all.end(), r.supports.supports.begin(), r.supports.supports.end());
    report["validity"] = validity_correctness(all).to_json();
  }
  if (a.nn_profile) {
    const auto train = load_examples(a.train, "--train");
    std::vector<WorldState> split, base;
    for (const auto& e : in.examples) split.push_back(e.state);
    for (const auto& e : train) base.push_back(e.state);
    const auto ranks = a.ranks.empty() ? power_of_two_ranks(8192) : parse_ints(a.ranks);
    NnProfileOptions o;
    o.sample = a.sample;
    o.seed = a.seed;
    o.use_ivf = a.ivf;
    o.probes = a.probes;
    o.index.cells = a.cells;
    o.index.seed = a.seed;
    report["nn_profile"] = nn_profile(split, base, ranks, o).to_json();
  }
  if (a.zipf) {
    std::vector<std::string> tokens;
    if (!a.zipf_corpus.empty()) {
      tokens = word_tokens(read_file(a.zipf_corpus));
    } else {
      for (const auto& e : in.examples)
        for (auto& t : realize(e.instruction)) tokens.push_back(std::move(t));
    }
    const auto fit = zipf_fit(tokens);
    report["zipf"] = {{"alpha", fit.alpha}, {"rmse", fit.rmse}, {"tokens", fit.tokens}, {"types", fit.types}};
  }
  if (!a.pattern.empty()) {
    std::string text = a.pattern;
    if (text == "H") text = kPullSpinPattern;
    else if (text == "D") text = kSouthWestPattern;
    else if (text == "G") text = cautious_pattern();
    const auto pattern = ActionPattern::parse(text);
    std::vector<ActionSequence> targets;
    for (const auto& e : in.examples) targets.push_back(e.actions);
    const double f = pattern_frequency(targets, pattern, a.permutations);
    report["pattern"] = {{"pattern", pattern.text()},
                         {"any_permutation", a.permutations},
                         {"records", targets.size()},
                         {"frequency", f}};
  }
  if (a.diversity) {
    need_supports("--diversity");
    std::vector<Tokens> docs;
    for (const auto& r : in.records) {
      docs.push_back(realize(r.query.instruction));
      for (const auto& s : r.supports.supports) docs.push_back(realize(s.instruction));
    }
    const auto enc = TfIdfEncoder::fit(docs);
    double div = 0, rel = 0;
    std::size_t nd = 0, nr = 0;
    for (const auto& r : in.records) {
      std::vector<Instruction> instrs;
      for (const auto& s : r.supports.supports) instrs.push_back(s.instruction);
      if (instrs.empty()) continue;
      rel += relevance(instrs, r.query.instruction, enc);
      ++nr;
      if (instrs.size() >= 2) {
        div += diversity(instrs, enc);
        ++nd;
      }
    }
    report["diversity"] = {{"diversity", nd ? json(div / static_cast<double>(nd)) : json(nullptr)},
                           {"relevance", nr ? json(rel / static_cast<double>(nr)) : json(nullptr)},
                           {"queries", nr}};
  }

  const auto text = report.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    auto f = open_out(a.out);
    f << text;
  }
}

void export_icl(const ExportIclArgs& a) {
  const auto seed = require_seed(a.seed);
  IclOptions o;
  o.seed = seed;
  o.permute_words = a.permute_words;
  if (a.policy == "identity") o.policy = PermutationPolicy::identity;
  else if (a.policy == "permute") o.policy = PermutationPolicy::permute;
  else throw ConfigError("unknown policy '" + a.policy + "' (identity, permute)");
  const auto in = load_input(a.input);
  if (!in.has_supports) throw ExportError(a.input + " has no support sets; run gen-supports first");
  {
    auto f = open_out(a.out);
    gridicl::export_icl(f, in.records, o);
  }
  write_manifest(a.out + ".manifest.json", "export-icl", seed,
                 {{"input", fs::path(a.input).filename().string()},
                  {"policy", a.policy},
                  {"permute_words", a.permute_words}},
                 {a.out}, {{"records", in.records.size()}});
}

void permute(const PermuteArgs& a) {
  if (a.actions.empty() == a.words.empty()) throw ConfigError("pass exactly one of --actions or --words");
  if (a.perm.empty() == !a.seed.has_value()) throw ConfigError("pass exactly one of --perm or --seed");
  const int size = a.actions.empty() ? kWordTableSize : kActionTableSize;
  const Permutation p = a.perm.empty() ? Permutation::sample(*a.seed, size) : Permutation(parse_ints(a.perm));
  if (p.size() != size) throw MappingError("permutation has " + std::to_string(p.size()) + " codes, expected " +
                                           std::to_string(size));
  std::vector<int> codes;
  if (!a.actions.empty()) {
    codes = action_codes(parse_compact_actions(a.actions));
  } else {
    codes = encode_tokens(word_tokens(a.words));
  }
  if (a.show_encoded) std::cout << format_compact(codes) << '\n';
  std::cout << format_compact(p.apply(codes)) << '\n';
}

void paraphrase(const ParaphraseArgs& a) {
  ParaphraseOptions o;
  o.mode = prompt_mode_from_name(a.mode);
  o.use_templates = a.templates;
  o.workers = a.workers;
  o.retries = a.retries;
  if (!a.synonyms.empty()) {
    try {
      o.synonyms = json::parse(read_file(a.synonyms)).get<SynonymTable>();
    } catch (const json::exception& e) {
      throw ImportError(a.synonyms + ": " + e.what());
    }
  }

  const auto in = load_input(a.input);
  std::vector<Instruction> queries;
  std::set<Instruction> seen;
  for (const auto& e : in.examples)
    if (seen.insert(e.instruction).second) queries.push_back(e.instruction);

  std::unique_ptr<ParaphraseTransport> transport;
  if (!a.dry_run.empty()) {
    // Replies come from DIR/<query words joined by underscores>.txt.
    const std::string dir = a.dry_run;
    transport = std::make_unique<FakeTransport>([dir](const std::string& prompt) {
      const std::string open = "“", close = "”";
      const auto last = prompt.rfind(open);
      const auto end = prompt.rfind(close);
      if (last == std::string::npos || end == std::string::npos || end < last)
        throw TransportError("dry run: cannot find the query in the prompt");
      std::string name;
      for (char c : prompt.substr(last + open.size(), end - last - open.size())) {
        if (std::isalnum(static_cast<unsigned char>(c))) name += static_cast<char>(std::tolower(c));
        else if (!name.empty() && name.back() != '_') name += '_';
      }
      while (!name.empty() && name.back() == '_') name.pop_back();
      const auto path = (fs::path(dir) / (name + ".txt")).string();
      std::ifstream f(path, std::ios::binary);
      if (!f) throw TransportError("dry run: no reply file " + path);
      std::ostringstream ss;
      ss << f.rdbuf();
      return ss.str();
    });
  } else {
    auto http = HttpTransport::from_env();
    auto opts = http.options();
    opts.temperature = a.temperature;
    transport = std::make_unique<HttpTransport>(opts);
  }

  auto cache = a.cache.empty() ? ParaphraseCache{} : ParaphraseCache::load(a.cache);
  auto& meta = cache.meta();
  meta["mode"] = prompt_mode_name(o.mode);
  meta["templates"] = o.use_templates;
  if (const auto* http = dynamic_cast<const HttpTransport*>(transport.get())) {
    meta["endpoint"] = http->options().endpoint;
    meta["model"] = http->options().model;
    meta["temperature"] = http->options().temperature ? json(*http->options().temperature) : json("endpoint default");
  } else {
    meta["dry_run"] = a.dry_run;
  }
  std::vector<ParaphraseRecord> records;
  try {
    records = paraphrase_all(queries, *transport, cache, o);
  } catch (...) {
    // Keep whatever finished so a rerun resumes.
    if (!a.cache.empty()) cache.save(a.cache);
    throw;
  }
  if (!a.cache.empty()) cache.save(a.cache);
  auto out = open_out(a.out);
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

void solver_server() {
  OracleSolver oracle;
  serve_solver(std::cin, std::cout, oracle);
}

}  // namespace gridicl::cli
