#include "gridicl/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "gridicl/errors.hpp"
#include "gridicl/rng.hpp"

namespace gridicl {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, CriteriaReport::kRows> kRowNames = {
    "desc_obj", "agent_pos", "target_pos", "same_diff", "same_target",
    "verb_obj", "adverb_obj", "verb_and_adverb_obj", "offset_and_verb_adverb"};

struct Resolved {
  bool ok = false;
  ObjectSpec object;
};

Resolved resolved(const Instruction& instr, const WorldState& s) {
  const auto t = try_resolve_target(instr, s);
  if (!t) return {};
  return {true, t->object};
}

bool same_kind(const ObjectSpec& a, const ObjectSpec& b) {
  return a.shape == b.shape && a.color == b.color && a.size == b.size;
}

Position offset(const ObjectSpec& o, const WorldState& s) {
  return {o.pos.x - s.agent.pos.x, o.pos.y - s.agent.pos.y};
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (k >= n) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.below(n - i))]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::string_view CriteriaReport::row_name(int row) {
  if (row < 1 || row > kRows) throw QueryError("criteria rows are numbered 1 to 9");
  return kRowNames[static_cast<std::size_t>(row - 1)];
}

json CriteriaReport::to_json() const {
  json j = {{"queries", queries}, {"supports", supports}};
  for (int r = 1; r <= kRows; ++r) j[std::string(row_name(r))] = rows[static_cast<std::size_t>(r - 1)];
  return j;
}

std::string CriteriaReport::to_text() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  for (int r = 1; r <= kRows; ++r)
    out << "(" << r << ") " << row_name(r) << "\t" << rows[static_cast<std::size_t>(r - 1)] << "\n";
  return out.str();
}

CriteriaReport support_criteria(const std::vector<QuerySupports>& batch) {
  CriteriaReport rep;
  std::array<double, CriteriaReport::kRows> sums{};
  for (const auto& qs : batch) {
    const auto& q = qs.query;
    const auto qt = resolved(q.instruction, q.state);
    bool verb = false, adverb = false, verb_off = false, adverb_off = false;
    for (const auto& s : qs.supports.supports) {
      const auto st = resolved(s.instruction, s.state);
      const bool r1 = s.instruction.same_description(q.instruction);
      const bool r2 = s.state.agent.pos == q.state.agent.pos;
      const bool both = qt.ok && st.ok;
      const bool r3 = both && st.object.pos == qt.object.pos;
      const bool r4 = both && offset(st.object, s.state) == offset(qt.object, q.state);
      const bool r5 = both && same_kind(st.object, qt.object);
      sums[0] += r1;
      sums[1] += r2;
      sums[2] += r3;
      sums[3] += r4;
      sums[4] += r5;
      if (r5 && s.instruction.verb == q.instruction.verb) {
        verb = true;
        verb_off = verb_off || r4;
      }
      if (r5 && s.instruction.adverb == q.instruction.adverb) {
        adverb = true;
        adverb_off = adverb_off || r4;
      }
      ++rep.supports;
    }
    sums[5] += verb;
    sums[6] += adverb;
    sums[7] += verb && adverb;
    sums[8] += verb_off && adverb_off;
    ++rep.queries;
  }
  for (int r = 0; r < 5; ++r) rep.rows[static_cast<std::size_t>(r)] = rep.supports ? sums[static_cast<std::size_t>(r)] / static_cast<double>(rep.supports) : 0.0;
  for (int r = 5; r < 9; ++r) rep.rows[static_cast<std::size_t>(r)] = rep.queries ? sums[static_cast<std::size_t>(r)] / static_cast<double>(rep.queries) : 0.0;
  return rep;
}

json ValidityReport::to_json() const {
  json j = {{"supports", supports}, {"valid", valid}, {"correct", correct}, {"correct_and_valid", correct_and_valid}};
  j["correct_given_valid"] = correct_given_valid ? json(*correct_given_valid) : json(nullptr);
  return j;
}

ValidityReport validity_correctness(const std::vector<Support>& supports, const PlannerConfig& config) {
  ValidityReport rep;
  rep.supports = supports.size();
  if (supports.empty()) return rep;
  std::size_t valid = 0, correct = 0, both = 0;
  for (const auto& s : supports) {
    if (!resolvable(s.instruction, s.state)) continue;
    const auto oracle = solve(s.state, s.instruction, config);
    ++valid;
    if (s.solved && s.actions == oracle) {
      ++correct;
      ++both;
    }
  }
  const auto n = static_cast<double>(supports.size());
  rep.valid = static_cast<double>(valid) / n;
  rep.correct = static_cast<double>(correct) / n;
  rep.correct_and_valid = static_cast<double>(both) / n;
  if (valid > 0) rep.correct_given_valid = static_cast<double>(both) / static_cast<double>(valid);
  return rep;
}

json NnProfile::to_json() const {
  json rows = json::array();
  for (std::size_t i = 0; i < ranks.size(); ++i) rows.push_back({{"rank", ranks[i]}, {"mean_similarity", mean_similarity[i]}});
  return {{"profile", rows}, {"warnings", warnings}};
}

std::vector<int> power_of_two_ranks(int max_rank) {
  std::vector<int> out;
  for (long long r = 1; r <= max_rank; r *= 2) out.push_back(static_cast<int>(r));
  return out;
}

NnProfile nn_profile(const std::vector<WorldState>& split, const std::vector<WorldState>& train,
                     const std::vector<int>& ranks, const NnProfileOptions& options) {
  if (split.empty() || train.empty()) throw MetricError("nn_profile needs nonempty split and train sets");
  NnProfile prof;
  for (int r : ranks) {
    if (r < 1) throw QueryError("ranks must be positive");
    if (static_cast<std::size_t>(r) > train.size()) {
      prof.warnings.push_back("rank " + std::to_string(r) + " exceeds train size " + std::to_string(train.size()) +
                              "; dropped");
      continue;
    }
    prof.ranks.push_back(r);
  }
  if (prof.ranks.empty()) return prof;
  const int max_rank = *std::max_element(prof.ranks.begin(), prof.ranks.end());

  std::vector<DenseVector> train_vecs;
  train_vecs.reserve(train.size());
  for (const auto& s : train) train_vecs.push_back(normalized(encode_one_hot(s)));
  const std::size_t d = train_vecs.front().size();

  const auto picks = sample_indices(split.size(), options.sample, options.seed);
  std::vector<double> sums(prof.ranks.size(), 0.0);
  std::vector<std::size_t> counts(prof.ranks.size(), 0);
  auto accumulate = [&](const std::vector<float>& top) {
    for (std::size_t i = 0; i < prof.ranks.size(); ++i) {
      const auto r = static_cast<std::size_t>(prof.ranks[i]);
      if (r > top.size()) continue;
      sums[i] += top[r - 1];
      ++counts[i];
    }
  };

  if (options.use_ivf) {
    const auto index = IvfIndex::build(train_vecs, options.index);
    for (auto p : picks) {
      const auto hits = index.query(normalized(encode_one_hot(split[p])), max_rank, options.probes);
      std::vector<float> top;
      for (const auto& h : hits) top.push_back(h.score);
      accumulate(top);
    }
  } else {
    using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMatrix t(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < train_vecs.size(); ++i)
      std::memcpy(t.row(static_cast<Eigen::Index>(i)).data(), train_vecs[i].data(), d * sizeof(float));
    train_vecs.clear();
    constexpr std::size_t block = 64;
    for (std::size_t start = 0; start < picks.size(); start += block) {
      const std::size_t rows = std::min(block, picks.size() - start);
      RowMatrix q(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
      for (std::size_t r = 0; r < rows; ++r) {
        const auto v = normalized(encode_one_hot(split[picks[start + r]]));
        std::memcpy(q.row(static_cast<Eigen::Index>(r)).data(), v.data(), d * sizeof(float));
      }
      const RowMatrix sims = q * t.transpose();
      for (std::size_t r = 0; r < rows; ++r) {
        std::vector<float> row(sims.row(static_cast<Eigen::Index>(r)).data(),
                               sims.row(static_cast<Eigen::Index>(r)).data() + sims.cols());
        std::partial_sort(row.begin(), row.begin() + max_rank, row.end(), std::greater<>());
        row.resize(static_cast<std::size_t>(max_rank));
        accumulate(row);
      }
    }
  }

  for (std::size_t i = 0; i < prof.ranks.size(); ++i) {
    if (counts[i] < picks.size())
      prof.warnings.push_back("rank " + std::to_string(prof.ranks[i]) + " reached by " + std::to_string(counts[i]) +
                              " of " + std::to_string(picks.size()) + " queries");
    prof.mean_similarity.push_back(counts[i] ? sums[i] / static_cast<double>(counts[i]) : 0.0);
  }
  return prof;
}

double diversity(const std::vector<Instruction>& supports, const TfIdfEncoder& encoder) {
  if (supports.size() < 2) throw MetricError("diversity needs at least two supports");
  std::vector<DenseVector> e;
  for (const auto& s : supports) e.push_back(encoder.encode(realize(s)));
  double total = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      double d2 = 0;
      for (std::size_t t = 0; t < e[i].size(); ++t) {
        const double diff = static_cast<double>(e[i][t]) - e[j][t];
        d2 += diff * diff;
      }
      total += d2 / 2;
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

double relevance(const std::vector<Instruction>& supports, const Instruction& query, const TfIdfEncoder& encoder) {
  if (supports.empty()) throw MetricError("relevance needs at least one support");
  const auto q = encoder.encode(realize(query));
  double total = 0;
  for (const auto& s : supports) total += dot(encoder.encode(realize(s)), q);
  return total / static_cast<double>(supports.size());
}

double riemann_zeta(double s) {
  if (!(s > 1)) throw QueryError("zeta needs s > 1");
  // Direct sum with an Euler-Maclaurin tail.
  constexpr int n = 1000;
  double sum = 0;
  for (int k = 1; k < n; ++k) sum += std::pow(k, -s);
  const double nn = n;
  sum += std::pow(nn, 1 - s) / (s - 1) + 0.5 * std::pow(nn, -s) + s * std::pow(nn, -s - 1) / 12 -
         s * (s + 1) * (s + 2) * std::pow(nn, -s - 3) / 720;
  return sum;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

ZipfFit zipf_fit(const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> stats;  // count, first position
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto [it, fresh] = stats.try_emplace(tokens[i], 0, i);
    ++it->second.first;
  }
  if (stats.size() < 2) throw FitError("Zipf fit needs at least two distinct words");
  std::vector<std::pair<std::size_t, std::size_t>> order;  // count, first position
  for (const auto& [w, st] : stats) order.push_back(st);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  ZipfFit fit;
  fit.tokens = tokens.size();
  fit.types = order.size();
  double log_sum = 0;
  for (std::size_t r = 0; r < order.size(); ++r)
    log_sum += static_cast<double>(order[r].first) * std::log((static_cast<double>(r) + 1) / 0.5);
  fit.alpha = 1 + static_cast<double>(fit.tokens) / log_sum;
  const double z = riemann_zeta(fit.alpha);
  double se = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double emp = static_cast<double>(order[r].first) / static_cast<double>(fit.tokens);
    const double model = std::pow(static_cast<double>(r) + 1, -fit.alpha) / z;
    se += (emp - model) * (emp - model);
  }
  fit.rmse = std::sqrt(se / static_cast<double>(order.size()));
  return fit;
}

std::vector<std::uint64_t> sample_zipf(double alpha, std::size_t n, std::uint64_t seed) {
  if (!(alpha > 1)) throw QueryError("Zipf sampling needs alpha > 1");
  // Rejection sampler for the unbounded Zipf law (Devroye).
  Rng rng(seed);
  const double b = std::pow(2.0, alpha - 1);
  std::vector<std::uint64_t> out;
  out.reserve(n);
  while (out.size() < n) {
    const double u = 1 - rng.uniform();
    const double v = rng.uniform();
    const double x = std::floor(std::pow(u, -1 / (alpha - 1)));
    if (!(x >= 1) || x > 1e18) continue;
    const double t = std::pow(1 + 1 / x, alpha - 1);
    if (v * x * (t - 1) / (b - 1) <= t / b) out.push_back(static_cast<std::uint64_t>(x));
  }
  return out;
}

namespace {

struct PatternParser {
  std::string_view s;
  std::size_t i = 0;

  void skip() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw PatternError(what + " at offset " + std::to_string(i) + " in \"" + std::string(s) + "\"");
  }
  // '(' followed by a count and ')'.
  bool at_count() {
    std::size_t j = i + 1;
    if (i >= s.size() || s[i] != '(') return false;
    while (j < s.size() && s[j] == ' ') ++j;
    const std::size_t start = j;
    if (j < s.size() && s[j] == 'n') ++j;
    else
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j == start) return false;
    while (j < s.size() && s[j] == ' ') ++j;
    return j < s.size() && s[j] == ')';
  }
  int count() {
    ++i;
    skip();
    int c = 0;
    if (s[i] == 'n') {
      ++i;
    } else {
      const std::size_t start = i;
      while (std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (i - start > 6) fail("repeat count too large");
      c = std::stoi(std::string(s.substr(start, i - start)));
      if (c < 1) fail("repeat count must be positive");
    }
    skip();
    ++i;  // ')'
    return c;
  }
  std::vector<ActionPattern::Item> sequence(bool nested) {
    std::vector<ActionPattern::Item> items;
    for (;;) {
      skip();
      if (i >= s.size()) {
        if (nested) fail("unclosed group");
        return items;
      }
      if (s[i] == ')') {
        if (!nested) fail("unexpected ')'");
        return items;
      }
      ActionPattern::Item item;
      if (s[i] == '(') {
        ++i;
        item.group = sequence(true);
        ++i;  // ')'
        if (item.group.empty()) fail("empty group");
      } else if (std::isalpha(static_cast<unsigned char>(s[i]))) {
        const std::size_t start = i;
        while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
        try {
          item.symbol = static_cast<int>(action_from_name(s.substr(start, i - start)));
        } catch (const MappingError&) {
          i = start;
          fail("unknown action");
        }
      } else {
        fail("unexpected character");
      }
      if (at_count()) item.count = count();
      items.push_back(std::move(item));
    }
  }
};

class Matcher {
 public:
  Matcher(const ActionSequence& seq, bool permute) : seq_(seq), permute_(permute) {
    bound_.fill(-1);
    used_.fill(false);
  }

  using Cont = std::function<bool(std::size_t)>;

  bool items(const std::vector<ActionPattern::Item>& v, std::size_t k, std::size_t pos, const Cont& done) {
    if (k == v.size()) return done(pos);
    return repeat(v[k], 0, pos, [&](std::size_t p) { return items(v, k + 1, p, done); });
  }

 private:
  bool repeat(const ActionPattern::Item& it, int reps, std::size_t pos, const Cont& next) {
    if (it.count > 0 && reps == it.count) return next(pos);
    if (it.count == 0 && reps >= 1 && next(pos)) return true;
    return once(it, pos, [&](std::size_t p) { return repeat(it, reps + 1, p, next); });
  }

  bool once(const ActionPattern::Item& it, std::size_t pos, const Cont& next) {
    if (it.symbol < 0) return items(it.group, 0, pos, next);
    if (pos >= seq_.size()) return false;
    const int act = static_cast<int>(seq_[pos]);
    if (!permute_) return act == it.symbol && next(pos + 1);
    auto& b = bound_[static_cast<std::size_t>(it.symbol)];
    if (b >= 0) return b == act && next(pos + 1);
    if (used_[static_cast<std::size_t>(act)]) return false;
    b = act;
    used_[static_cast<std::size_t>(act)] = true;
    const bool ok = next(pos + 1);
    b = -1;
    used_[static_cast<std::size_t>(act)] = false;
    return ok;
  }

  const ActionSequence& seq_;
  bool permute_;
  std::array<int, kNumActions> bound_;
  std::array<bool, kNumActions> used_;
};

}  // namespace

ActionPattern ActionPattern::parse(std::string_view text) {
  PatternParser p{text};
  ActionPattern out;
  out.items_ = p.sequence(false);
  out.text_ = std::string(text);
  return out;
}

bool ActionPattern::matches(const ActionSequence& seq, bool any_permutation) const {
  if (items_.empty()) return true;
  Matcher m(seq, any_permutation);
  for (std::size_t start = 0; start < seq.size(); ++start)
    if (m.items(items_, 0, start, [](std::size_t) { return true; })) return true;
  return false;
}

double pattern_frequency(const std::vector<ActionSequence>& targets, const ActionPattern& pattern,
                         bool any_permutation) {
  if (targets.empty()) throw MetricError("pattern frequency needs at least one sequence");
  std::size_t hits = 0;
  for (const auto& t : targets) hits += pattern.matches(t, any_permutation) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(targets.size());
}

std::string cautious_pattern(const PlannerConfig& config) {
  std::string group;
  for (auto a : config.cautious_prefix) group += std::string(action_name(a)) + ' ';
  return "(" + group + "WALK)(n)";
}

}  // namespace gridicl
