#include "gridicl/instruction_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridicl/errors.hpp"
#include "gridicl/rng.hpp"

namespace gridicl {

namespace {

constexpr std::array<int, InstructionModel::kSlots> kCard = {kNumVerbs, kNumSizeWords, kNumColorWords, kNumShapes,
                                                             kNumAdverbs};

int encode_prefix(const std::array<int, InstructionModel::kSlots>& slots, int len) {
  int code = 0;
  for (int j = 0; j < len; ++j) code = code * kCard[static_cast<std::size_t>(j)] + slots[static_cast<std::size_t>(j)];
  return code;
}

}  // namespace

int InstructionModel::slot_cardinality(int slot) { return kCard.at(static_cast<std::size_t>(slot)); }

std::array<int, InstructionModel::kSlots> InstructionModel::slots_of(const Instruction& in) {
  return {static_cast<int>(in.verb), static_cast<int>(in.size), static_cast<int>(in.color),
          static_cast<int>(in.shape), static_cast<int>(in.adverb)};
}

Instruction InstructionModel::from_slots(const std::array<int, kSlots>& s) {
  return {static_cast<Verb>(s[0]), static_cast<SizeWord>(s[1]), static_cast<ColorWord>(s[2]),
          static_cast<Shape>(s[3]), static_cast<Adverb>(s[4])};
}

InstructionModel InstructionModel::fit(const std::vector<Instruction>& corpus, double k) {
  if (corpus.empty()) throw FitError("cannot fit an instruction model on an empty corpus");
  if (!(k > 0) || !std::isfinite(k)) throw FitError("smoothing constant must be positive");
  InstructionModel m;
  m.k_ = k;
  std::set<Instruction> distinct(corpus.begin(), corpus.end());
  m.unique_.assign(distinct.begin(), distinct.end());
  m.build();
  return m;
}

void InstructionModel::build() {
  for (int j = 0; j < kSlots; ++j) vocab_[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(kCard[static_cast<std::size_t>(j)]), false);
  for (const auto& in : unique_) {
    const auto s = slots_of(in);
    for (int j = 0; j < kSlots; ++j) {
      const auto js = static_cast<std::size_t>(j);
      vocab_[js][static_cast<std::size_t>(s[js])] = true;
      auto& row = counts_[{j, encode_prefix(s, j)}];
      if (row.empty()) row.assign(static_cast<std::size_t>(kCard[js]), 0);
      ++row[static_cast<std::size_t>(s[js])];
    }
  }
  for (int j = 0; j < kSlots; ++j)
    vocab_size_[static_cast<std::size_t>(j)] = static_cast<int>(
        std::count(vocab_[static_cast<std::size_t>(j)].begin(), vocab_[static_cast<std::size_t>(j)].end(), true));
  for (int i = 0; i < kNumInstructions; ++i) {
    const auto s = slots_of(Instruction::from_index(i));
    double p = 1;
    for (int j = 0; j < kSlots && p > 0; ++j) p *= conditional(j, s, s[static_cast<std::size_t>(j)]);
    joint_[static_cast<std::size_t>(i)] = p;
  }
}

double InstructionModel::conditional(int slot, const std::array<int, kSlots>& prefix, int value) const {
  if (slot < 0 || slot >= kSlots) throw QueryError("slot out of range");
  const auto js = static_cast<std::size_t>(slot);
  if (value < 0 || value >= kCard[js]) throw QueryError("slot value out of range");
  if (!vocab_[js][static_cast<std::size_t>(value)]) return 0.0;
  const auto it = counts_.find({slot, encode_prefix(prefix, slot)});
  double c = 0, total = 0;
  if (it != counts_.end()) {
    c = it->second[static_cast<std::size_t>(value)];
    for (int n : it->second) total += n;
  }
  return (c + k_) / (total + k_ * vocab_size_[js]);
}

double InstructionModel::log_prob(const Instruction& in) const {
  const double p = joint_[static_cast<std::size_t>(in.index())];
  return p > 0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

double InstructionModel::score(const Instruction& in) const {
  return log_prob(in) / static_cast<double>(realize(in).size());
}

Instruction InstructionModel::sample_infill(const Instruction& query, double mask_rate, std::uint64_t seed) const {
  if (!(mask_rate >= 0 && mask_rate <= 1)) throw QueryError("mask_rate must be in [0, 1]");
  Rng rng(seed);
  unsigned mask = 0;
  for (int j = 0; j < kSlots; ++j)
    if (rng.bernoulli(mask_rate)) mask |= 1u << j;
  if (mask == 0) return query;
  return draw(query, mask, rng.uniform());
}

Instruction InstructionModel::draw(const Instruction& query, unsigned mask, double u) const {
  auto fixed = slots_of(query);
  for (int j = 0; j < kSlots; ++j)
    if (mask & (1u << j)) fixed[static_cast<std::size_t>(j)] = 0;
  const std::pair<unsigned, int> key{mask, from_slots(fixed).index()};

  const std::vector<std::pair<double, int>>* cdf = nullptr;
  {
    std::lock_guard lock(cache_->mu);
    auto it = cache_->cdfs.find(key);
    if (it == cache_->cdfs.end()) {
      std::vector<std::pair<double, int>> rows;
      double acc = 0;
      for (int i = 0; i < kNumInstructions; ++i) {
        const auto s = slots_of(Instruction::from_index(i));
        bool match = true;
        for (int j = 0; j < kSlots && match; ++j)
          if (!(mask & (1u << j))) match = s[static_cast<std::size_t>(j)] == fixed[static_cast<std::size_t>(j)];
        const double p = joint_[static_cast<std::size_t>(i)];
        if (!match || p <= 0) continue;
        acc += p;
        rows.emplace_back(acc, i);
      }
      it = cache_->cdfs.emplace(key, std::move(rows)).first;
    }
    cdf = &it->second;
  }
  if (cdf->empty()) return query;
  const double target = u * cdf->back().first;
  auto pos = std::upper_bound(cdf->begin(), cdf->end(), target,
                              [](double t, const std::pair<double, int>& row) { return t < row.first; });
  if (pos == cdf->end()) --pos;
  return Instruction::from_index(pos->second);
}

std::string InstructionModel::to_json() const {
  nlohmann::json j;
  j["format"] = "gridicl-instruction-model";
  j["version"] = 1;
  j["k"] = k_;
  auto& list = j["instructions"] = nlohmann::json::array();
  for (const auto& in : unique_) list.push_back(realize_text(in));
  return j.dump();
}

InstructionModel InstructionModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FitError(std::string("model file is not JSON: ") + e.what());
  }
  if (j.value("format", "") != "gridicl-instruction-model" || j.value("version", 0) != 1)
    throw FitError("unsupported model file format");
  if (!j.contains("k") || !j["k"].is_number() || !j.contains("instructions") || !j["instructions"].is_array())
    throw FitError("model file needs 'k' and 'instructions'");
  std::vector<Instruction> corpus;
  for (const auto& t : j["instructions"]) {
    if (!t.is_string()) throw FitError("model instructions must be strings");
    corpus.push_back(parse(std::string_view(t.get<std::string>())));
  }
  return fit(corpus, j["k"].get<double>());
}

void InstructionModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExportError("cannot write " + path);
  out << to_json() << '\n';
}

InstructionModel InstructionModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImportError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace gridicl
