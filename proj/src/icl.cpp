#include "gridicl/icl.hpp"

#include <ostream>

#include "gridicl/errors.hpp"
#include "gridicl/rng.hpp"

namespace gridicl {

using nlohmann::json;

nlohmann::json export_icl_record(const QuerySupports& qs, std::uint64_t id, const IclOptions& options) {
  const bool permute = options.policy == PermutationPolicy::permute;
  const auto actions = permute ? Permutation::sample(Rng::derive(options.seed, id, 0), kActionTableSize)
                               : Permutation::identity(kActionTableSize);
  const auto words = permute && options.permute_words
                         ? Permutation::sample(Rng::derive(options.seed, id, 1), kWordTableSize)
                         : Permutation::identity(kWordTableSize);
  auto command_codes = [&](const Instruction& instr) { return words.apply(encode_tokens(realize(instr))); };

  json sups = json::array();
  for (const auto& s : qs.supports.supports)
    sups.push_back({{"state", state_to_json(s.state)},
                    {"command", realize_text(s.instruction)},
                    {"command_codes", command_codes(s.instruction)},
                    {"target_codes", actions.apply(action_codes(s.actions))}});
  return {{"id", id},
          {"split", split_name(qs.query.split)},
          {"action_permutation", actions.codes()},
          {"word_permutation", permute && options.permute_words ? json(words.codes()) : json(nullptr)},
          {"supports", sups},
          {"query",
           {{"state", state_to_json(qs.query.state)},
            {"command", realize_text(qs.query.instruction)},
            {"command_codes", command_codes(qs.query.instruction)}}},
          {"target_codes", actions.apply(action_codes(qs.query.actions))}};
}

void export_icl(std::ostream& out, const std::vector<QuerySupports>& records, const IclOptions& options) {
  for (std::size_t i = 0; i < records.size(); ++i) out << export_icl_record(records[i], i, options).dump() << '\n';
  if (!out) throw ExportError("write failed");
}

DecodedIclRecord decode_icl_record(const nlohmann::json& record) {
  try {
    const Permutation inverse = Permutation(record.at("action_permutation").get<std::vector<int>>()).inverse();
    DecodedIclRecord d;
    for (const auto& s : record.at("supports"))
      d.support_targets.push_back(actions_from_codes(inverse.apply(s.at("target_codes").get<std::vector<int>>())));
    d.query_target = actions_from_codes(inverse.apply(record.at("target_codes").get<std::vector<int>>()));
    return d;
  } catch (const json::exception& e) {
    throw ImportError(std::string("bad ICL record: ") + e.what());
  }
}

}  // namespace gridicl
