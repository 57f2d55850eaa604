#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "gridicl/permuter.hpp"
#include "gridicl/supports.hpp"

namespace gridicl {

enum class PermutationPolicy : std::uint8_t { identity, permute };

struct IclOptions {
  PermutationPolicy policy = PermutationPolicy::permute;
  bool permute_words = false;
  std::uint64_t seed = 0;
};

// One in-context record per query:
// {"id":N,"split":"H","action_permutation":[6 codes],"word_permutation":[18 codes] or null,
//  "supports":[{"state":{..},"command":"..","command_codes":[..],"target_codes":[..]}],
//  "query":{"state":{..},"command":"..","command_codes":[..]},"target_codes":[..]}
// Every target in the record, supports and query alike, goes through the
// same action permutation, drawn from (seed, id).
nlohmann::json export_icl_record(const QuerySupports& qs, std::uint64_t id, const IclOptions& options);
void export_icl(std::ostream& out, const std::vector<QuerySupports>& records, const IclOptions& options);

struct DecodedIclRecord {
  std::vector<ActionSequence> support_targets;
  ActionSequence query_target;
};
// Undoes the stored action permutation.
DecodedIclRecord decode_icl_record(const nlohmann::json& record);

}  // namespace gridicl
