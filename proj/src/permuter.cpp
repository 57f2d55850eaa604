#include "gridicl/permuter.hpp"

#include <cctype>
#include <numeric>

#include "gridicl/errors.hpp"
#include "gridicl/rng.hpp"

namespace gridicl {

Permutation::Permutation(std::vector<int> map) : map_(std::move(map)) {
  std::vector<bool> seen(map_.size(), false);
  for (int v : map_) {
    if (v < 0 || v >= size() || seen[static_cast<std::size_t>(v)])
      throw MappingError("permutation is not a bijection over [0, " + std::to_string(size()) + ")");
    seen[static_cast<std::size_t>(v)] = true;
  }
}

Permutation Permutation::identity(int size) {
  std::vector<int> m(static_cast<std::size_t>(size));
  std::iota(m.begin(), m.end(), 0);
  return Permutation(std::move(m));
}

Permutation Permutation::sample(std::uint64_t seed, int size) {
  if (size < 0) throw MappingError("negative permutation size");
  std::vector<int> m(static_cast<std::size_t>(size));
  std::iota(m.begin(), m.end(), 0);
  Rng rng(seed);
  for (int i = size - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(m[static_cast<std::size_t>(i)], m[j]);
  }
  return Permutation(std::move(m));
}

int Permutation::operator()(int code) const {
  if (code < 0 || code >= size())
    throw MappingError("symbol " + std::to_string(code) + " outside the permutation domain");
  return map_[static_cast<std::size_t>(code)];
}

std::vector<int> Permutation::apply(const std::vector<int>& seq) const {
  std::vector<int> out;
  out.reserve(seq.size());
  for (int c : seq) out.push_back((*this)(c));
  return out;
}

ActionSequence Permutation::apply(const ActionSequence& seq) const {
  if (size() != kActionTableSize) throw MappingError("permutation is not over the action table");
  return actions_from_codes(apply(action_codes(seq)));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) inv[static_cast<std::size_t>(map_[i])] = static_cast<int>(i);
  return Permutation(std::move(inv));
}

std::vector<int> action_codes(const ActionSequence& seq) {
  std::vector<int> out;
  out.reserve(seq.size());
  for (auto a : seq) out.push_back(static_cast<int>(a));
  return out;
}

ActionSequence actions_from_codes(const std::vector<int>& codes) {
  ActionSequence out;
  out.reserve(codes.size());
  for (int c : codes) {
    if (c < 0 || c >= kNumActions) throw MappingError("action code " + std::to_string(c) + " out of range");
    out.push_back(static_cast<Action>(c));
  }
  return out;
}

namespace {

struct CompactParser {
  std::string_view s;
  std::size_t i = 0;

  void skip() {
    while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == ',')) ++i;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(why + " at offset " + std::to_string(i) + " in '" + std::string(s) + "'");
  }

  // Optional "(k)" directly after an item.
  int count() {
    if (i >= s.size() || s[i] != '(') return 1;
    const std::size_t open = i++;
    int k = 0;
    bool digits = false;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      k = k * 10 + (s[i++] - '0');
      digits = true;
    }
    if (!digits || i >= s.size() || s[i] != ')') {
      i = open;
      fail("expected a repeat count");
    }
    ++i;
    return k;
  }

  ActionSequence sequence(bool nested) {
    ActionSequence out;
    for (;;) {
      skip();
      if (i >= s.size()) {
        if (nested) fail("unclosed group");
        return out;
      }
      if (s[i] == ')') {
        if (!nested) fail("unbalanced ')'");
        ++i;
        return out;
      }
      ActionSequence item;
      if (s[i] == '(') {
        ++i;
        item = sequence(true);
      } else {
        const std::size_t start = i;
        while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
        if (i == start) fail("expected an action name");
        item = {action_from_name(s.substr(start, i - start))};
      }
      const int k = count();
      for (int r = 0; r < k; ++r) out.insert(out.end(), item.begin(), item.end());
    }
  }
};

template <class T, class Name>
std::string format_runs(const std::vector<T>& seq, Name name) {
  std::string out;
  for (std::size_t i = 0; i < seq.size();) {
    std::size_t j = i;
    while (j < seq.size() && seq[j] == seq[i]) ++j;
    if (!out.empty()) out += ' ';
    out += name(seq[i]);
    if (j - i > 1) out += "(" + std::to_string(j - i) + ")";
    i = j;
  }
  return out;
}

}  // namespace

ActionSequence parse_compact_actions(std::string_view text) {
  CompactParser p{text};
  return p.sequence(false);
}

std::string format_compact(const ActionSequence& seq) {
  return format_runs(seq, [](Action a) { return std::string(action_name(a)); });
}

std::string format_compact(const std::vector<int>& codes) {
  return format_runs(codes, [](int c) { return std::to_string(c); });
}

}  // namespace gridicl
