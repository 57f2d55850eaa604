#include "gridicl/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "gridicl/errors.hpp"

namespace gridicl {

namespace {

const std::set<std::string, std::less<>> kLexicon = {
    "a",     "big",  "blue", "cautiously", "circle", "cylinder", "green", "hesitantly", "pull",
    "push",  "red",  "small", "square",    "to",     "walk",     "while", "spinning",   "zigzagging",
    "yellow"};

constexpr std::array<std::string_view, kWordTableSize> kWordTable = {
    "a",     "big",  "blue", "cautiously", "circle", "cylinder",       "green",            "hesitantly", "pull",
    "push",  "red",  "small", "square",    "to",     "walk", "while spinning", "while zigzagging", "yellow"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string describe(const Tokens& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

int Instruction::index() const {
  int i = static_cast<int>(verb);
  i = i * kNumSizeWords + static_cast<int>(size);
  i = i * kNumColorWords + static_cast<int>(color);
  i = i * kNumShapes + static_cast<int>(shape);
  i = i * kNumAdverbs + static_cast<int>(adverb);
  return i;
}

Instruction Instruction::from_index(int index) {
  Instruction in;
  in.adverb = static_cast<Adverb>(index % kNumAdverbs);
  index /= kNumAdverbs;
  in.shape = static_cast<Shape>(index % kNumShapes);
  index /= kNumShapes;
  in.color = static_cast<ColorWord>(index % kNumColorWords);
  index /= kNumColorWords;
  in.size = static_cast<SizeWord>(index % kNumSizeWords);
  index /= kNumSizeWords;
  in.verb = static_cast<Verb>(index);
  return in;
}

std::string_view verb_text(Verb v) {
  switch (v) {
    case Verb::walk_to: return "walk to";
    case Verb::push: return "push";
    case Verb::pull: return "pull";
  }
  return "";
}

std::string_view adverb_text(Adverb a) {
  switch (a) {
    case Adverb::none: return "";
    case Adverb::while_spinning: return "while spinning";
    case Adverb::while_zigzagging: return "while zigzagging";
    case Adverb::hesitantly: return "hesitantly";
    case Adverb::cautiously: return "cautiously";
  }
  return "";
}

std::string_view size_text(SizeWord s) {
  switch (s) {
    case SizeWord::none: return "";
    case SizeWord::small: return "small";
    case SizeWord::big: return "big";
  }
  return "";
}

std::string_view color_text(ColorWord c) {
  switch (c) {
    case ColorWord::none: return "";
    case ColorWord::red: return "red";
    case ColorWord::green: return "green";
    case ColorWord::blue: return "blue";
    case ColorWord::yellow: return "yellow";
  }
  return "";
}

Instruction parse(const Tokens& raw) {
  Tokens tokens;
  tokens.reserve(raw.size());
  for (const auto& t : raw) {
    auto l = lower(t);
    if (!kLexicon.count(l)) throw LexicalError("unknown token '" + t + "'");
    tokens.push_back(std::move(l));
  }
  const auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(why + " in '" + describe(tokens) + "'");
  };

  Instruction in;
  std::size_t i = 0;
  const auto at = [&](std::string_view w) { return i < tokens.size() && tokens[i] == w; };

  if (at("walk")) {
    ++i;
    if (!at("to")) throw fail("expected 'to' after 'walk'");
    ++i;
    in.verb = Verb::walk_to;
  } else if (at("push")) {
    ++i;
    in.verb = Verb::push;
  } else if (at("pull")) {
    ++i;
    in.verb = Verb::pull;
  } else {
    throw fail("expected a verb");
  }
  if (!at("a")) throw fail("expected 'a' after the verb");
  ++i;

  bool have_size = false, have_color = false;
  while (i < tokens.size()) {
    const auto& t = tokens[i];
    if (t == "small" || t == "big") {
      if (have_size) throw fail("repeated size word");
      in.size = t == "small" ? SizeWord::small : SizeWord::big;
      have_size = true;
    } else if (t == "red" || t == "green" || t == "blue" || t == "yellow") {
      if (have_color) throw fail("repeated color word");
      in.color = static_cast<ColorWord>(1 + static_cast<int>(color_from_name(t)));
      have_color = true;
    } else {
      break;
    }
    ++i;
  }
  if (i >= tokens.size()) throw fail("missing shape");
  if (tokens[i] != "circle" && tokens[i] != "square" && tokens[i] != "cylinder")
    throw fail("expected a shape, got '" + tokens[i] + "'");
  in.shape = shape_from_name(tokens[i]);
  ++i;

  if (i < tokens.size()) {
    if (at("while")) {
      ++i;
      if (at("spinning")) {
        in.adverb = Adverb::while_spinning;
      } else if (at("zigzagging")) {
        in.adverb = Adverb::while_zigzagging;
      } else {
        throw fail("expected 'spinning' or 'zigzagging' after 'while'");
      }
    } else if (at("hesitantly")) {
      in.adverb = Adverb::hesitantly;
    } else if (at("cautiously")) {
      in.adverb = Adverb::cautiously;
    } else {
      throw fail("unexpected '" + tokens[i] + "' after the shape");
    }
    ++i;
  }
  if (i != tokens.size()) throw fail("trailing tokens");
  return in;
}

Instruction parse(std::string_view text) {
  Tokens tokens;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == ',' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return parse(tokens);
}

Tokens realize(const Instruction& in) {
  Tokens out;
  switch (in.verb) {
    case Verb::walk_to: out = {"walk", "to"}; break;
    case Verb::push: out = {"push"}; break;
    case Verb::pull: out = {"pull"}; break;
  }
  out.emplace_back("a");
  if (in.size != SizeWord::none) out.emplace_back(size_text(in.size));
  if (in.color != ColorWord::none) out.emplace_back(color_text(in.color));
  out.emplace_back(shape_name(in.shape));
  switch (in.adverb) {
    case Adverb::none: break;
    case Adverb::while_spinning: out.insert(out.end(), {"while", "spinning"}); break;
    case Adverb::while_zigzagging: out.insert(out.end(), {"while", "zigzagging"}); break;
    case Adverb::hesitantly: out.emplace_back("hesitantly"); break;
    case Adverb::cautiously: out.emplace_back("cautiously"); break;
  }
  return out;
}

std::string realize_text(const Instruction& in, char sep) {
  const auto tokens = realize(in);
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::vector<Instruction> all_instructions() {
  std::vector<Instruction> out;
  out.reserve(kNumInstructions);
  for (int i = 0; i < kNumInstructions; ++i) out.push_back(Instruction::from_index(i));
  return out;
}

std::string_view word_for_code(int code) {
  if (code < 0 || code >= kWordTableSize) throw MappingError("word code out of range");
  return kWordTable[static_cast<std::size_t>(code)];
}

int code_for_word(std::string_view word) {
  for (int i = 0; i < kWordTableSize; ++i)
    if (kWordTable[static_cast<std::size_t>(i)] == word) return i;
  throw MappingError("word '" + std::string(word) + "' is not in the symbol table");
}

std::vector<int> encode_words(const Instruction& in) {
  std::vector<int> out;
  if (in.verb == Verb::walk_to) {
    out = {code_for_word("walk"), code_for_word("to")};
  } else {
    out = {code_for_word(verb_text(in.verb))};
  }
  out.push_back(code_for_word("a"));
  if (in.size != SizeWord::none) out.push_back(code_for_word(size_text(in.size)));
  if (in.color != ColorWord::none) out.push_back(code_for_word(color_text(in.color)));
  out.push_back(code_for_word(shape_name(in.shape)));
  if (in.adverb != Adverb::none) out.push_back(code_for_word(adverb_text(in.adverb)));
  return out;
}

std::vector<int> encode_tokens(const Tokens& tokens) {
  std::vector<int> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string w = lower(tokens[i]);
    if (w == "while" && i + 1 < tokens.size()) w += " " + lower(tokens[++i]);
    out.push_back(code_for_word(w));
  }
  return out;
}

namespace {

// Empty optional with a reason when unresolvable.
std::optional<TargetResolution> resolve_impl(const Instruction& in, const WorldState& state, std::string* why) {
  std::vector<std::size_t> cands;
  for (std::size_t i = 0; i < state.objects.size(); ++i) {
    const auto& o = state.objects[i];
    if (o.shape != in.shape) continue;
    if (in.color != ColorWord::none && static_cast<int>(o.color) + 1 != static_cast<int>(in.color)) continue;
    cands.push_back(i);
  }
  if (cands.empty()) {
    if (why) *why = "no object matches '" + realize_text(in) + "'";
    return std::nullopt;
  }

  if (in.size != SizeWord::none) {
    int lo = kMaxSize + 1, hi = kMinSize - 1;
    for (auto i : cands) {
      lo = std::min(lo, state.objects[i].size);
      hi = std::max(hi, state.objects[i].size);
    }
    if (lo == hi) {
      if (why)
        *why = "'" + std::string(size_text(in.size)) + "' has no size contrast among candidates for '" +
               realize_text(in) + "'";
      return std::nullopt;
    }
    const int keep = in.size == SizeWord::small ? lo : hi;
    std::erase_if(cands, [&](std::size_t i) { return state.objects[i].size != keep; });
  }

  const auto best = *std::min_element(cands.begin(), cands.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = state.objects[a].pos;
    const auto& pb = state.objects[b].pos;
    return std::tie(pa.y, pa.x) < std::tie(pb.y, pb.x);
  });
  return TargetResolution{state.objects[best], best, cands.size() == 1};
}

}  // namespace

TargetResolution resolve_target(const Instruction& in, const WorldState& state) {
  std::string why;
  auto r = resolve_impl(in, state, &why);
  if (!r) throw UnresolvableError(why);
  return *r;
}

std::optional<TargetResolution> try_resolve_target(const Instruction& in, const WorldState& state) {
  return resolve_impl(in, state, nullptr);
}

bool resolvable(const Instruction& instr, const WorldState& state) {
  return try_resolve_target(instr, state).has_value();
}

}  // namespace gridicl
