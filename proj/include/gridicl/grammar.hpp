#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridicl/world.hpp"

namespace gridicl {

enum class Verb : std::uint8_t { walk_to = 0, push = 1, pull = 2 };
enum class SizeWord : std::uint8_t { none = 0, small = 1, big = 2 };
enum class ColorWord : std::uint8_t { none = 0, red = 1, green = 2, blue = 3, yellow = 4 };
enum class Adverb : std::uint8_t {
  none = 0,
  while_spinning = 1,
  while_zigzagging = 2,
  hesitantly = 3,
  cautiously = 4,
};

inline constexpr int kNumVerbs = 3;
inline constexpr int kNumSizeWords = 3;
inline constexpr int kNumColorWords = 5;
inline constexpr int kNumAdverbs = 5;
inline constexpr int kNumInstructions = kNumVerbs * kNumSizeWords * kNumColorWords * kNumShapes * kNumAdverbs;

// "[verb] a [size] [color] [shape] [adverb]"; size, color and adverb optional.
struct Instruction {
  Verb verb = Verb::walk_to;
  SizeWord size = SizeWord::none;
  ColorWord color = ColorWord::none;
  Shape shape = Shape::circle;
  Adverb adverb = Adverb::none;

  auto operator<=>(const Instruction&) const = default;

  // Dense index in [0, kNumInstructions).
  int index() const;
  static Instruction from_index(int index);

  bool same_description(const Instruction& o) const {
    return size == o.size && color == o.color && shape == o.shape;
  }
};

using Tokens = std::vector<std::string>;

// Accepts adjectives in either order ("small yellow" or "yellow small").
// Unknown tokens raise LexicalError; misplaced tokens raise ParseError.
Instruction parse(const Tokens& tokens);
Instruction parse(std::string_view text);  // whitespace- or comma-separated

// verb, "a", size, color, shape, adverb with omissions.
Tokens realize(const Instruction& instr);
std::string realize_text(const Instruction& instr, char sep = ' ');

// All kNumInstructions instructions in index order.
std::vector<Instruction> all_instructions();

std::string_view verb_text(Verb v);      // "walk to"
std::string_view adverb_text(Adverb a);  // "while spinning", "" for none
std::string_view size_text(SizeWord s);
std::string_view color_text(ColorWord c);

// Word-symbol table: the 17 default codes plus yellow = 17. Multi-word adverbs
// ("while spinning") are a single symbol.
inline constexpr int kWordTableSize = 18;
std::string_view word_for_code(int code);
int code_for_word(std::string_view word);  // MappingError for unknown words
std::vector<int> encode_words(const Instruction& instr);
// Codes for a raw token list in its written order; "while" joins the next token.
std::vector<int> encode_tokens(const Tokens& tokens);

struct TargetResolution {
  ObjectSpec object;
  std::size_t index = 0;  // into state.objects
  bool unique = true;
};

// Candidates match shape and, if given, color. "small"/"big" keep the
// smallest/largest size among candidates and need a strictly larger/smaller
// candidate to compare against. Ties resolve to the lowest (y, x).
TargetResolution resolve_target(const Instruction& instr, const WorldState& state);
std::optional<TargetResolution> try_resolve_target(const Instruction& instr, const WorldState& state);
bool resolvable(const Instruction& instr, const WorldState& state);

}  // namespace gridicl
