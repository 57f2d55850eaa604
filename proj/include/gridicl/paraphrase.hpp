#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gridicl/grammar.hpp"

namespace gridicl {

enum class PromptMode : std::uint8_t { simple, adverb, relational, reascan };
std::string_view prompt_mode_name(PromptMode m);
PromptMode prompt_mode_from_name(std::string_view name);

inline constexpr int kPromptExamples = 10;
inline constexpr int kRequestedParaphrases = 25;
inline constexpr std::string_view kObjectPlaceholder = "[OBJECT]";

struct PromptTemplate {
  std::string seed_instruction;  // the instruction the examples paraphrase
  std::vector<std::string> examples;
};
const PromptTemplate& prompt_template(PromptMode m);

// Header line, numbered examples, then the request for 25 statements about
// `query`. Double quotes in the query are backslash-escaped.
std::string build_prompt(PromptMode mode, std::string_view query);

// Replaces the size/color/shape words of `instr` by the placeholder.
std::string template_text(const Instruction& instr);
// Fills the placeholder of a paraphrased template with an object description.
std::string fill_template(std::string_view paraphrase, const Instruction& instr);

// Items of lines shaped "N. text" or "N) text", in order, trailing period
// removed. ParseError when none are found.
std::vector<std::string> parse_response(std::string_view text);

// Extra surface forms accepted for a word, e.g. {"square": {"box"}}.
using SynonymTable = std::map<std::string, std::vector<std::string>, std::less<>>;

// True when the original's size word, color word and shape word (each, if
// present, or a synonym) occur as whole words in the paraphrase, ignoring case.
bool check_retention(const Instruction& original, std::string_view paraphrase, const SynonymTable& synonyms = {});

struct ParaphraseRecord {
  std::string original;
  std::vector<std::string> paraphrases;
  std::vector<bool> retained;

  nlohmann::json to_json() const;
};

class ParaphraseTransport {
 public:
  virtual ~ParaphraseTransport() = default;
  // Returns the model's reply text. TransportError on failure.
  virtual std::string complete(const std::string& prompt) = 0;
};

// Chat-completion endpoint over HTTP(S): posts
// {"model":..,"messages":[{"role":"user","content":prompt}]} and reads
// choices[0].message.content.
class HttpTransport : public ParaphraseTransport {
 public:
  struct Options {
    std::string endpoint;  // e.g. https://host/v1/chat/completions
    std::string api_key;
    std::string model;
    std::optional<double> temperature;
    std::chrono::seconds timeout{60};
  };
  explicit HttpTransport(Options options);
  // PARA_ENDPOINT, PARA_API_KEY and optionally PARA_MODEL. ConfigError when unset.
  static HttpTransport from_env();
  std::string complete(const std::string& prompt) override;
  const Options& options() const { return options_; }

 private:
  Options options_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
};

// Canned replies for tests and offline runs.
class FakeTransport : public ParaphraseTransport {
 public:
  explicit FakeTransport(std::function<std::string(const std::string&)> reply) : reply_(std::move(reply)) {}
  std::string complete(const std::string& prompt) override;
  int calls() const;

 private:
  std::function<std::string(const std::string&)> reply_;
  mutable std::mutex mu_;
  int calls_ = 0;
};

// Query -> parsed paraphrases, persisted as JSON so interrupted runs resume.
class ParaphraseCache {
 public:
  ParaphraseCache() = default;
  static ParaphraseCache load(const std::string& path);  // missing file -> empty
  void save(const std::string& path) const;
  std::optional<std::vector<std::string>> get(const std::string& query) const;
  void put(const std::string& query, std::vector<std::string> paraphrases);
  nlohmann::json& meta() { return meta_; }
  std::size_t size() const;

 private:
  std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
  std::map<std::string, std::vector<std::string>> entries_;
  nlohmann::json meta_ = nlohmann::json::object();
};

struct ParaphraseOptions {
  PromptMode mode = PromptMode::simple;
  bool use_templates = false;  // prompt with the object replaced by the placeholder
  int workers = 4;
  int retries = 3;
  std::chrono::milliseconds backoff{500};  // doubled after each failed attempt
  SynonymTable synonyms;
};

// Paraphrases every instruction, reusing and filling `cache`. With
// use_templates, instructions sharing a template share one request.
std::vector<ParaphraseRecord> paraphrase_all(const std::vector<Instruction>& queries, ParaphraseTransport& transport,
                                             ParaphraseCache& cache, const ParaphraseOptions& options);

}  // namespace gridicl
