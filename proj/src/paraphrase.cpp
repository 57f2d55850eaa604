#include "gridicl/paraphrase.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "gridicl/errors.hpp"

namespace gridicl {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kModeNames = {"simple", "adverb", "relational", "reascan"};

const std::array<PromptTemplate, 4>& templates() {
  static const std::array<PromptTemplate, 4> t = {{
      {"push a red square",
       {"Push the red square", "Move a red square", "Shove the red square", "Go to the red square and shove it",
        "Go to the red square and push it", "Walk to the red square and push it", "Find a red square and push it",
        "Locate a red square and push it", "Get to the red square and move it along",
        "Walk up to the red square and then really push it"}},
      {"pull a blue circle hesitantly",
       {"Hesitantly pull the blue circle", "Pull a blue circle, pausing as you go",
        "Walk over to the blue circle with some hesitation and pull it", "Pull the blue circle but take it slow",
        "Reluctantly drag the blue circle", "Go to the blue circle and pull it, stopping every step",
        "Tug the blue circle in a hesitant way", "Approach the blue circle haltingly and pull it",
        "With small pauses, pull the blue circle", "Pull the blue circle while hesitating"}},
      {"walk to the green cylinder next to the red square",
       {"Go to the green cylinder beside the red square", "Walk over to the green cylinder by the red square",
        "Find the green cylinder near the red square and walk to it",
        "Head to the green cylinder that sits next to the red square",
        "Move to the green cylinder alongside the red square", "Approach the green cylinder close to the red square",
        "Walk up to the green cylinder adjacent to the red square",
        "Make your way to the green cylinder by the red square",
        "Get to the green cylinder that is beside the red square", "Travel to the green cylinder near the red square"}},
      {"push the small yellow circle that is in the same row as a big blue square",
       {"Push the small yellow circle sharing a row with a big blue square",
        "Shove the small yellow circle in the same row as the big blue square",
        "Find the small yellow circle on the big blue square's row and push it",
        "Push the little yellow circle lined up horizontally with a big blue square",
        "Go to the small yellow circle in the big blue square's row and push it",
        "Move the small yellow circle that shares its row with a big blue square",
        "Locate the small yellow circle level with the big blue square and shove it",
        "Push the small yellow circle located in the row of a big blue square",
        "Walk to the small yellow circle in line with a big blue square and push it",
        "Give the small yellow circle in the big blue square's row a push"}},
  }};
  return t;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::set<std::string> words_of(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.insert(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(cur);
  return out;
}

// The object words of an instruction in realized order.
std::string object_text(const Instruction& instr) {
  std::string out;
  for (auto w : {size_text(instr.size), color_text(instr.color), shape_name(instr.shape)}) {
    if (w.empty()) continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::string_view prompt_mode_name(PromptMode m) { return kModeNames.at(static_cast<std::size_t>(m)); }

PromptMode prompt_mode_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i)
    if (kModeNames[i] == name) return static_cast<PromptMode>(i);
  throw ConfigError("unknown prompt mode: " + std::string(name));
}

const PromptTemplate& prompt_template(PromptMode m) { return templates().at(static_cast<std::size_t>(m)); }

std::string build_prompt(PromptMode mode, std::string_view query) {
  const auto& t = prompt_template(mode);
  std::string escaped;
  for (char c : query) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c;
  }
  std::ostringstream out;
  out << "Here are " << kPromptExamples << " similar statements to “" << t.seed_instruction << "\"\n\n";
  for (std::size_t i = 0; i < t.examples.size(); ++i) out << i + 1 << ". " << t.examples[i] << "\n";
  out << "\nCan you generate " << kRequestedParaphrases << " similar statements for “" << escaped
      << "” in English?\n";
  return out.str();
}

std::string template_text(const Instruction& instr) {
  std::string out(verb_text(instr.verb));
  out += " a ";
  out += kObjectPlaceholder;
  if (instr.adverb != Adverb::none) {
    out += ' ';
    out += adverb_text(instr.adverb);
  }
  return out;
}

std::string fill_template(std::string_view paraphrase, const Instruction& instr) {
  std::string out(paraphrase);
  const std::string obj = object_text(instr);
  for (auto pos = out.find(kObjectPlaceholder); pos != std::string::npos;
       pos = out.find(kObjectPlaceholder, pos + obj.size()))
    out.replace(pos, kObjectPlaceholder.size(), obj);
  return out;
}

std::vector<std::string> parse_response(std::string_view text) {
  static const std::regex item(R"(^\s*(\d+)\s*[.)]\s+(.*?)\s*$)");
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, item)) continue;
    std::string body = m[2];
    while (!body.empty() && body.back() == '.') body.pop_back();
    if (!body.empty()) out.push_back(body);
  }
  if (out.empty()) throw ParseError("response contains no numbered items");
  return out;
}

bool check_retention(const Instruction& original, std::string_view paraphrase, const SynonymTable& synonyms) {
  const auto words = words_of(paraphrase);
  auto present = [&](std::string_view w) {
    if (w.empty()) return true;
    if (words.count(std::string(w))) return true;
    const auto it = synonyms.find(w);
    if (it == synonyms.end()) return false;
    for (const auto& alt : it->second) {
      // Multi-word synonyms must appear as a phrase.
      if (alt.find(' ') == std::string::npos ? words.count(lower(alt)) > 0
                                             : (" " + lower(paraphrase) + " ").find(" " + lower(alt) + " ") != std::string::npos)
        return true;
    }
    return false;
  };
  return present(size_text(original.size)) && present(color_text(original.color)) &&
         present(shape_name(original.shape));
}

json ParaphraseRecord::to_json() const {
  return {{"original", original}, {"paraphrases", paraphrases}, {"retained", retained}};
}

HttpTransport::HttpTransport(Options options) : options_(std::move(options)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(options_.endpoint, m, url)) throw ConfigError("paraphrase endpoint must be an http(s) URL");
  base_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : "/";
}

HttpTransport HttpTransport::from_env() {
  const char* endpoint = std::getenv("PARA_ENDPOINT");
  const char* key = std::getenv("PARA_API_KEY");
  if (!endpoint || !*endpoint) throw ConfigError("PARA_ENDPOINT is not set");
  if (!key || !*key) throw ConfigError("PARA_API_KEY is not set");
  Options o;
  o.endpoint = endpoint;
  o.api_key = key;
  if (const char* model = std::getenv("PARA_MODEL")) o.model = model;
  return HttpTransport(o);
}

std::string HttpTransport::complete(const std::string& prompt) {
  httplib::Client client(base_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  json body = {{"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  if (!options_.model.empty()) body["model"] = options_.model;
  if (options_.temperature) body["temperature"] = *options_.temperature;
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
  const auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw TransportError("request to " + base_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
  try {
    const auto j = json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected endpoint reply: ") + e.what());
  }
}

std::string FakeTransport::complete(const std::string& prompt) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  return reply_(prompt);
}

int FakeTransport::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

ParaphraseCache ParaphraseCache::load(const std::string& path) {
  ParaphraseCache c;
  std::ifstream in(path);
  if (!in) return c;
  json j;
  try {
    j = json::parse(in);
    c.meta_ = j.value("meta", json::object());
    for (const auto& [k, v] : j.at("entries").items()) c.entries_[k] = v.get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ImportError("cache " + path + ": " + e.what());
  }
  return c;
}

void ParaphraseCache::save(const std::string& path) const {
  std::lock_guard lock(*mu_);
  json j = {{"meta", meta_}, {"entries", entries_}};
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ExportError("cannot write " + tmp);
    out << j.dump(1) << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ExportError("cannot replace " + path);
}

std::optional<std::vector<std::string>> ParaphraseCache::get(const std::string& query) const {
  std::lock_guard lock(*mu_);
  const auto it = entries_.find(query);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ParaphraseCache::put(const std::string& query, std::vector<std::string> paraphrases) {
  std::lock_guard lock(*mu_);
  entries_[query] = std::move(paraphrases);
}

std::size_t ParaphraseCache::size() const {
  std::lock_guard lock(*mu_);
  return entries_.size();
}

std::vector<ParaphraseRecord> paraphrase_all(const std::vector<Instruction>& queries, ParaphraseTransport& transport,
                                             ParaphraseCache& cache, const ParaphraseOptions& options) {
  if (options.workers < 1 || options.retries < 0) throw ConfigError("paraphrase needs workers >= 1 and retries >= 0");
  std::vector<std::string> keys;
  for (const auto& q : queries) keys.push_back(options.use_templates ? template_text(q) : realize_text(q));
  std::vector<std::string> todo;
  for (const auto& k : std::set<std::string>(keys.begin(), keys.end()))
    if (!cache.get(k)) todo.push_back(k);

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= todo.size()) return;
      {
        std::lock_guard lock(err_mu);
        if (failure) return;
      }
      auto delay = options.backoff;
      for (int attempt = 0;; ++attempt) {
        try {
          cache.put(todo[i], parse_response(transport.complete(build_prompt(options.mode, todo[i]))));
          break;
        } catch (const Error&) {
          if (attempt >= options.retries) {
            std::lock_guard lock(err_mu);
            if (!failure) failure = std::current_exception();
            return;
          }
          std::this_thread::sleep_for(delay);
          delay *= 2;
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(options.workers, static_cast<int>(todo.size()));
  for (int w = 0; w < n; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<ParaphraseRecord> out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    ParaphraseRecord r;
    r.original = realize_text(queries[i]);
    const auto cached = cache.get(keys[i]);
    for (const auto& p : *cached) {
      r.paraphrases.push_back(options.use_templates ? fill_template(p, queries[i]) : p);
      r.retained.push_back(check_retention(queries[i], r.paraphrases.back(), options.synonyms));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace gridicl
