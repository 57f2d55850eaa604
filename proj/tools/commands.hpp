#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gridicl::cli {

struct GenDataArgs {
  std::optional<std::uint64_t> seed;
  std::string out = "data";
  int train = 50000;
  int per_split = 2000;
  int grid = 6;
  std::string objects = "3..10";
  int workers = 1;
  std::vector<std::string> no_holdout;  // split letters let into TRAIN
  bool allow_static = false;
};
void gen_data(const GenDataArgs& args);

struct FitModelArgs {
  std::string train;
  std::string out;
  double smoothing = 0.1;
};
void fit_model(const FitModelArgs& args);

struct GenSupportsArgs {
  std::string strategy;
  std::string input;
  std::string train;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t limit = 0;
  int n = 16;
  int k = 2048;
  double mask_rate = 0.2;
  bool keep_invalid = true;
  std::string solver;  // oracle, external or none; empty picks oracle except for gandr
  std::string solver_cmd;
  int solver_timeout_ms = 30000;
  std::string model;
  double alpha = 0.125;
  double output_weight = 0.5;
  int cells = 512;
  int probes = 10;
  int neighbours = 128;
  int pca_dim = 320;
  std::size_t pca_samples = 10000;
  int workers = 1;
};
void gen_supports(const GenSupportsArgs& args);

struct AnalyzeArgs {
  std::string input;
  std::string train;
  std::string out;
  bool criteria = false;
  bool validity = false;
  bool nn_profile = false;
  std::string ranks;
  std::size_t sample = 1000;
  std::uint64_t seed = 0;
  bool ivf = false;
  int cells = 512;
  int probes = 10;
  bool zipf = false;
  std::string zipf_corpus;  // empty: realized instructions of the input
  std::string pattern;
  bool permutations = false;
  bool diversity = false;
};
void analyze(const AnalyzeArgs& args);

struct ExportIclArgs {
  std::string input;
  std::string out;
  std::string policy = "permute";
  std::optional<std::uint64_t> seed;
  bool permute_words = false;
};
void export_icl(const ExportIclArgs& args);

struct PermuteArgs {
  std::string actions;
  std::string words;
  std::string perm;
  std::optional<std::uint64_t> seed;
  bool show_encoded = false;
};
void permute(const PermuteArgs& args);

struct ParaphraseArgs {
  std::string input;
  std::string out;
  std::string mode = "simple";
  bool templates = false;
  std::string cache;
  std::string dry_run;
  std::string synonyms;
  std::optional<double> temperature;  // unset: the endpoint's default
  int workers = 4;
  int retries = 3;
};
void paraphrase(const ParaphraseArgs& args);

void solver_server();

}  // namespace gridicl::cli
