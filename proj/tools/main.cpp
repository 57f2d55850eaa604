#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gridicl/errors.hpp"

namespace {

int exit_code(gridicl::ErrorCategory c) {
  switch (c) {
    case gridicl::ErrorCategory::usage: return 2;
    case gridicl::ErrorCategory::data: return 3;
    case gridicl::ErrorCategory::external: return 4;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gridicl::cli;
  CLI::App app{"Grid-world instruction data, support sets and analysis"};
  app.set_version_flag("--version", GRIDICL_VERSION);
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Generate TRAIN and held-out splits");
  gen->add_option("--seed", gd.seed, "Global seed (required)");
  gen->add_option("--out", gd.out, "Output directory")->capture_default_str();
  gen->add_option("--train", gd.train, "TRAIN examples")->capture_default_str()->check(CLI::NonNegativeNumber);
  gen->add_option("--per-split", gd.per_split, "Examples per held-out split")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--grid", gd.grid, "Grid side length")->capture_default_str();
  gen->add_option("--objects", gd.objects, "Objects per state, N or LO..HI")->capture_default_str();
  gen->add_option("--workers", gd.workers, "Generation threads")->capture_default_str();
  gen->add_option("--no-holdout", gd.no_holdout, "Let a split's examples into TRAIN (B..H, repeatable)");
  gen->add_flag("--allow-static", gd.allow_static, "Keep push/pull examples whose object cannot move");
  gen->callback([&] { gen_data(gd); });

  FitModelArgs fm;
  auto* fit = app.add_subcommand("fit-model", "Fit the instruction infill model on TRAIN");
  fit->add_option("--train", fm.train, "TRAIN examples")->required();
  fit->add_option("--out", fm.out, "Model JSON")->required();
  fit->add_option("--smoothing", fm.smoothing, "Add-k smoothing")->capture_default_str();
  fit->callback([&] { fit_model(fm); });

  GenSupportsArgs gs;
  auto* sup = app.add_subcommand("gen-supports", "Build a support set for every query");
  sup->add_option("--strategy", gs.strategy, "heuristic, random, other_states, demogen, covr or gandr")->required();
  sup->add_option("--input", gs.input, "Query examples")->required();
  sup->add_option("--train", gs.train, "TRAIN examples (retrieval corpus, model fit)");
  sup->add_option("--out", gs.out, "Output JSONL")->required();
  sup->add_option("--seed", gs.seed, "Global seed (required)");
  sup->add_option("--limit", gs.limit, "Use only the first N queries");
  sup->add_option("--n", gs.n, "Supports per query")->capture_default_str();
  sup->add_option("--k", gs.k, "DemoGen infill samples")->capture_default_str()->check(CLI::PositiveNumber);
  sup->add_option("--mask-rate", gs.mask_rate, "DemoGen slot mask rate")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sup->add_flag("--keep-invalid,!--replace-invalid", gs.keep_invalid,
                "Keep declined DemoGen instructions as unsolved supports (default) or replace them");
  sup->add_option("--solver", gs.solver, "oracle, external or none");
  sup->add_option("--solver-cmd", gs.solver_cmd, "Command line for --solver external");
  sup->add_option("--solver-timeout", gs.solver_timeout_ms, "External solver timeout in ms")->capture_default_str();
  sup->add_option("--model", gs.model, "Fitted model from fit-model");
  sup->add_option("--alpha", gs.alpha, "CovR instruction weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  sup->add_option("--output-weight", gs.output_weight, "GandR output weight")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sup->add_option("--cells", gs.cells, "IVF cells")->capture_default_str()->check(CLI::PositiveNumber);
  sup->add_option("--probes", gs.probes, "IVF cells probed per query")->capture_default_str()->check(CLI::PositiveNumber);
  sup->add_option("--neighbours", gs.neighbours, "Candidates retrieved before reranking")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sup->add_option("--pca-dim", gs.pca_dim, "CovR state projection size")->capture_default_str();
  sup->add_option("--pca-samples", gs.pca_samples, "States used to fit the projection (0: all)")
      ->capture_default_str();
  sup->add_option("--workers", gs.workers, "Threads")->capture_default_str();
  sup->callback([&] { gen_supports(gs); });

  AnalyzeArgs an;
  auto* ana = app.add_subcommand("analyze", "Criteria, validity, nn-profile, zipf, pattern and diversity reports");
  ana->add_option("--input", an.input, "Examples or support JSONL");
  ana->add_option("--train", an.train, "TRAIN examples for --nn-profile");
  ana->add_option("--out", an.out, "Report JSON (default stdout)");
  ana->add_flag("--criteria", an.criteria, "Support criteria table");
  ana->add_flag("--validity", an.validity, "Valid/correct fractions of supports");
  ana->add_flag("--nn-profile", an.nn_profile, "Mean similarity to the r-th nearest TRAIN state");
  ana->add_option("--ranks", an.ranks, "Comma-separated ranks (default 1,2,4,...,8192)");
  ana->add_option("--sample", an.sample, "Input states sampled for --nn-profile")->capture_default_str();
  ana->add_option("--seed", an.seed, "Sampling seed")->capture_default_str();
  ana->add_flag("--ivf", an.ivf, "Approximate neighbours with an IVF index");
  ana->add_option("--cells", an.cells, "IVF cells")->capture_default_str();
  ana->add_option("--probes", an.probes, "IVF probes")->capture_default_str();
  auto* zipf = ana->add_option("--zipf", an.zipf_corpus, "Zipf fit of a text file, or of the input instructions");
  zipf->expected(0, 1);
  ana->add_option("--pattern", an.pattern, "H, D, G or an action pattern");
  ana->add_flag("--permutations", an.permutations, "Let pattern symbols stand for any actions");
  ana->add_flag("--diversity", an.diversity, "Support diversity and relevance");
  ana->callback([&] {
    an.zipf = zipf->count() > 0;
    analyze(an);
  });

  ExportIclArgs ex;
  auto* exp = app.add_subcommand("export-icl", "Write in-context training records");
  exp->add_option("--input", ex.input, "Support JSONL")->required();
  exp->add_option("--out", ex.out, "Output JSONL")->required();
  exp->add_option("--policy", ex.policy, "identity or permute")->capture_default_str();
  exp->add_option("--seed", ex.seed, "Permutation seed (required)");
  exp->add_flag("--permute-words", ex.permute_words, "Also permute instruction word codes");
  exp->callback([&] { export_icl(ex); });

  PermuteArgs pm;
  auto* per = app.add_subcommand("permute", "Encode and permute an action or word sequence");
  per->add_option("--actions", pm.actions, "Actions in run notation, e.g. \"WALK(5) RTURN WALK(5)\"");
  per->add_option("--words", pm.words, "Instruction text");
  per->add_option("--perm", pm.perm, "Comma-separated image of each code");
  per->add_option("--seed", pm.seed, "Sample the permutation from a seed");
  per->add_flag("--show-encoded", pm.show_encoded, "Print the unpermuted encoding first");
  per->callback([&] { permute(pm); });

  ParaphraseArgs pa;
  auto* par = app.add_subcommand("paraphrase", "Paraphrase instructions through a chat-completion endpoint");
  par->add_option("--input", pa.input, "Examples or support JSONL")->required();
  par->add_option("--out", pa.out, "Output JSONL")->required();
  par->add_option("--mode", pa.mode, "simple, adverb, relational or reascan")->capture_default_str();
  par->add_flag("--templates", pa.templates, "Paraphrase object-free templates");
  par->add_option("--cache", pa.cache, "Cache file, read and updated");
  par->add_option("--dry-run", pa.dry_run, "Read replies from DIR instead of the network");
  par->add_option("--synonyms", pa.synonyms, "JSON map of accepted synonyms");
  par->add_option("--temperature", pa.temperature, "Sampling temperature (default: the endpoint's)");
  par->add_option("--workers", pa.workers, "Concurrent requests")->capture_default_str();
  par->add_option("--retries", pa.retries, "Attempts per request")->capture_default_str();
  par->callback([&] { paraphrase(pa); });

  auto* srv = app.add_subcommand("solver-server", "Serve the oracle over the line protocol on stdin/stdout");
  srv->callback([] { solver_server(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const gridicl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
