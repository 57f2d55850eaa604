#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gridicl/dataset.hpp"
#include "gridicl/icl.hpp"
#include "gridicl/metrics.hpp"
#include "gridicl/supports.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gridicl;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(GRIDICL_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json manifest(const fs::path& p) { return json::parse(slurp(p)); }

// One scratch directory per process, with a small generated dataset.
struct Scratch {
  fs::path dir;
  ~Scratch() {
    std::error_code ec;
    if (!dir.empty()) fs::remove_all(dir, ec);
  }
} scratch;

const fs::path& work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("gridicl_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    const auto r = run("gen-data --seed 7 --train 1000 --per-split 100 --out " + (d / "data").string());
    REQUIRE(r.code == 0);
    scratch.dir = d;
    return d;
  }();
  return dir;
}

std::string data(const char* name) { return (work() / "data" / name).string(); }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("gen-data --train 10").code == 2);
  CHECK(run("no-such-command").code == 2);
  CHECK(run("").code == 2);
  CHECK(run("gen-data --seed 1 --objects 3..x --out " + (work() / "bad").string()).code == 2);
  CHECK(run("gen-data --seed 1 --objects 0..3 --out " + (work() / "bad").string()).code == 2);
  CHECK(run("gen-supports --strategy bogus --input " + data("h.jsonl") + " --out x --seed 1").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("gen-data writes every split and a stable manifest") {
  const auto m = manifest(work() / "data" / "manifest.json");
  CHECK(m["counts"]["TRAIN"] == 1000);
  for (const char* s : {"A", "B", "C", "D", "E", "F", "G", "H"}) CHECK(m["counts"][s] == 100);
  CHECK(m["seed"] == 7);

  std::size_t records = 0;
  for (const auto& f : fs::directory_iterator(work() / "data")) {
    if (f.path().extension() != ".jsonl") continue;
    const auto d = read_dataset(f.path().string());
    records += d.examples.size();
    for (const auto& e : d.examples) {
      CHECK(e.state.grid_size == 6);
      CHECK(e.state.objects.size() >= 3);
      CHECK(e.state.objects.size() <= 10);
    }
  }
  CHECK(records == 1800);

  const auto again = work() / "again";
  REQUIRE(run("gen-data --seed 7 --train 1000 --per-split 100 --workers 3 --out " + again.string()).code == 0);
  CHECK(manifest(again / "manifest.json") == m);
  REQUIRE(run("gen-data --seed 8 --train 1000 --per-split 100 --out " + (work() / "other").string()).code == 0);
  CHECK(manifest(work() / "other" / "manifest.json")["digest"] != m["digest"]);
}

TEST_CASE("heuristic supports analyze to all ones") {
  const auto out = (work() / "heuristic.jsonl").string();
  REQUIRE(run("gen-supports --strategy heuristic --seed 1 --input " + data("h.jsonl") + " --out " + out).code == 0);
  const auto r = run("analyze --criteria --input " + out);
  REQUIRE(r.code == 0);
  const auto rows = json::parse(r.out)["criteria"];
  for (int i = 1; i <= CriteriaReport::kRows; ++i) CHECK(rows[std::string(CriteriaReport::row_name(i))] == 1.0);
  CHECK(run("analyze --criteria --input " + data("h.jsonl")).code == 2);
}

TEST_CASE("demogen keeps at most n supports and output ignores the worker count") {
  const auto one = (work() / "dg1.jsonl").string(), three = (work() / "dg3.jsonl").string();
  const std::string common = "gen-supports --strategy demogen --solver oracle --k 2048 --n 16 --seed 4 --limit 40 --input " +
                             data("h.jsonl") + " --train " + data("train.jsonl");
  REQUIRE(run(common + " --out " + one).code == 0);
  REQUIRE(run(common + " --workers 3 --out " + three).code == 0);
  CHECK(slurp(one) == slurp(three));
  CHECK(manifest(one + ".manifest.json")["digest"] == manifest(three + ".manifest.json")["digest"]);
  std::ifstream in(one);
  const auto recs = read_query_supports(in);
  CHECK(recs.size() == 40);
  for (const auto& r : recs) CHECK(r.supports.supports.size() <= 16);
  const auto v = json::parse(run("analyze --validity --input " + one).out)["validity"];
  CHECK(v["correct_given_valid"] == 1.0);
}

TEST_CASE("covr with every cell probed matches a single-cell index") {
  const std::string common = "gen-supports --strategy covr --seed 2 --limit 30 --pca-samples 500 --input " +
                             data("a.jsonl") + " --train " + data("train.jsonl");
  const auto full = (work() / "covr_full.jsonl").string(), flat = (work() / "covr_flat.jsonl").string();
  REQUIRE(run(common + " --cells 16 --probes 16 --out " + full).code == 0);
  REQUIRE(run(common + " --cells 1 --probes 1 --out " + flat).code == 0);
  std::ifstream a(full), b(flat);
  const auto ra = read_query_supports(a), rb = read_query_supports(b);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].supports.supports == rb[i].supports.supports);
}

TEST_CASE("gandr needs a helper and an absent external solver is an external error") {
  const std::string common = "gen-supports --strategy gandr --seed 1 --limit 5 --cells 8 --input " + data("h.jsonl") +
                             " --train " + data("train.jsonl") + " --out " + (work() / "g.jsonl").string();
  CHECK(run(common).code == 2);
  CHECK(run(common + " --solver none").code == 0);
  CHECK(run(common + " --solver external --solver-cmd /nonexistent/solver").code == 4);
}

TEST_CASE("external solver through the server matches the in-process oracle") {
  const std::string common = "gen-supports --strategy random --seed 9 --limit 25 --input " + data("c.jsonl");
  const auto in_proc = (work() / "rand_oracle.jsonl").string(), ext = (work() / "rand_ext.jsonl").string();
  REQUIRE(run(common + " --out " + in_proc).code == 0);
  REQUIRE(run(common + " --solver external --solver-cmd '" + std::string(GRIDICL_CLI) + " solver-server' --out " +
              ext).code == 0);
  CHECK(slurp(in_proc) == slurp(ext));
}

TEST_CASE("analyze reports nn-profile, patterns and zipf") {
  const auto prof = run("analyze --nn-profile --sample 50 --ranks 1,2,4,8,16,32,64,128,256,512 --input " +
                        data("a.jsonl") + " --train " + data("train.jsonl"));
  REQUIRE(prof.code == 0);
  double prev = 2;
  for (const auto& row : json::parse(prof.out)["nn_profile"]["profile"]) {
    CHECK(row["mean_similarity"].get<double>() <= prev);
    prev = row["mean_similarity"].get<double>();
  }

  auto freq = [&](const std::string& flags) {
    const auto r = run("analyze --input " + data("train.jsonl") + " " + flags);
    REQUIRE(r.code == 0);
    return json::parse(r.out)["pattern"]["frequency"].get<double>();
  };
  CHECK(freq("--pattern H --permutations") >= freq("--pattern G"));
  CHECK(freq("--pattern H") == 0.0);  // pull while spinning is held out of TRAIN
  CHECK(run("analyze --input " + data("train.jsonl") + " --pattern 'WALK(' ").code == 2);

  const auto corpus = work() / "zipf.txt";
  {
    std::ofstream f(corpus);
    for (auto k : sample_zipf(1.3, 100000, 11)) f << 'w' << k << ' ';
  }
  const auto z = run("analyze --zipf " + corpus.string());
  REQUIRE(z.code == 0);
  CHECK(json::parse(z.out)["zipf"]["alpha"].get<double>() == doctest::Approx(1.3).epsilon(0.05 / 1.3));
  CHECK(run("analyze").code == 2);
}

TEST_CASE("export-icl is deterministic and decodable") {
  const auto in = (work() / "heuristic.jsonl").string();
  if (!fs::exists(in))
    REQUIRE(run("gen-supports --strategy heuristic --seed 1 --input " + data("h.jsonl") + " --out " + in).code == 0);
  const auto a = (work() / "icl_a.jsonl").string(), b = (work() / "icl_b.jsonl").string();
  REQUIRE(run("export-icl --seed 5 --input " + in + " --out " + a).code == 0);
  REQUIRE(run("export-icl --seed 5 --input " + in + " --out " + b).code == 0);
  CHECK(slurp(a) == slurp(b));
  std::ifstream sup(in), icl(a);
  const auto recs = read_query_supports(sup);
  std::string line;
  for (std::size_t i = 0; std::getline(icl, line); ++i) {
    REQUIRE(i < recs.size());
    CHECK(decode_icl_record(json::parse(line)).query_target == recs[i].query.actions);
  }
  CHECK(run("export-icl --input " + in + " --out " + a).code == 2);
  CHECK(run("export-icl --seed 5 --input " + data("h.jsonl") + " --out " + a).code == 3);
}

TEST_CASE("permute reproduces the table rows") {
  CHECK(run("permute --actions 'WALK(5) RTURN WALK(5)' --perm 0,5,2,1,3,4").out == "4(5) 3 4(5)\n");
  CHECK(run("permute --actions 'LTURN WALK(2) PUSH' --perm 1,0,5,3,4,2 --show-encoded").out == "3 5(2) 1\n3 2(2) 0\n");
  CHECK(run("permute --actions WALK --perm 0,0,1,2,3,4").code == 3);
  CHECK(run("permute --actions WALK").code == 2);
  CHECK(run("permute --actions WALK --seed 3").out == run("permute --actions WALK --seed 3").out);
}

TEST_CASE("paraphrase dry run reads canned replies") {
  const auto dir = work() / "replies";
  fs::create_directories(dir);
  const auto q = work() / "para_in.jsonl";
  {
    std::ofstream f(q);
    std::ifstream h(data("h.jsonl"));
    std::string line;
    std::getline(h, line);
    f << line << '\n';
  }
  const auto out = (work() / "para.jsonl").string();
  CHECK(run("paraphrase --input " + q.string() + " --out " + out + " --dry-run " + dir.string()).code == 4);

  std::ifstream h(q);
  const auto e = read_examples(h).at(0);
  std::string name = realize_text(e.instruction, '_');
  std::ofstream(dir / (name + ".txt")) << "1. Tug the object around.\n2) " << realize_text(e.instruction) << ".\n";
  const auto cache = (work() / "cache.json").string();
  REQUIRE(run("paraphrase --input " + q.string() + " --out " + out + " --cache " + cache + " --dry-run " +
              dir.string()).code == 0);
  const auto rec = json::parse(slurp(out));
  CHECK(rec["original"] == realize_text(e.instruction));
  CHECK(rec["paraphrases"].size() == 2);
  CHECK(rec["retained"] == json::array({false, true}));

  // Served from the cache once the replies are gone.
  fs::remove_all(dir);
  CHECK(run("paraphrase --input " + q.string() + " --out " + out + " --cache " + cache + " --dry-run " +
            dir.string()).code == 0);
}
