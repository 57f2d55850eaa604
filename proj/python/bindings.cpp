#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridicl/dataset.hpp"
#include "gridicl/errors.hpp"
#include "gridicl/icl.hpp"
#include "gridicl/metrics.hpp"
#include "gridicl/paraphrase.hpp"
#include "gridicl/permuter.hpp"
#include "gridicl/planner.hpp"
#include "gridicl/solver.hpp"
#include "gridicl/supports.hpp"
#include "gridicl/vector_index.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace gridicl;

// Structured values cross the boundary as JSON text in the same layout the
// CLI writes; the Python package turns them into dicts.

namespace {

using Matrix = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::vector<DenseVector> rows_of(const Matrix& m) {
  if (m.ndim() != 2) throw DimensionError("expected a 2-d array");
  const auto n = static_cast<std::size_t>(m.shape(0)), d = static_cast<std::size_t>(m.shape(1));
  std::vector<DenseVector> out(n, DenseVector(d));
  auto r = m.unchecked<2>();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i][j] = r(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j));
  return out;
}

DenseVector vector_of(const Matrix& v) {
  if (v.ndim() != 1) throw DimensionError("expected a 1-d array");
  return DenseVector(v.data(), v.data() + v.shape(0));
}

std::vector<std::pair<std::size_t, float>> hits(const std::vector<SearchHit>& h) {
  std::vector<std::pair<std::size_t, float>> out;
  for (const auto& x : h) out.emplace_back(x.id, x.score);
  return out;
}

Example example_of(const std::string& text) { return example_from_json(json::parse(text)); }
QuerySupports supports_of(const std::string& text) { return query_supports_from_json(json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grid-world instruction data, support sets and analysis";
  m.attr("__version__") = GRIDICL_VERSION;
  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("parse_instruction", [](const std::string& text) { return realize_text(parse(text)); },
        "Canonical text of an instruction");
  m.def("solve", [](const std::string& state, const std::string& instr) -> std::optional<std::vector<std::string>> {
    OracleSolver oracle;
    const auto actions = oracle.solve(state_from_json(json::parse(state)), parse(instr));
    if (!actions) return std::nullopt;
    std::vector<std::string> out;
    for (auto a : *actions) out.emplace_back(action_name(a));
    return out;
  }, py::arg("state"), py::arg("instruction"));
  m.def("simulate", [](const std::string& state, const std::vector<std::string>& actions) {
    ActionSequence seq;
    for (const auto& a : actions) seq.push_back(action_from_name(a));
    return state_to_json(simulate(state_from_json(json::parse(state)), seq)).dump();
  });
  m.def("random_state", [](std::uint64_t seed, int grid, int objects) {
    return state_to_json(new_random_state(seed, grid, objects)).dump();
  }, py::arg("seed"), py::arg("grid") = kDefaultGridSize, py::arg("objects") = 5);
  m.def("encode_one_hot", [](const std::string& state) {
    const auto v = encode_one_hot(state_from_json(json::parse(state)));
    return py::array_t<float>(static_cast<py::ssize_t>(v.size()), v.data());
  });

  m.def("generate_dataset", [](std::uint64_t seed, const std::map<std::string, int>& counts, int grid, int min_objects,
                               int max_objects, int workers) {
    DatasetConfig c;
    c.seed = seed;
    c.grid_size = grid;
    c.min_objects = min_objects;
    c.max_objects = max_objects;
    c.workers = workers;
    c.counts.fill(0);
    for (const auto& [name, n] : counts) c.counts[static_cast<int>(split_from_name(name))] = n;
    std::vector<std::string> out;
    {
      py::gil_scoped_release release;
      for (const auto& e : generate_dataset(c).examples) out.push_back(example_to_line(e));
    }
    return out;
  }, py::arg("seed"), py::arg("counts"), py::arg("grid") = kDefaultGridSize, py::arg("min_objects") = 3,
     py::arg("max_objects") = 10, py::arg("workers") = 1);
  m.def("classify", [](const std::string& example) {
    std::vector<std::string> out;
    for (auto s : classify(example_of(example))) out.emplace_back(split_name(s));
    return out;
  });

  m.def("action_codes", [](const std::string& text) { return action_codes(parse_compact_actions(text)); },
        "Codes of actions written in run notation");
  m.def("format_compact", [](const std::vector<int>& codes) { return format_compact(codes); });
  m.def("word_codes", [](const std::string& text) { return encode_tokens(word_tokens(text)); });
  m.def("sample_permutation", [](std::uint64_t seed, int size) { return Permutation::sample(seed, size).codes(); });
  m.def("apply_permutation", [](const std::vector<int>& perm, const std::vector<int>& codes) {
    return Permutation(perm).apply(codes);
  });

  m.def("heuristic_supports", [](const std::string& example, int n) {
    OracleSolver oracle;
    const auto q = example_of(example);
    return query_supports_to_json({q, heuristic_supports(q, oracle, n)}).dump();
  }, py::arg("example"), py::arg("n") = kDefaultSupports);
  m.def("random_supports", [](const std::string& example, std::uint64_t seed, int n) {
    OracleSolver oracle;
    const auto q = example_of(example);
    return query_supports_to_json({q, random_supports(q, oracle, seed, n)}).dump();
  }, py::arg("example"), py::arg("seed"), py::arg("n") = kDefaultSupports);
  m.def("support_criteria", [](const std::vector<std::string>& records) {
    std::vector<QuerySupports> batch;
    for (const auto& r : records) batch.push_back(supports_of(r));
    return support_criteria(batch).to_json().dump();
  });
  m.def("validity_correctness", [](const std::vector<std::string>& records) {
    std::vector<Support> all;
    for (const auto& r : records) {
      const auto qs = supports_of(r);
      all.insert(all.end(), qs.supports.supports.begin(), qs.supports.supports.end());
    }
    return validity_correctness(all).to_json().dump();
  });
  m.def("export_icl_record", [](const std::string& record, std::uint64_t id, std::uint64_t seed, bool permute,
                                bool permute_words) {
    IclOptions o;
    o.seed = seed;
    o.policy = permute ? PermutationPolicy::permute : PermutationPolicy::identity;
    o.permute_words = permute_words;
    return export_icl_record(supports_of(record), id, o).dump();
  }, py::arg("record"), py::arg("id"), py::arg("seed"), py::arg("permute") = true, py::arg("permute_words") = false);

  m.def("word_tokens", &word_tokens);
  m.def("zipf_fit", [](const std::vector<std::string>& tokens) {
    const auto f = zipf_fit(tokens);
    return py::dict(py::arg("alpha") = f.alpha, py::arg("rmse") = f.rmse, py::arg("tokens") = f.tokens,
                    py::arg("types") = f.types);
  });
  m.def("sample_zipf", &sample_zipf, py::arg("alpha"), py::arg("n"), py::arg("seed"));
  m.def("pattern_frequency", [](const std::vector<std::string>& targets, const std::string& pattern, bool any) {
    std::vector<ActionSequence> seqs;
    for (const auto& t : targets) seqs.push_back(split_actions(t));
    return pattern_frequency(seqs, ActionPattern::parse(pattern), any);
  }, py::arg("targets"), py::arg("pattern"), py::arg("any_permutation") = false);

  m.def("brute_force_search", [](const Matrix& vectors, const Matrix& query, int k) {
    return hits(brute_force_search(rows_of(vectors), vector_of(query), k));
  });
  py::class_<IvfIndex>(m, "IvfIndex")
      .def_static("build", [](const Matrix& vectors, int cells, int iterations, std::uint64_t seed) {
        IvfIndex::Options o;
        o.cells = cells;
        o.iterations = iterations;
        o.seed = seed;
        const auto rows = rows_of(vectors);
        py::gil_scoped_release release;
        return IvfIndex::build(rows, o);
      }, py::arg("vectors"), py::arg("cells") = 512, py::arg("iterations") = 25, py::arg("seed") = 0)
      .def("query", [](const IvfIndex& index, const Matrix& v, int k, int probes) {
        return hits(index.query(vector_of(v), k, probes));
      }, py::arg("vector"), py::arg("k"), py::arg("probes") = 10)
      .def_property_readonly("cells", &IvfIndex::cells)
      .def_property_readonly("dim", &IvfIndex::dim)
      .def("__len__", &IvfIndex::size)
      .def("save", &IvfIndex::save)
      .def_static("load", &IvfIndex::load);

  m.def("build_prompt", [](const std::string& mode, const std::string& query) {
    return build_prompt(prompt_mode_from_name(mode), query);
  });
  m.def("parse_response", &parse_response);
  m.def("check_retention", [](const std::string& original, const std::string& paraphrase) {
    return check_retention(parse(original), paraphrase);
  });
}
