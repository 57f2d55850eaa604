#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gridicl/grammar.hpp"
#include "gridicl/world.hpp"

namespace gridicl {

float dot(const DenseVector& a, const DenseVector& b);
double l2_norm(const DenseVector& v);
DenseVector normalized(DenseVector v);  // zero stays zero

// Term weights tf * idf with smooth idf = ln((1 + N) / (1 + df)) + 1 and
// raw term counts, L2-normalized. Terms are 1..max_ngram grams joined with
// a single space. Unknown terms are ignored.
class TfIdfEncoder {
 public:
  static TfIdfEncoder fit(const std::vector<Tokens>& docs, int max_ngram = 1);

  DenseVector encode(const Tokens& doc) const;
  std::size_t dim() const { return vocab_.size(); }
  int max_ngram() const { return max_ngram_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  double idf(const std::string& term) const;  // 0 for unknown terms

  static std::vector<std::string> ngrams(const Tokens& doc, int max_n);

 private:
  int max_ngram_ = 1;
  std::vector<std::string> vocab_;  // sorted
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<double> idf_;
};

// Projection onto the top principal axes of mean-centred data.
class PcaProjector {
 public:
  // Keeps at most k axes, fewer when the data has lower rank. A positive
  // max_samples fits on a seeded subsample. FitError on empty input.
  static PcaProjector fit(const std::vector<DenseVector>& rows, int k = 320, std::size_t max_samples = 0,
                          std::uint64_t seed = 0);

  DenseVector project(const DenseVector& v) const;
  int rank() const { return static_cast<int>(axes_.size()); }
  std::size_t input_dim() const { return mean_.size(); }
  const std::vector<DenseVector>& axes() const { return axes_; }
  const DenseVector& mean() const { return mean_; }
  const std::vector<double>& explained_variance() const { return variance_; }

 private:
  DenseVector mean_;
  std::vector<DenseVector> axes_;
  std::vector<double> variance_;
  std::vector<double> offset_;  // axis . mean
};

struct SearchHit {
  std::size_t id = 0;
  float score = 0;
  bool operator==(const SearchHit&) const = default;
};

// Exact top-k by inner product; ties go to the lower id.
std::vector<SearchHit> brute_force_search(const std::vector<DenseVector>& vectors, const DenseVector& query, int k);

// Inverted-file index: k-means cells over the vectors, each vector stored in
// the posting list of its nearest centroid. Queries scan the `probes` cells
// with the nearest centroids and rank by inner product.
class IvfIndex {
 public:
  struct Options {
    int cells = 512;
    int iterations = 25;
    std::uint64_t seed = 0;
    std::size_t train_sample = 0;  // 0 trains on every vector
  };

  // Cells are capped at the number of vectors. RetrievalError when empty.
  static IvfIndex build(const std::vector<DenseVector>& vectors, const Options& options);
  static IvfIndex build(const std::vector<DenseVector>& vectors) { return build(vectors, Options{}); }

  // QueryError when k <= 0 or probes <= 0.
  std::vector<SearchHit> query(const DenseVector& v, int k, int probes = 10) const;

  int cells() const { return cells_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  int cell_of(std::size_t id) const;
  const std::vector<std::size_t>& cell_sizes() const { return cell_sizes_; }

  // Binary layout: magic "GIVF", u32 version, u32 cells, u64 dim, u64 count,
  // centroids, cell offsets, ids, vectors (little-endian floats).
  void save(const std::string& path) const;
  static IvfIndex load(const std::string& path);

 private:
  int cells_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> centroids_;         // cells x dim
  std::vector<std::size_t> offsets_;     // cells + 1, into ids_/data_
  std::vector<std::size_t> cell_sizes_;  // cells
  std::vector<std::size_t> ids_;
  std::vector<float> data_;  // vectors in posting order
  std::vector<int> assignment_;  // by id
};

// normalize(concat(state, alpha * instr)). With balance, instr is first
// rescaled to the norm of state. EncodingError on a zero result.
DenseVector hybrid_encode(const DenseVector& state, const DenseVector& instr, double alpha, bool balance = false);

}  // namespace gridicl
