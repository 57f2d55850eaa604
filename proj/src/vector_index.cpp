#include "gridicl/vector_index.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "gridicl/errors.hpp"
#include "gridicl/rng.hpp"

namespace gridicl {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool hit_before(const SearchHit& a, const SearchHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

void keep_top(std::vector<SearchHit>& hits, int k) {
  const auto kk = std::min(hits.size(), static_cast<std::size_t>(k));
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(kk), hits.end(), hit_before);
  hits.resize(kk);
}

float dot_raw(const float* a, const float* b, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
  return static_cast<float>(s);
}

// Nearest centroid for every row of x, lowest index on ties.
std::vector<int> assign(const RowMatrix& x, const RowMatrix& c) {
  const Eigen::VectorXf cn = c.rowwise().squaredNorm();
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  constexpr Eigen::Index block = 2048;
  for (Eigen::Index start = 0; start < x.rows(); start += block) {
    const Eigen::Index rows = std::min(block, x.rows() - start);
    const RowMatrix prod = x.middleRows(start, rows) * c.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      int best = 0;
      float best_d = std::numeric_limits<float>::infinity();
      for (Eigen::Index j = 0; j < c.rows(); ++j) {
        const float d = cn[j] - 2 * prod(r, j);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(j);
        }
      }
      out[static_cast<std::size_t>(start + r)] = best;
    }
  }
  return out;
}

void check_finite(const DenseVector& v, const char* what) {
  for (float x : v)
    if (!std::isfinite(x)) throw EncodingError(std::string(what) + " contains a non-finite value");
}

}  // namespace

float dot(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw DimensionError("vector sizes differ");
  return dot_raw(a.data(), b.data(), a.size());
}

double l2_norm(const DenseVector& v) {
  double s = 0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

DenseVector normalized(DenseVector v) {
  const double n = l2_norm(v);
  if (n > 0)
    for (auto& x : v) x = static_cast<float>(x / n);
  return v;
}

std::vector<std::string> TfIdfEncoder::ngrams(const Tokens& doc, int max_n) {
  std::vector<std::string> out;
  for (int n = 1; n <= max_n; ++n) {
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= doc.size(); ++i) {
      std::string g = doc[i];
      for (int j = 1; j < n; ++j) g += ' ' + doc[i + static_cast<std::size_t>(j)];
      out.push_back(std::move(g));
    }
  }
  return out;
}

TfIdfEncoder TfIdfEncoder::fit(const std::vector<Tokens>& docs, int max_ngram) {
  if (max_ngram < 1) throw ConfigError("max_ngram must be at least 1");
  TfIdfEncoder enc;
  enc.max_ngram_ = max_ngram;
  std::map<std::string, int, std::less<>> df;
  for (const auto& d : docs) {
    const auto grams = ngrams(d, max_ngram);
    for (const auto& g : std::set<std::string>(grams.begin(), grams.end())) ++df[g];
  }
  const double n = static_cast<double>(docs.size());
  for (const auto& [term, count] : df) {
    enc.index_[term] = enc.vocab_.size();
    enc.vocab_.push_back(term);
    enc.idf_.push_back(std::log((1 + n) / (1 + count)) + 1);
  }
  return enc;
}

double TfIdfEncoder::idf(const std::string& term) const {
  const auto it = index_.find(term);
  return it == index_.end() ? 0.0 : idf_[it->second];
}

DenseVector TfIdfEncoder::encode(const Tokens& doc) const {
  DenseVector v(vocab_.size(), 0.0f);
  std::vector<double> w(vocab_.size(), 0.0);
  for (const auto& g : ngrams(doc, max_ngram_)) {
    const auto it = index_.find(g);
    if (it != index_.end()) w[it->second] += idf_[it->second];
  }
  double norm = 0;
  for (double x : w) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0)
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = static_cast<float>(w[i] / norm);
  return v;
}

PcaProjector PcaProjector::fit(const std::vector<DenseVector>& rows, int k, std::size_t max_samples,
                               std::uint64_t seed) {
  if (rows.empty()) throw FitError("PCA needs at least one sample");
  if (k < 1) throw ConfigError("PCA needs k >= 1");
  const std::size_t d = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != d) throw DimensionError("PCA rows have different lengths");

  std::vector<std::size_t> pick(rows.size());
  std::iota(pick.begin(), pick.end(), 0);
  if (max_samples > 0 && max_samples < rows.size()) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_samples; ++i)
      std::swap(pick[i], pick[i + static_cast<std::size_t>(rng.below(pick.size() - i))]);
    pick.resize(max_samples);
    std::sort(pick.begin(), pick.end());
  }

  const auto n = static_cast<Eigen::Index>(pick.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, static_cast<Eigen::Index>(j)) = rows[pick[static_cast<std::size_t>(i)]][j];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / std::max<double>(1.0, static_cast<double>(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw FitError("eigen decomposition failed");

  PcaProjector p;
  p.mean_.resize(d);
  for (std::size_t j = 0; j < d; ++j) p.mean_[j] = static_cast<float>(mean[static_cast<Eigen::Index>(j)]);
  const auto& values = eig.eigenvalues();  // ascending
  const double top = std::max(values.size() ? values[values.size() - 1] : 0.0, 0.0);
  const double tol = std::max(top, 1.0) * 1e-9;
  for (Eigen::Index c = values.size() - 1; c >= 0 && p.rank() < k; --c) {
    if (values[c] <= tol) break;
    Eigen::VectorXd axis = eig.eigenvectors().col(c);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis[arg] < 0) axis = -axis;
    DenseVector a(d);
    for (std::size_t j = 0; j < d; ++j) a[j] = static_cast<float>(axis[static_cast<Eigen::Index>(j)]);
    p.axes_.push_back(std::move(a));
    p.variance_.push_back(values[c]);
  }
  for (const auto& a : p.axes_) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) s += static_cast<double>(a[j]) * p.mean_[j];
    p.offset_.push_back(s);
  }
  return p;
}

DenseVector PcaProjector::project(const DenseVector& v) const {
  if (v.size() != mean_.size()) throw DimensionError("PCA input has the wrong length");
  // Zero inputs are skipped, which makes sparse one-hot states cheap.
  DenseVector out(axes_.size());
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const auto& axis = axes_[a];
    double s = -offset_[a];
    for (std::size_t j = 0; j < v.size(); ++j)
      if (v[j] != 0.0f) s += static_cast<double>(axis[j]) * v[j];
    out[a] = static_cast<float>(s);
  }
  return out;
}

std::vector<SearchHit> brute_force_search(const std::vector<DenseVector>& vectors, const DenseVector& query, int k) {
  if (k <= 0) throw QueryError("k must be positive");
  std::vector<SearchHit> hits;
  hits.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) hits.push_back({i, dot(vectors[i], query)});
  keep_top(hits, k);
  return hits;
}

IvfIndex IvfIndex::build(const std::vector<DenseVector>& vectors, const Options& opt) {
  if (vectors.empty()) throw RetrievalError("cannot build an index over zero vectors");
  if (opt.cells < 1 || opt.iterations < 0) throw ConfigError("IVF needs cells >= 1 and iterations >= 0");
  const std::size_t d = vectors.front().size();
  const std::size_t n = vectors.size();
  RowMatrix all(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].size() != d) throw DimensionError("indexed vectors have different lengths");
    std::memcpy(all.row(static_cast<Eigen::Index>(i)).data(), vectors[i].data(), d * sizeof(float));
  }

  Rng rng(opt.seed);
  std::vector<std::size_t> train(n);
  std::iota(train.begin(), train.end(), 0);
  if (opt.train_sample > 0 && opt.train_sample < n) {
    for (std::size_t i = 0; i < opt.train_sample; ++i)
      std::swap(train[i], train[i + static_cast<std::size_t>(rng.below(n - i))]);
    train.resize(opt.train_sample);
    std::sort(train.begin(), train.end());
  }
  const auto m = static_cast<Eigen::Index>(train.size());
  RowMatrix x(m, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m; ++i) x.row(i) = all.row(static_cast<Eigen::Index>(train[static_cast<std::size_t>(i)]));

  const int cells = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(opt.cells), train.size()));
  RowMatrix c(cells, static_cast<Eigen::Index>(d));

  // k-means++ seeding.
  Eigen::VectorXf d2(m);
  std::size_t first = static_cast<std::size_t>(rng.below(train.size()));
  c.row(0) = x.row(static_cast<Eigen::Index>(first));
  d2 = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < cells; ++j) {
    double total = 0;
    for (Eigen::Index i = 0; i < m; ++i) total += d2[i];
    Eigen::Index chosen = static_cast<Eigen::Index>(rng.below(train.size()));
    if (total > 0) {
      double r = rng.uniform() * total;
      for (Eigen::Index i = 0; i < m; ++i) {
        r -= d2[i];
        if (r < 0 && d2[i] > 0) {
          chosen = i;
          break;
        }
      }
    }
    c.row(j) = x.row(chosen);
    d2 = d2.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
  }

  // Lloyd iterations. An empty cell takes the point farthest from its
  // centroid in the currently largest cell.
  for (int it = 0; it < opt.iterations; ++it) {
    const auto a = assign(x, c);
    RowMatrix sums = RowMatrix::Zero(cells, static_cast<Eigen::Index>(d));
    std::vector<std::size_t> sizes(static_cast<std::size_t>(cells), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      sums.row(a[static_cast<std::size_t>(i)]) += x.row(i);
      ++sizes[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
    }
    std::vector<bool> taken(static_cast<std::size_t>(m), false);
    for (int j = 0; j < cells; ++j) {
      if (sizes[static_cast<std::size_t>(j)] > 0) {
        c.row(j) = sums.row(j) / static_cast<float>(sizes[static_cast<std::size_t>(j)]);
        continue;
      }
      const auto big = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      Eigen::Index far = -1;
      float far_d = -1;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (a[static_cast<std::size_t>(i)] != big || taken[static_cast<std::size_t>(i)]) continue;
        const float dd = (x.row(i) - c.row(big)).squaredNorm();
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      if (far < 0) continue;
      taken[static_cast<std::size_t>(far)] = true;
      c.row(j) = x.row(far);
      --sizes[static_cast<std::size_t>(big)];
      sizes[static_cast<std::size_t>(j)] = 1;
    }
  }

  IvfIndex idx;
  idx.cells_ = cells;
  idx.dim_ = d;
  idx.centroids_.assign(c.data(), c.data() + c.size());
  idx.assignment_ = assign(all, c);
  idx.cell_sizes_.assign(static_cast<std::size_t>(cells), 0);
  for (int a : idx.assignment_) ++idx.cell_sizes_[static_cast<std::size_t>(a)];
  idx.offsets_.assign(static_cast<std::size_t>(cells) + 1, 0);
  for (int j = 0; j < cells; ++j)
    idx.offsets_[static_cast<std::size_t>(j) + 1] = idx.offsets_[static_cast<std::size_t>(j)] + idx.cell_sizes_[static_cast<std::size_t>(j)];
  idx.ids_.resize(n);
  idx.data_.resize(n * d);
  std::vector<std::size_t> fill(idx.offsets_.begin(), idx.offsets_.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t slot = fill[static_cast<std::size_t>(idx.assignment_[i])]++;
    idx.ids_[slot] = i;
    std::memcpy(&idx.data_[slot * d], vectors[i].data(), d * sizeof(float));
  }
  return idx;
}

int IvfIndex::cell_of(std::size_t id) const {
  if (id >= assignment_.size()) throw QueryError("id not in index");
  return assignment_[id];
}

std::vector<SearchHit> IvfIndex::query(const DenseVector& v, int k, int probes) const {
  if (k <= 0) throw QueryError("k must be positive");
  if (probes <= 0) throw QueryError("probes must be positive");
  if (v.size() != dim_) throw DimensionError("query has the wrong dimension");
  std::vector<std::pair<float, int>> order;
  order.reserve(static_cast<std::size_t>(cells_));
  for (int j = 0; j < cells_; ++j) {
    const float* cj = &centroids_[static_cast<std::size_t>(j) * dim_];
    double dd = 0;
    for (std::size_t t = 0; t < dim_; ++t) {
      const double diff = static_cast<double>(cj[t]) - v[t];
      dd += diff * diff;
    }
    order.emplace_back(static_cast<float>(dd), j);
  }
  const auto p = std::min(order.size(), static_cast<std::size_t>(probes));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(p), order.end());

  std::vector<SearchHit> hits;
  for (std::size_t q = 0; q < p; ++q) {
    const auto cell = static_cast<std::size_t>(order[q].second);
    for (std::size_t s = offsets_[cell]; s < offsets_[cell + 1]; ++s)
      hits.push_back({ids_[s], dot_raw(&data_[s * dim_], v.data(), dim_)});
  }
  keep_top(hits, k);
  return hits;
}

namespace {

constexpr char kMagic[4] = {'G', 'I', 'V', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ImportError("truncated index file");
  return v;
}

}  // namespace

void IvfIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExportError("cannot write " + path);
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(cells_));
  put(out, static_cast<std::uint64_t>(dim_));
  put(out, static_cast<std::uint64_t>(ids_.size()));
  out.write(reinterpret_cast<const char*>(centroids_.data()), static_cast<std::streamsize>(centroids_.size() * sizeof(float)));
  for (auto o : offsets_) put(out, static_cast<std::uint64_t>(o));
  for (auto id : ids_) put(out, static_cast<std::uint64_t>(id));
  out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size() * sizeof(float)));
  if (!out) throw ExportError("write failed for " + path);
}

IvfIndex IvfIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImportError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ImportError(path + " is not an index file");
  if (get<std::uint32_t>(in) != kVersion) throw ImportError("unsupported index version");
  IvfIndex idx;
  idx.cells_ = static_cast<int>(get<std::uint32_t>(in));
  idx.dim_ = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  idx.centroids_.resize(static_cast<std::size_t>(idx.cells_) * idx.dim_);
  in.read(reinterpret_cast<char*>(idx.centroids_.data()), static_cast<std::streamsize>(idx.centroids_.size() * sizeof(float)));
  idx.offsets_.resize(static_cast<std::size_t>(idx.cells_) + 1);
  for (auto& o : idx.offsets_) o = get<std::uint64_t>(in);
  idx.ids_.resize(count);
  for (auto& id : idx.ids_) id = get<std::uint64_t>(in);
  idx.data_.resize(count * idx.dim_);
  in.read(reinterpret_cast<char*>(idx.data_.data()), static_cast<std::streamsize>(idx.data_.size() * sizeof(float)));
  if (!in) throw ImportError("truncated index file");
  if (idx.offsets_.back() != count) throw ImportError("corrupt index offsets");
  idx.cell_sizes_.resize(static_cast<std::size_t>(idx.cells_));
  idx.assignment_.assign(count, 0);
  for (int j = 0; j < idx.cells_; ++j) {
    const auto lo = idx.offsets_[static_cast<std::size_t>(j)], hi = idx.offsets_[static_cast<std::size_t>(j) + 1];
    if (hi < lo || hi > count) throw ImportError("corrupt index offsets");
    idx.cell_sizes_[static_cast<std::size_t>(j)] = hi - lo;
    for (auto s = lo; s < hi; ++s) {
      if (idx.ids_[s] >= count) throw ImportError("corrupt index ids");
      idx.assignment_[idx.ids_[s]] = j;
    }
  }
  return idx;
}

DenseVector hybrid_encode(const DenseVector& state, const DenseVector& instr, double alpha, bool balance) {
  check_finite(state, "state vector");
  check_finite(instr, "instruction vector");
  if (!std::isfinite(alpha) || alpha < 0) throw EncodingError("alpha must be finite and non-negative");
  double scale = alpha;
  if (balance) {
    const double ni = l2_norm(instr);
    if (ni > 0) scale *= l2_norm(state) / ni;
  }
  DenseVector out;
  out.reserve(state.size() + instr.size());
  out.insert(out.end(), state.begin(), state.end());
  for (float x : instr) out.push_back(static_cast<float>(x * scale));
  const double n = l2_norm(out);
  if (!(n > 0)) throw EncodingError("hybrid vector has zero norm");
  for (auto& x : out) x = static_cast<float>(x / n);
  return out;
}

}  // namespace gridicl
