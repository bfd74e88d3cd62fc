#pragma once

#include <atomic>
#include <cassert>
#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "sphembed/corpus.hpp"
#include "sphembed/rng.hpp"
#include "sphembed/sphere.hpp"

namespace sphembed {

// Max-margin spherical embedding objective and its trainer. A positive tuple
// (center u, context v, paragraph d) is pushed above a corrupted tuple with a
// sampled word u' in place of the center:
//
//   loss = max(0, m - v.u - u.d + v.u' + u'.d)
//
// (the vMF normalizers cancel, cosine on the sphere is the dot product).
// Parameters move by Riemannian SGD steps with the angular multiplier and a
// projective retraction; see sphere.hpp.

enum class NegReduce { kSum, kMean };

struct TrainConfig {
  int dim = 100;
  double margin = 0.15;
  int negatives = 2;
  int window = 10;
  int iterations = 10;
  double initial_lr = 0.04;
  double lr_floor_fraction = 1e-4;  // lr never decays below initial_lr * this
  long long min_count = 5;
  int threads = 1;
  std::uint64_t seed = 1;
  double subsample = 1e-3;  // <= 0 disables subsampling
  double neg_power = 0.75;  // 0 = uniform negative distribution
  bool fixed_window = false;
  NegReduce neg_reduce = NegReduce::kSum;

  void validate() const {
    if (dim < 2) throw std::invalid_argument("TrainConfig: dim must be >= 2");
    if (!(margin > 0.0)) throw std::invalid_argument("TrainConfig: margin must be > 0");
    if (!(initial_lr > 0.0)) throw std::invalid_argument("TrainConfig: initial_lr must be > 0");
    if (negatives < 1) throw std::invalid_argument("TrainConfig: negatives must be >= 1");
    if (window < 1) throw std::invalid_argument("TrainConfig: window must be >= 1");
    if (iterations < 0) throw std::invalid_argument("TrainConfig: iterations must be >= 0");
    if (threads < 1) throw std::invalid_argument("TrainConfig: threads must be >= 1");
    if (min_count < 1) throw std::invalid_argument("TrainConfig: min_count must be >= 1");
  }

  TupleStreamConfig stream_config() const {
    return TupleStreamConfig{window, fixed_window, negatives, subsample};
  }
};

// Three parameter banks: target words U, context words V, paragraphs D.
// Rows are unit vectors (within float drift between renormalizations).
template <typename T = float>
struct EmbeddingMatrices {
  int dim = 0;
  std::size_t vocab_size = 0;
  std::size_t doc_count = 0;
  std::vector<T> target;     // vocab_size x dim
  std::vector<T> context;    // vocab_size x dim
  std::vector<T> paragraph;  // doc_count x dim

  std::span<T> target_row(std::size_t i) { return {target.data() + i * dim, static_cast<std::size_t>(dim)}; }
  std::span<T> context_row(std::size_t i) { return {context.data() + i * dim, static_cast<std::size_t>(dim)}; }
  std::span<T> paragraph_row(std::size_t i) { return {paragraph.data() + i * dim, static_cast<std::size_t>(dim)}; }
  std::span<const T> target_row(std::size_t i) const { return {target.data() + i * dim, static_cast<std::size_t>(dim)}; }
  std::span<const T> context_row(std::size_t i) const { return {context.data() + i * dim, static_cast<std::size_t>(dim)}; }
  std::span<const T> paragraph_row(std::size_t i) const { return {paragraph.data() + i * dim, static_cast<std::size_t>(dim)}; }

  void renormalize_all() {
    for (std::size_t i = 0; i < vocab_size; ++i) {
      renormalize_row<T>(target_row(i));
      renormalize_row<T>(context_row(i));
    }
    for (std::size_t i = 0; i < doc_count; ++i) renormalize_row<T>(paragraph_row(i));
  }
};

// Every row i.i.d. uniform on the sphere: standard normal coordinates,
// normalized. Deterministic per seed.
template <typename T = float>
inline EmbeddingMatrices<T> init_embeddings(std::size_t vocab_size, std::size_t doc_count,
                                            int dim, std::uint64_t seed) {
  if (vocab_size < 1 || doc_count < 1) throw std::invalid_argument("init_embeddings: sizes must be >= 1");
  if (dim < 2) throw std::invalid_argument("init_embeddings: dim must be >= 2");
  EmbeddingMatrices<T> m;
  m.dim = dim;
  m.vocab_size = vocab_size;
  m.doc_count = doc_count;
  m.target.resize(vocab_size * static_cast<std::size_t>(dim));
  m.context.resize(vocab_size * static_cast<std::size_t>(dim));
  m.paragraph.resize(doc_count * static_cast<std::size_t>(dim));
  Rng rng(seed);
  auto fill = [&](std::vector<T>& bank, std::size_t rows) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::span<T> row{bank.data() + r * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
      T n2;
      do {
        for (auto& x : row) x = static_cast<T>(rng.next_gaussian());
        n2 = squared_norm<T>(row);
      } while (n2 < T(1e-12));
      scale<T>(row, T(1) / std::sqrt(n2));
    }
  };
  fill(m.target, vocab_size);
  fill(m.context, vocab_size);
  fill(m.paragraph, doc_count);
  return m;
}

// Hinge loss of one (u, v, d) tuple against a single negative u'.
template <typename T>
inline T loss(std::span<const T> u, std::span<const T> v, std::span<const T> d,
              std::span<const T> u_neg, T margin) {
  const T value = margin - dot<T>(v, u) - dot<T>(u, d) + dot<T>(v, u_neg) + dot<T>(u_neg, d);
  return value > T(0) ? value : T(0);
}

template <typename T>
struct TupleGradients {
  std::vector<T> g_u, g_v, g_d, g_uneg;
  bool active = false;
};

// Euclidean gradients of the single-negative hinge. Zero everywhere when the
// hinge is inactive; otherwise (cosine on the unit sphere is the dot product,
// so d cos(a,b)/d a = b):
//   g_v = -u + u',  g_u = -v - d,  g_d = -u + u',  g_u' = v + d
// Every output has norm <= 2 for unit inputs.
template <typename T>
inline TupleGradients<T> euclidean_gradients(std::span<const T> u, std::span<const T> v,
                                             std::span<const T> d, std::span<const T> u_neg,
                                             T margin) {
  const std::size_t p = u.size();
  TupleGradients<T> g;
  g.g_u.assign(p, T(0));
  g.g_v.assign(p, T(0));
  g.g_d.assign(p, T(0));
  g.g_uneg.assign(p, T(0));
  if (loss<T>(u, v, d, u_neg, margin) <= T(0)) return g;
  g.active = true;
  for (std::size_t i = 0; i < p; ++i) {
    g.g_u[i] = -v[i] - d[i];
    g.g_v[i] = -u[i] + u_neg[i];
    g.g_d[i] = -u[i] + u_neg[i];
    g.g_uneg[i] = v[i] + d[i];
  }
  return g;
}

// Per-worker scratch so the hot loop never allocates.
template <typename T>
struct StepScratch {
  std::vector<T> u0, v0, d0;   // row snapshots
  std::vector<T> g_u, g_vd, g_neg;
  std::vector<char> active;

  void resize(int dim, int negatives) {
    u0.resize(dim);
    v0.resize(dim);
    d0.resize(dim);
    g_u.resize(dim);
    g_vd.resize(dim);
    g_neg.resize(dim);
    active.resize(negatives);
  }
};

// One asynchronous SGD step. Gradients are computed from a snapshot of the
// u, v, d rows so reads within the tuple are consistent, then each touched
// row is updated once: u, v, d with the positive multiplier, each negative
// row with the negative-sample multiplier. Each negative gets its own hinge;
// with NegReduce::kMean the summed contributions are divided by the negative
// count. Returns the tuple loss (0 for a fully inactive tuple, which updates
// nothing).
template <typename T>
inline T train_step(EmbeddingMatrices<T>& m, const TrainingTuple& tuple, T eta, T margin,
                    NegReduce reduce, StepScratch<T>& s) {
  const int p = m.dim;
  const std::size_t up = static_cast<std::size_t>(p);
  const int negs = static_cast<int>(tuple.negatives.size());
  s.resize(p, negs);

  std::span<const T> u = m.target_row(tuple.center);
  std::span<const T> v = m.context_row(tuple.context);
  std::span<const T> d = m.paragraph_row(tuple.doc);
  std::copy(u.begin(), u.end(), s.u0.begin());
  std::copy(v.begin(), v.end(), s.v0.begin());
  std::copy(d.begin(), d.end(), s.d0.begin());
  std::span<const T> u0{s.u0.data(), up}, v0{s.v0.data(), up}, d0{s.d0.data(), up};

  const T pos = dot<T>(v0, u0) + dot<T>(u0, d0);

  std::fill(s.g_vd.begin(), s.g_vd.end(), T(0));
  int active_count = 0;
  T total_loss = T(0);
  for (int j = 0; j < negs; ++j) {
    std::span<const T> n = m.target_row(tuple.negatives[static_cast<std::size_t>(j)]);
    const T hinge = margin - pos + dot<T>(v0, n) + dot<T>(n, d0);
    s.active[static_cast<std::size_t>(j)] = hinge > T(0);
    if (hinge > T(0)) {
      ++active_count;
      total_loss += hinge;
      // g_v and g_d share the same vector: -u + u' summed over active negatives
      for (int i = 0; i < p; ++i) s.g_vd[static_cast<std::size_t>(i)] += n[static_cast<std::size_t>(i)] - u0[static_cast<std::size_t>(i)];
#ifndef NDEBUG
      // per-negative pieces obey the analytic bound ||grad|| <= 2
      T piece = T(0);
      for (int i = 0; i < p; ++i) {
        const T t = n[static_cast<std::size_t>(i)] - u0[static_cast<std::size_t>(i)];
        piece += t * t;
      }
      assert(piece <= T(4) + T(1e-4));
#endif
    }
  }

  const T inv = (reduce == NegReduce::kMean && negs > 0) ? T(1) / T(negs) : T(1);
  if (active_count == 0) return T(0);

  // g_u = active_count * (-v - d); g_u' = v + d for each active negative
  for (int i = 0; i < p; ++i) {
    const T vd = v0[static_cast<std::size_t>(i)] + d0[static_cast<std::size_t>(i)];
    s.g_u[static_cast<std::size_t>(i)] = -T(active_count) * vd * inv;
    s.g_neg[static_cast<std::size_t>(i)] = vd * inv;
  }
  if (inv != T(1)) scale<T>({s.g_vd.data(), up}, inv);

  update_row<T>(m.target_row(tuple.center), {s.g_u.data(), up}, eta, false);
  update_row<T>(m.context_row(tuple.context), {s.g_vd.data(), up}, eta, false);
  update_row<T>(m.paragraph_row(tuple.doc), {s.g_vd.data(), up}, eta, false);
  for (int j = 0; j < negs; ++j) {
    if (!s.active[static_cast<std::size_t>(j)]) continue;
    update_row<T>(m.target_row(tuple.negatives[static_cast<std::size_t>(j)]), {s.g_neg.data(), up},
                  eta, true);
  }
  return total_loss * inv;
}

struct TrainStats {
  unsigned long long processed_tuples = 0;
  unsigned long long expected_total_tuples = 0;
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_seconds;
  double final_lr = 0.0;
};

template <typename T = float>
struct TrainResult {
  EmbeddingMatrices<T> embeddings;
  TrainStats stats;
};

namespace detail {

// Schedule denominator: expected tuples over the whole run. Subsampled token
// survival is exact in expectation; window truncation at document edges is
// ignored, and the lr floor absorbs the error.
inline unsigned long long estimate_total_tuples(const EncodedCorpus& corpus,
                                                const Vocabulary& vocab,
                                                const TrainConfig& cfg) {
  std::vector<double> keep(vocab.size(), 1.0);
  if (cfg.subsample > 0.0)
    for (std::size_t i = 0; i < vocab.size(); ++i)
      keep[i] = subsample_keep_probability(vocab.counts[i], vocab.total_tokens, cfg.subsample);
  double kept_tokens = 0.0;
  for (const auto& doc : corpus.documents)
    for (int id : doc) kept_tokens += keep[static_cast<std::size_t>(id)];
  const double per_token = cfg.fixed_window ? 2.0 * cfg.window : cfg.window + 1.0;
  const double total = kept_tokens * per_token * std::max(cfg.iterations, 1);
  return total < 1.0 ? 1ULL : static_cast<unsigned long long>(total);
}

}  // namespace detail

template <typename T = float>
using EpochCallback =
    std::function<void(int epoch, const TrainStats&, const EmbeddingMatrices<T>&)>;

// Runs `iterations` epochs of lock-free asynchronous SGD over the tuple
// stream. Workers own disjoint document ranges and update the shared banks
// without locks; the sparse-update regime tolerates row races. The learning
// rate decays linearly on a shared counter, refreshed every 10,000 tuples per
// worker, and never drops below initial_lr * lr_floor_fraction. A full worker
// barrier (join) precedes the epoch-boundary renormalization. Single-threaded
// runs are bit-reproducible for a fixed seed.
template <typename T = float>
inline TrainResult<T> train(const EncodedCorpus& corpus, const Vocabulary& vocab,
                            const TrainConfig& cfg, EpochCallback<T> on_epoch = {}) {
  cfg.validate();
  if (corpus.doc_count() == 0) throw std::invalid_argument("train: empty corpus");

  TrainResult<T> result;
  result.embeddings = init_embeddings<T>(vocab.size(), corpus.doc_count(), cfg.dim, cfg.seed);
  if (cfg.iterations == 0) return result;

  const NegativeSampler sampler = NegativeSampler::build(vocab, cfg.neg_power);
  const unsigned long long expected = detail::estimate_total_tuples(corpus, vocab, cfg);
  result.stats.expected_total_tuples = expected;

  const int workers = cfg.threads;
  const std::size_t docs = corpus.doc_count();
  std::vector<TupleStream> streams;
  streams.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = docs * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers);
    const std::size_t end = docs * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(workers);
    streams.emplace_back(corpus, vocab, sampler, cfg.stream_config(), cfg.seed, w, begin, end);
  }

  std::atomic<unsigned long long> global_processed{0};
  const double lr0 = cfg.initial_lr;
  const double lr_floor = cfg.lr_floor_fraction;
  auto current_lr = [&]() {
    const double done = static_cast<double>(global_processed.load(std::memory_order_relaxed)) /
                        static_cast<double>(expected);
    return lr0 * std::max(1.0 - done, lr_floor);
  };

  EmbeddingMatrices<T>& m = result.embeddings;
  const T margin = static_cast<T>(cfg.margin);

  for (int epoch = 1; epoch <= cfg.iterations; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> loss_sums(static_cast<std::size_t>(workers), 0.0);
    std::vector<unsigned long long> tuple_counts(static_cast<std::size_t>(workers), 0);

    auto work = [&](int w) {
      TupleStream& stream = streams[static_cast<std::size_t>(w)];
      stream.rewind();
      StepScratch<T> scratch;
      scratch.resize(cfg.dim, cfg.negatives);
      TrainingTuple tuple;
      tuple.negatives.reserve(static_cast<std::size_t>(cfg.negatives));
      T eta = static_cast<T>(current_lr());
      double loss_sum = 0.0;
      unsigned long long count = 0, block = 0;
      while (stream.next(tuple)) {
        loss_sum += static_cast<double>(train_step<T>(m, tuple, eta, margin, cfg.neg_reduce, scratch));
        ++count;
        if (++block == 10000) {
          global_processed.fetch_add(block, std::memory_order_relaxed);
          block = 0;
          eta = static_cast<T>(current_lr());
        }
      }
      global_processed.fetch_add(block, std::memory_order_relaxed);
      loss_sums[static_cast<std::size_t>(w)] = loss_sum;
      tuple_counts[static_cast<std::size_t>(w)] = count;
    };

    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }

    m.renormalize_all();

    double loss_sum = 0.0;
    unsigned long long count = 0;
    for (int w = 0; w < workers; ++w) {
      loss_sum += loss_sums[static_cast<std::size_t>(w)];
      count += tuple_counts[static_cast<std::size_t>(w)];
    }
    result.stats.processed_tuples += count;
    result.stats.epoch_mean_loss.push_back(count ? loss_sum / static_cast<double>(count) : 0.0);
    result.stats.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    result.stats.final_lr = current_lr();
    if (on_epoch) on_epoch(epoch, result.stats, m);
  }
  return result;
}

// Norm of the batch-mean Riemannian gradient: per-tuple tangent gradients of
// every touched row are averaged over a freshly sampled batch, and the norm
// of the stacked result is returned. This estimates the full Riemannian
// gradient of the expected loss, the quantity that vanishes at convergence
// (per-tuple gradient norms do not, since active hinges keep them at O(1)).
// Accumulators are dense, so this is meant for test-scale corpora.
template <typename T>
inline double batch_riemannian_grad_norm(const EmbeddingMatrices<T>& m, const EncodedCorpus& corpus,
                                         const Vocabulary& vocab, const TrainConfig& cfg,
                                         std::uint64_t sample_seed, std::size_t max_tuples = 10000) {
  const NegativeSampler sampler = NegativeSampler::build(vocab, cfg.neg_power);
  TupleStream stream(corpus, vocab, sampler, cfg.stream_config(), sample_seed, 0, 0,
                     corpus.doc_count());
  const int p = m.dim;
  const auto dim = static_cast<std::size_t>(p);
  std::vector<double> acc_target(m.vocab_size * dim, 0.0);
  std::vector<double> acc_context(m.vocab_size * dim, 0.0);
  std::vector<double> acc_paragraph(m.doc_count * dim, 0.0);

  // add the tangent projection of gradient g at row x into the accumulator
  auto add_projected = [&](std::span<const T> x, std::span<const double> g, double* acc) {
    double xg = 0.0;
    for (std::size_t i = 0; i < dim; ++i) xg += static_cast<double>(x[i]) * g[i];
    for (std::size_t i = 0; i < dim; ++i) acc[i] += g[i] - xg * static_cast<double>(x[i]);
  };

  TrainingTuple tuple;
  std::vector<double> g_vd(dim), g_u(dim), g_neg(dim);
  std::size_t n = 0;
  while (n < max_tuples && stream.next(tuple)) {
    ++n;
    std::span<const T> u = m.target_row(static_cast<std::size_t>(tuple.center));
    std::span<const T> v = m.context_row(static_cast<std::size_t>(tuple.context));
    std::span<const T> d = m.paragraph_row(static_cast<std::size_t>(tuple.doc));
    double pos = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
      pos += static_cast<double>(v[i]) * u[i] + static_cast<double>(u[i]) * d[i];

    std::fill(g_vd.begin(), g_vd.end(), 0.0);
    int active = 0;
    const double inv = cfg.neg_reduce == NegReduce::kMean && !tuple.negatives.empty()
                           ? 1.0 / static_cast<double>(tuple.negatives.size())
                           : 1.0;
    for (int neg : tuple.negatives) {
      std::span<const T> nrow = m.target_row(static_cast<std::size_t>(neg));
      double cross = 0.0;
      for (std::size_t i = 0; i < dim; ++i)
        cross += static_cast<double>(v[i]) * nrow[i] + static_cast<double>(nrow[i]) * d[i];
      if (cfg.margin - pos + cross <= 0.0) continue;
      ++active;
      for (std::size_t i = 0; i < dim; ++i) {
        g_vd[i] += static_cast<double>(nrow[i]) - u[i];
        g_neg[i] = (static_cast<double>(v[i]) + d[i]) * inv;
      }
      add_projected(nrow, g_neg, acc_target.data() + static_cast<std::size_t>(neg) * dim);
    }
    if (active == 0) continue;
    for (std::size_t i = 0; i < dim; ++i) {
      g_u[i] = -active * (static_cast<double>(v[i]) + d[i]) * inv;
      g_vd[i] *= inv;
    }
    add_projected(u, g_u, acc_target.data() + static_cast<std::size_t>(tuple.center) * dim);
    add_projected(v, g_vd, acc_context.data() + static_cast<std::size_t>(tuple.context) * dim);
    add_projected(d, g_vd, acc_paragraph.data() + static_cast<std::size_t>(tuple.doc) * dim);
  }
  if (n == 0) return 0.0;
  double sq = 0.0;
  for (const auto* acc : {&acc_target, &acc_context, &acc_paragraph})
    for (double x : *acc) sq += (x / static_cast<double>(n)) * (x / static_cast<double>(n));
  return std::sqrt(sq);
}

}  // namespace sphembed
