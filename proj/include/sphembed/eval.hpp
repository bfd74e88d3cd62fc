#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sphembed/rng.hpp"
#include "sphembed/vec.hpp"

namespace sphembed {

// Evaluation harness: word similarity (Spearman), document clustering with
// external quality measures, and k-NN document classification. Everything is
// a pure function of its inputs; parallel restarts are the caller's business.

struct SimilarityPair {
  std::string word1, word2;
  double human_score = 0.0;
};

struct SimilarityDataset {
  std::vector<SimilarityPair> pairs;
};

struct LabeledCorpus {
  std::vector<int> labels;  // aligned with paragraph ids
  int class_count = 0;
  std::vector<std::string> class_names;  // index = class id
};

struct ClusteringResult {
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;
  double objective = 0.0;                 // inertia (kmeans) or cosine sum (spherical)
  std::vector<double> objective_trace;    // per-iteration objective after assignment
  int iterations = 0;
};

namespace detail {

// average ranks, ties get the mean of their positions (1-based)
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw std::domain_error("spearman: zero rank variance, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

inline double sq_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// Pearson correlation of average-ranked values; in [-1, 1].
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("spearman: need at least 2 observations");
  return detail::pearson(detail::average_ranks(xs), detail::average_ranks(ys));
}

struct WordSimilarityReport {
  double spearman = 0.0;
  double coverage = 0.0;  // fraction of pairs with both words in vocabulary
  std::size_t pairs_used = 0;
  std::size_t pairs_total = 0;
};

// Model score per pair is the cosine of the two target-word embeddings; pairs
// with any out-of-vocabulary word are skipped and counted against coverage.
inline WordSimilarityReport evaluate_word_similarity(
    const std::unordered_map<std::string, std::vector<double>>& embeddings,
    const SimilarityDataset& dataset) {
  if (dataset.pairs.empty()) throw std::invalid_argument("evaluate_word_similarity: empty dataset");
  std::vector<double> model, human;
  for (const auto& pair : dataset.pairs) {
    auto a = embeddings.find(pair.word1);
    auto b = embeddings.find(pair.word2);
    if (a == embeddings.end() || b == embeddings.end()) continue;
    const std::span<const double> va{a->second.data(), a->second.size()};
    const std::span<const double> vb{b->second.data(), b->second.size()};
    const double na = norm<double>(va), nb = norm<double>(vb);
    if (na <= 0.0 || nb <= 0.0) continue;
    model.push_back(dot<double>(va, vb) / (na * nb));
    human.push_back(pair.human_score);
  }
  if (model.empty())
    throw std::runtime_error("evaluate_word_similarity: no pair is covered by the vocabulary");
  WordSimilarityReport report;
  report.pairs_total = dataset.pairs.size();
  report.pairs_used = model.size();
  report.coverage = static_cast<double>(model.size()) / static_cast<double>(dataset.pairs.size());
  report.spearman = spearman(model, human);
  return report;
}

struct ClusterConfig {
  int max_iterations = 300;
  std::uint64_t seed = 1;
};

namespace detail {

// k-means++ seeding; `dist` maps (point, centroid) to the nonnegative cost
// driving the selection probabilities.
template <typename DistFn>
inline std::vector<std::size_t> kmeanspp_seeds(const std::vector<std::vector<double>>& points,
                                               int k, Rng& rng, DistFn&& dist) {
  const std::size_t n = points.size();
  std::vector<std::size_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  chosen.push_back(static_cast<std::size_t>(rng.next_below(n)));
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], dist(points[i], points[chosen.back()]));
      total += best[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = rng.next_double() * total;
      for (std::size_t i = 0; i < n; ++i) {
        u -= best[i];
        if (u <= 0.0) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = static_cast<std::size_t>(rng.next_below(n));
    }
    chosen.push_back(pick);
  }
  return chosen;
}

}  // namespace detail

// Lloyd iterations with squared-Euclidean assignment and k-means++ seeding,
// until the assignments reach a fixpoint or max_iterations.
inline ClusteringResult kmeans(const std::vector<std::vector<double>>& points, int k,
                               const ClusterConfig& config = {}) {
  const std::size_t n = points.size();
  if (k <= 0 || static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("kmeans: k must be in [1, #points]");
  const std::size_t dim = points.front().size();
  Rng rng(config.seed);

  ClusteringResult result;
  result.centroids.reserve(static_cast<std::size_t>(k));
  for (std::size_t idx : detail::kmeanspp_seeds(points, k, rng, [](const auto& a, const auto& b) {
         return detail::sq_distance({a.data(), a.size()}, {b.data(), b.size()});
       }))
    result.centroids.push_back(points[idx]);

  result.assignments.assign(n, -1);
  std::vector<int> sizes(static_cast<std::size_t>(k));
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = detail::sq_distance({points[i].data(), dim},
                                             {result.centroids[static_cast<std::size_t>(c)].data(), dim});
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      inertia += best_d;
      if (result.assignments[i] != best_c) {
        result.assignments[i] = best_c;
        changed = true;
      }
    }
    result.objective = inertia;
    result.objective_trace.push_back(inertia);
    result.iterations = iter + 1;
    if (!changed) break;

    for (auto& c : result.centroids) std::fill(c.begin(), c.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = result.centroids[static_cast<std::size_t>(result.assignments[i])];
      for (std::size_t j = 0; j < dim; ++j) c[j] += points[i][j];
      ++sizes[static_cast<std::size_t>(result.assignments[i])];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        for (auto& x : result.centroids[static_cast<std::size_t>(c)])
          x /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
      } else {
        // reseed an empty cluster to the point farthest from its own centroid
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = detail::sq_distance(
              {points[i].data(), dim},
              {result.centroids[static_cast<std::size_t>(result.assignments[i])].data(), dim});
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        result.centroids[static_cast<std::size_t>(c)] = points[far];
      }
    }
  }
  return result;
}

// Spherical K-Means: assignment by maximum cosine, centroids are normalized
// member means, empty clusters reseed to the point with the lowest maximum
// cosine to any centroid. The cosine objective is non-decreasing across
// iterations.
inline ClusteringResult spherical_kmeans(const std::vector<std::vector<double>>& points, int k,
                                         const ClusterConfig& config = {}) {
  const std::size_t n = points.size();
  if (k <= 0 || static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("spherical_kmeans: k must be in [1, #points]");
  const std::size_t dim = points.front().size();
  Rng rng(config.seed);

  ClusteringResult result;
  // cosine-distance analog of the k-means++ cost
  for (std::size_t idx : detail::kmeanspp_seeds(points, k, rng, [dim](const auto& a, const auto& b) {
         return std::max(0.0, 1.0 - dot<double>({a.data(), dim}, {b.data(), dim}));
       }))
    result.centroids.push_back(points[idx]);

  result.assignments.assign(n, -1);
  std::vector<int> sizes(static_cast<std::size_t>(k));
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    bool changed = false;
    double cosine_sum = 0.0;
    std::vector<double> max_cos(n, -2.0);
    for (std::size_t i = 0; i < n; ++i) {
      int best_c = 0;
      double best_cos = -2.0;
      for (int c = 0; c < k; ++c) {
        const double cs = dot<double>({points[i].data(), dim},
                                      {result.centroids[static_cast<std::size_t>(c)].data(), dim});
        if (cs > best_cos) {
          best_cos = cs;
          best_c = c;
        }
      }
      max_cos[i] = best_cos;
      cosine_sum += best_cos;
      if (result.assignments[i] != best_c) {
        result.assignments[i] = best_c;
        changed = true;
      }
    }
    result.objective = cosine_sum;
    result.objective_trace.push_back(cosine_sum);
    result.iterations = iter + 1;
    if (!changed) break;

    for (auto& c : result.centroids) std::fill(c.begin(), c.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = result.centroids[static_cast<std::size_t>(result.assignments[i])];
      for (std::size_t j = 0; j < dim; ++j) c[j] += points[i][j];
      ++sizes[static_cast<std::size_t>(result.assignments[i])];
    }
    for (int c = 0; c < k; ++c) {
      auto& centroid = result.centroids[static_cast<std::size_t>(c)];
      const bool ok = sizes[static_cast<std::size_t>(c)] > 0 &&
                      normalize<double>({centroid.data(), centroid.size()});
      if (!ok) {
        // worst-represented point restarts the cluster
        std::size_t worst = 0;
        double worst_cos = 2.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (max_cos[i] < worst_cos) {
            worst_cos = max_cos[i];
            worst = i;
          }
        }
        centroid = points[worst];
      }
    }
  }
  return result;
}

struct ClusteringMetrics {
  double mi = 0.0;   // nats
  double nmi = 0.0;
  double ari = 0.0;
  double purity = 0.0;
};

enum class NmiNorm { kGeometric, kArithmetic };

// External clustering measures from the contingency table. MI is reported in
// nats; NMI normalizes by the geometric (default) or arithmetic mean of the
// two entropies; ARI follows the permutation-model adjusted index.
inline ClusteringMetrics clustering_metrics(const std::vector<int>& assignments,
                                            const std::vector<int>& labels,
                                            NmiNorm nmi_norm = NmiNorm::kGeometric) {
  if (assignments.size() != labels.size())
    throw std::invalid_argument("clustering_metrics: length mismatch");
  if (assignments.empty()) throw std::invalid_argument("clustering_metrics: empty input");
  const std::size_t n = assignments.size();
  const int k = 1 + *std::max_element(assignments.begin(), assignments.end());
  const int c = 1 + *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(assignments.begin(), assignments.end()) < 0 ||
      *std::min_element(labels.begin(), labels.end()) < 0)
    throw std::invalid_argument("clustering_metrics: negative ids");
  if (k == 1 && c == 1)
    throw std::domain_error("clustering_metrics: single cluster and single class, NMI undefined");

  std::vector<std::vector<long long>> table(static_cast<std::size_t>(k),
                                            std::vector<long long>(static_cast<std::size_t>(c), 0));
  std::vector<long long> row(static_cast<std::size_t>(k), 0), col(static_cast<std::size_t>(c), 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++table[static_cast<std::size_t>(assignments[i])][static_cast<std::size_t>(labels[i])];
    ++row[static_cast<std::size_t>(assignments[i])];
    ++col[static_cast<std::size_t>(labels[i])];
  }
  const double dn = static_cast<double>(n);

  double mi = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < c; ++b) {
      const long long nij = table[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      if (nij == 0) continue;
      mi += (nij / dn) *
            std::log(dn * static_cast<double>(nij) /
                     (static_cast<double>(row[static_cast<std::size_t>(a)]) *
                      static_cast<double>(col[static_cast<std::size_t>(b)])));
    }
  mi = std::max(0.0, mi);

  auto entropy = [dn](const std::vector<long long>& counts) {
    double h = 0.0;
    for (long long v : counts)
      if (v > 0) h -= (v / dn) * std::log(v / dn);
    return h;
  };
  const double ha = entropy(row), hc = entropy(col);

  ClusteringMetrics metrics;
  metrics.mi = mi;
  const double denom = nmi_norm == NmiNorm::kGeometric ? std::sqrt(ha * hc) : 0.5 * (ha + hc);
  metrics.nmi = denom > 0.0 ? mi / denom : 0.0;

  auto comb2 = [](long long v) { return 0.5 * static_cast<double>(v) * static_cast<double>(v - 1); };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < c; ++b) sum_ij += comb2(table[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]);
  for (long long v : row) sum_a += comb2(v);
  for (long long v : col) sum_b += comb2(v);
  const double total_pairs = comb2(static_cast<long long>(n));
  const double expected = total_pairs > 0.0 ? sum_a * sum_b / total_pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  metrics.ari = (max_index - expected) > 0.0 ? (sum_ij - expected) / (max_index - expected) : 1.0;

  double majority = 0.0;
  for (int a = 0; a < k; ++a)
    majority += static_cast<double>(
        *std::max_element(table[static_cast<std::size_t>(a)].begin(), table[static_cast<std::size_t>(a)].end()));
  metrics.purity = majority / dn;
  return metrics;
}

// Majority vote among the k nearest training points by Euclidean distance.
// Distance ties prefer the lower training index; vote ties fall back to the
// label of the single nearest neighbor.
inline std::vector<int> knn_classify(const std::vector<std::vector<double>>& train_points,
                                     const std::vector<int>& train_labels,
                                     const std::vector<std::vector<double>>& test_points, int k) {
  if (train_points.empty()) throw std::invalid_argument("knn_classify: empty training set");
  if (train_points.size() != train_labels.size())
    throw std::invalid_argument("knn_classify: train size mismatch");
  if (k < 1 || static_cast<std::size_t>(k) > train_points.size())
    throw std::invalid_argument("knn_classify: k must be in [1, #train]");

  const std::size_t dim = train_points.front().size();
  std::vector<int> predictions;
  predictions.reserve(test_points.size());
  std::vector<std::pair<double, std::size_t>> dists(train_points.size());

  for (const auto& q : test_points) {
    for (std::size_t i = 0; i < train_points.size(); ++i)
      dists[i] = {detail::sq_distance({q.data(), dim}, {train_points[i].data(), dim}), i};
    std::partial_sort(dists.begin(), dists.begin() + k, dists.end());

    std::unordered_map<int, int> votes;
    for (int i = 0; i < k; ++i) ++votes[train_labels[dists[static_cast<std::size_t>(i)].second]];
    int best_label = train_labels[dists[0].second];
    int best_votes = votes[best_label];
    bool tie = false;
    for (const auto& [label, count] : votes) {
      if (count > best_votes) {
        best_votes = count;
        best_label = label;
        tie = false;
      } else if (count == best_votes && label != best_label) {
        tie = true;
      }
    }
    predictions.push_back(tie ? train_labels[dists[0].second] : best_label);
  }
  return predictions;
}

struct F1Scores {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
};

// Per-class F1 averaged unweighted over all class ids in [0, class_count)
// (classes absent from both gold and predictions contribute 0); micro-F1 from
// pooled counts, which equals accuracy for single-label classification.
inline F1Scores f1_scores(const std::vector<int>& predicted, const std::vector<int>& gold,
                          int class_count) {
  if (predicted.size() != gold.size()) throw std::invalid_argument("f1_scores: length mismatch");
  if (class_count < 1) throw std::invalid_argument("f1_scores: class_count must be >= 1");
  std::vector<long long> tp(static_cast<std::size_t>(class_count), 0),
      fp(static_cast<std::size_t>(class_count), 0), fn(static_cast<std::size_t>(class_count), 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0 || predicted[i] >= class_count || gold[i] < 0 || gold[i] >= class_count)
      throw std::invalid_argument("f1_scores: label out of range");
    if (predicted[i] == gold[i]) {
      ++tp[static_cast<std::size_t>(gold[i])];
    } else {
      ++fp[static_cast<std::size_t>(predicted[i])];
      ++fn[static_cast<std::size_t>(gold[i])];
    }
  }
  double macro = 0.0;
  long long tp_total = 0, fp_total = 0, fn_total = 0;
  for (int c = 0; c < class_count; ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double denom = 2.0 * static_cast<double>(tp[i]) + static_cast<double>(fp[i]) + static_cast<double>(fn[i]);
    macro += denom > 0.0 ? 2.0 * static_cast<double>(tp[i]) / denom : 0.0;
    tp_total += tp[i];
    fp_total += fp[i];
    fn_total += fn[i];
  }
  F1Scores scores;
  scores.macro_f1 = macro / static_cast<double>(class_count);
  const double micro_denom = 2.0 * static_cast<double>(tp_total) + static_cast<double>(fp_total) +
                             static_cast<double>(fn_total);
  scores.micro_f1 = micro_denom > 0.0 ? 2.0 * static_cast<double>(tp_total) / micro_denom : 0.0;
  return scores;
}

}  // namespace sphembed
