#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sphembed/rng.hpp"

namespace sphembed {

// Corpus ingestion: whitespace tokenization, vocabulary with min-count
// filtering, frequent-word subsampling, sliding-window tuple generation and
// unigram^power negative sampling.
//
// One input line = one document = one paragraph. Tokens are split on ASCII
// whitespace, case preserved; any normalization is the caller's preprocessing
// responsibility.

struct Vocabulary {
  std::vector<std::string> id_to_token;            // ids dense, by descending count
  std::unordered_map<std::string, int> token_to_id;
  std::vector<long long> counts;                   // aligned with id_to_token
  long long total_tokens = 0;                      // retained occurrences

  std::size_t size() const { return id_to_token.size(); }

  // -1 when the token is out of vocabulary
  int id(std::string_view token) const {
    auto it = token_to_id.find(std::string(token));
    return it == token_to_id.end() ? -1 : it->second;
  }
};

struct EncodedCorpus {
  std::vector<std::vector<int>> documents;  // empty docs kept so ids == line numbers

  std::size_t doc_count() const { return documents.size(); }
  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.size();
    return n;
  }
};

namespace detail {

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

template <typename Fn>
inline void for_each_token(std::string_view line, Fn&& fn) {
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (i < n) {
    while (i < n && is_ascii_space(line[i])) ++i;
    std::size_t start = i;
    while (i < n && !is_ascii_space(line[i])) ++i;
    if (i > start) fn(line.substr(start, i - start));
  }
}

}  // namespace detail

// Tokens appearing fewer than min_count times are discarded. Ids are assigned
// in descending frequency order, ties broken lexicographically.
inline Vocabulary build_vocabulary(const std::string& corpus_path, long long min_count) {
  std::ifstream in(corpus_path);
  if (!in) throw std::runtime_error("build_vocabulary: cannot open " + corpus_path);

  std::unordered_map<std::string, long long> freq;
  std::string line;
  while (std::getline(in, line)) {
    detail::for_each_token(line, [&](std::string_view tok) { ++freq[std::string(tok)]; });
  }
  if (in.bad()) throw std::runtime_error("build_vocabulary: I/O error reading " + corpus_path);

  std::vector<std::pair<std::string, long long>> kept;
  kept.reserve(freq.size());
  for (auto& [tok, count] : freq)
    if (count >= min_count) kept.emplace_back(tok, count);
  if (kept.empty()) throw std::runtime_error("build_vocabulary: empty vocabulary for " + corpus_path);

  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.id_to_token.reserve(kept.size());
  vocab.counts.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    vocab.id_to_token.push_back(kept[i].first);
    vocab.counts.push_back(kept[i].second);
    vocab.token_to_id.emplace(kept[i].first, static_cast<int>(i));
    vocab.total_tokens += kept[i].second;
  }
  return vocab;
}

// Each line becomes one document of retained-token ids; out-of-vocabulary
// tokens are dropped; empty lines stay as empty documents so paragraph ids
// match line numbers.
inline EncodedCorpus encode_corpus(const std::string& corpus_path, const Vocabulary& vocab) {
  std::ifstream in(corpus_path);
  if (!in) throw std::runtime_error("encode_corpus: cannot open " + corpus_path);

  EncodedCorpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<int> doc;
    detail::for_each_token(line, [&](std::string_view tok) {
      const int id = vocab.id(tok);
      if (id >= 0) doc.push_back(id);
    });
    corpus.documents.push_back(std::move(doc));
  }
  if (in.bad()) throw std::runtime_error("encode_corpus: I/O error reading " + corpus_path);
  return corpus;
}

// min(1, sqrt(threshold / f)) with f the corpus frequency of the word.
// Rare words are always kept; the probability is non-increasing in frequency.
inline double subsample_keep_probability(long long word_count, long long total, double threshold) {
  if (total <= 0) throw std::invalid_argument("subsample_keep_probability: total must be > 0");
  if (!(threshold > 0.0)) throw std::invalid_argument("subsample_keep_probability: threshold must be > 0");
  const double f = static_cast<double>(word_count) / static_cast<double>(total);
  if (f <= threshold) return 1.0;
  return std::sqrt(threshold / f);
}

// Draws word ids with probability proportional to count^power via an
// inverse-CDF table. power = 0 gives the uniform distribution.
struct NegativeSampler {
  std::vector<double> cumulative;  // non-decreasing, ends at 1.0

  static NegativeSampler build(const Vocabulary& vocab, double power) {
    if (vocab.size() == 0) throw std::invalid_argument("NegativeSampler: empty vocabulary");
    NegativeSampler s;
    s.cumulative.resize(vocab.size());
    double z = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i)
      z += std::pow(static_cast<double>(vocab.counts[i]), power);
    double acc = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      acc += std::pow(static_cast<double>(vocab.counts[i]), power) / z;
      s.cumulative[i] = acc;
    }
    s.cumulative.back() = 1.0;
    return s;
  }

  int sample(Rng& rng) const {
    const double u = rng.next_double();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<int>(it - cumulative.begin());
  }
};

// One (center word, context word, paragraph) co-occurrence event plus the
// negative words drawn for it.
struct TrainingTuple {
  int center = -1;
  int context = -1;
  int doc = -1;
  std::vector<int> negatives;
};

struct TupleStreamConfig {
  int window = 10;
  bool fixed_window = false;        // default: effective window uniform in [1, window]
  int negatives = 2;
  double subsample_threshold = 1e-3;  // <= 0 disables subsampling
};

// Generates the training tuples of a document range. Each stream owns a
// private RNG seeded from (seed xor worker_id), so a fixed partition replays
// the identical stream. No shared mutable state.
class TupleStream {
 public:
  TupleStream(const EncodedCorpus& corpus, const Vocabulary& vocab,
              const NegativeSampler& sampler, const TupleStreamConfig& config,
              std::uint64_t seed, int worker_id, std::size_t doc_begin, std::size_t doc_end)
      : corpus_(&corpus),
        sampler_(&sampler),
        config_(config),
        rng_(seed ^ static_cast<std::uint64_t>(worker_id)),
        doc_begin_(doc_begin),
        doc_end_(doc_end) {
    if (config_.window < 1) throw std::invalid_argument("TupleStream: window must be >= 1");
    if (config_.negatives < 0) throw std::invalid_argument("TupleStream: negatives must be >= 0");
    keep_prob_.resize(vocab.size(), 1.0);
    if (config_.subsample_threshold > 0.0) {
      for (std::size_t i = 0; i < vocab.size(); ++i)
        keep_prob_[i] =
            subsample_keep_probability(vocab.counts[i], vocab.total_tokens,
                                       config_.subsample_threshold);
    }
    rewind();
  }

  // Restart the document cursor; the RNG state carries over so successive
  // epochs see fresh subsampling rolls and windows.
  void rewind() {
    doc_cursor_ = doc_begin_;
    kept_.clear();
    center_valid_ = false;
  }

  bool next(TrainingTuple& out) {
    for (;;) {
      if (center_valid_) {
        while (ctx_ <= ctx_end_) {
          if (ctx_ == center_) {
            ++ctx_;
            continue;
          }
          out.center = kept_[static_cast<std::size_t>(center_)];
          out.context = kept_[static_cast<std::size_t>(ctx_)];
          out.doc = static_cast<int>(doc_cursor_ - 1);
          out.negatives.resize(static_cast<std::size_t>(config_.negatives));
          for (auto& n : out.negatives) n = sampler_->sample(rng_);
          ++ctx_;
          return true;
        }
        if (static_cast<std::size_t>(++center_) < kept_.size()) {
          begin_center();
          continue;
        }
        center_valid_ = false;
      }
      if (doc_cursor_ >= doc_end_) return false;
      load_doc(corpus_->documents[doc_cursor_++]);
    }
  }

 private:
  void load_doc(const std::vector<int>& doc) {
    kept_.clear();
    for (int id : doc) {
      const double p = keep_prob_[static_cast<std::size_t>(id)];
      if (p >= 1.0 || rng_.next_double() < p) kept_.push_back(id);
    }
    // 0/1-token documents yield no (center, context) pairs
    center_valid_ = kept_.size() >= 2;
    if (center_valid_) {
      center_ = 0;
      begin_center();
    }
  }

  void begin_center() {
    const long b = config_.fixed_window
                       ? config_.window
                       : 1 + static_cast<long>(rng_.next_below(static_cast<std::uint64_t>(config_.window)));
    ctx_ = std::max<long>(0, center_ - b);
    ctx_end_ = std::min<long>(static_cast<long>(kept_.size()) - 1, center_ + b);
  }

  const EncodedCorpus* corpus_;
  const NegativeSampler* sampler_;
  TupleStreamConfig config_;
  Rng rng_;
  std::size_t doc_begin_, doc_end_;
  std::size_t doc_cursor_ = 0;
  std::vector<int> kept_;
  std::vector<double> keep_prob_;
  long center_ = 0, ctx_ = 1, ctx_end_ = 0;
  bool center_valid_ = false;
};

// Writes "token<TAB>count" lines in id order.
inline void dump_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_vocabulary: cannot open " + path);
  for (std::size_t i = 0; i < vocab.size(); ++i)
    out << vocab.id_to_token[i] << '\t' << vocab.counts[i] << '\n';
  if (!out) throw std::runtime_error("dump_vocabulary: write failed for " + path);
}

}  // namespace sphembed
