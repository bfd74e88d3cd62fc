#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "sphembed/eval.hpp"
#include "sphembed/model.hpp"

namespace sphembed {

inline constexpr const char* kToolVersion = "0.1.0";

// --- embedding files --------------------------------------------------------
//
// Text format: first line "<count> <dim>", then one row per line
// "<key> <v1> ... <vdim>" with 6-decimal fixed-point reals. Word files are
// keyed by token, paragraph files by the 0-based line number of the source
// document.

template <typename T>
inline void write_embeddings(const std::string& path, const std::vector<std::string>& keys,
                             const std::vector<T>& bank, int dim) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_embeddings: cannot open " + path);
  std::fprintf(f, "%zu %d\n", keys.size(), dim);
  for (std::size_t r = 0; r < keys.size(); ++r) {
    std::fputs(keys[r].c_str(), f);
    const T* row = bank.data() + r * static_cast<std::size_t>(dim);
    for (int i = 0; i < dim; ++i) std::fprintf(f, " %.6f", static_cast<double>(row[i]));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("write_embeddings: write failed for " + path);
}

struct EmbeddingFile {
  std::vector<std::string> keys;
  std::vector<std::vector<double>> vectors;
  int dim = 0;

  std::unordered_map<std::string, std::vector<double>> as_map() const {
    std::unordered_map<std::string, std::vector<double>> m;
    m.reserve(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) m.emplace(keys[i], vectors[i]);
    return m;
  }
};

inline EmbeddingFile read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_embeddings: cannot open " + path);
  std::size_t count = 0;
  int dim = 0;
  if (!(in >> count >> dim) || dim <= 0)
    throw std::runtime_error("read_embeddings: bad header in " + path);
  EmbeddingFile file;
  file.dim = dim;
  file.keys.reserve(count);
  file.vectors.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    std::string key;
    if (!(in >> key)) throw std::runtime_error("read_embeddings: truncated file " + path);
    std::vector<double> row(static_cast<std::size_t>(dim));
    for (auto& x : row)
      if (!(in >> x)) throw std::runtime_error("read_embeddings: truncated row in " + path);
    file.keys.push_back(std::move(key));
    file.vectors.push_back(std::move(row));
  }
  return file;
}

// --- similarity datasets -----------------------------------------------------
//
// TSV "word1<TAB>word2<TAB>score"; lines starting with '#' are comments.

inline SimilarityDataset read_similarity_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_similarity_tsv: cannot open " + path);
  SimilarityDataset dataset;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw std::runtime_error("read_similarity_tsv: expected 3 tab-separated fields at " + path +
                               ":" + std::to_string(lineno));
    SimilarityPair pair;
    pair.word1 = line.substr(0, t1);
    pair.word2 = line.substr(t1 + 1, t2 - t1 - 1);
    try {
      pair.human_score = std::stod(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw std::runtime_error("read_similarity_tsv: bad score at " + path + ":" + std::to_string(lineno));
    }
    if (!std::isfinite(pair.human_score))
      throw std::runtime_error("read_similarity_tsv: non-finite score at " + path + ":" + std::to_string(lineno));
    dataset.pairs.push_back(std::move(pair));
  }
  if (dataset.pairs.empty()) throw std::runtime_error("read_similarity_tsv: no pairs in " + path);
  return dataset;
}

inline void write_similarity_tsv(const std::string& path, const SimilarityDataset& dataset) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_similarity_tsv: cannot open " + path);
  for (const auto& pair : dataset.pairs)
    std::fprintf(f, "%s\t%s\t%g\n", pair.word1.c_str(), pair.word2.c_str(), pair.human_score);
  if (std::fclose(f) != 0) throw std::runtime_error("write_similarity_tsv: write failed");
}

// --- labeled corpora ----------------------------------------------------------
//
// TSV "label<TAB>document text", one document per line, aligned with the
// paragraph ids of the training corpus. Class ids are assigned by first
// appearance.

inline LabeledCorpus read_labeled_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_labeled_tsv: cannot open " + path);
  LabeledCorpus corpus;
  std::unordered_map<std::string, int> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    const std::string label = tab == std::string::npos ? line : line.substr(0, tab);
    auto [it, inserted] = ids.emplace(label, corpus.class_count);
    if (inserted) {
      corpus.class_names.push_back(label);
      ++corpus.class_count;
    }
    corpus.labels.push_back(it->second);
  }
  if (corpus.labels.empty()) throw std::runtime_error("read_labeled_tsv: empty file " + path);
  return corpus;
}

// Train/test split: the file lists the line indices (0-based, one per line)
// of the TRAINING documents; every other document is test.
inline std::vector<std::size_t> read_split_indices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_split_indices: cannot open " + path);
  std::vector<std::size_t> indices;
  long long v = 0;
  while (in >> v) {
    if (v < 0) throw std::runtime_error("read_split_indices: negative index in " + path);
    indices.push_back(static_cast<std::size_t>(v));
  }
  if (indices.empty()) throw std::runtime_error("read_split_indices: empty split file " + path);
  return indices;
}

// --- checksums & manifests -----------------------------------------------------

inline std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("fnv1a64_file: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buffer[65536];
  while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buffer[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[19];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

// Everything needed to reproduce a training run, serialized next to the
// output artifacts. Re-executing from a manifest replays the run; with one
// thread the outputs are bit-identical.
struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string corpus_path;
  std::string corpus_checksum;
  TrainConfig config;
  unsigned long long processed_tuples = 0;
  std::vector<double> epoch_seconds;
  std::vector<double> epoch_mean_loss;
  double total_seconds = 0.0;
  std::size_t vocab_size = 0;
  std::size_t doc_count = 0;
};

inline nlohmann::json to_json(const RunManifest& m) {
  return nlohmann::json{
      {"tool", "sphembed"},
      {"version", m.tool_version},
      {"corpus", {{"path", m.corpus_path}, {"checksum_fnv1a64", m.corpus_checksum},
                  {"vocab_size", m.vocab_size}, {"doc_count", m.doc_count}}},
      {"config",
       {{"dim", m.config.dim},
        {"margin", m.config.margin},
        {"negatives", m.config.negatives},
        {"window", m.config.window},
        {"iterations", m.config.iterations},
        {"initial_lr", m.config.initial_lr},
        {"lr_floor_fraction", m.config.lr_floor_fraction},
        {"min_count", m.config.min_count},
        {"threads", m.config.threads},
        {"seed", m.config.seed},
        {"subsample", m.config.subsample},
        {"neg_power", m.config.neg_power},
        {"fixed_window", m.config.fixed_window},
        {"neg_reduce", m.config.neg_reduce == NegReduce::kSum ? "sum" : "mean"}}},
      {"stats",
       {{"processed_tuples", m.processed_tuples},
        {"epoch_seconds", m.epoch_seconds},
        {"epoch_mean_loss", m.epoch_mean_loss},
        {"total_seconds", m.total_seconds}}}};
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << to_json(m).dump(2) << '\n';
  if (!out) throw std::runtime_error("write_manifest: write failed for " + path);
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_manifest: cannot open " + path);
  nlohmann::json j;
  in >> j;
  RunManifest m;
  m.tool_version = j.at("version").get<std::string>();
  m.corpus_path = j.at("corpus").at("path").get<std::string>();
  m.corpus_checksum = j.at("corpus").at("checksum_fnv1a64").get<std::string>();
  m.vocab_size = j.at("corpus").at("vocab_size").get<std::size_t>();
  m.doc_count = j.at("corpus").at("doc_count").get<std::size_t>();
  const auto& c = j.at("config");
  m.config.dim = c.at("dim").get<int>();
  m.config.margin = c.at("margin").get<double>();
  m.config.negatives = c.at("negatives").get<int>();
  m.config.window = c.at("window").get<int>();
  m.config.iterations = c.at("iterations").get<int>();
  m.config.initial_lr = c.at("initial_lr").get<double>();
  m.config.lr_floor_fraction = c.at("lr_floor_fraction").get<double>();
  m.config.min_count = c.at("min_count").get<long long>();
  m.config.threads = c.at("threads").get<int>();
  m.config.seed = c.at("seed").get<std::uint64_t>();
  m.config.subsample = c.at("subsample").get<double>();
  m.config.neg_power = c.at("neg_power").get<double>();
  m.config.fixed_window = c.at("fixed_window").get<bool>();
  m.config.neg_reduce =
      c.at("neg_reduce").get<std::string>() == "mean" ? NegReduce::kMean : NegReduce::kSum;
  const auto& s = j.at("stats");
  m.processed_tuples = s.at("processed_tuples").get<unsigned long long>();
  m.epoch_seconds = s.at("epoch_seconds").get<std::vector<double>>();
  m.epoch_mean_loss = s.at("epoch_mean_loss").get<std::vector<double>>();
  m.total_seconds = s.at("total_seconds").get<double>();
  return m;
}

}  // namespace sphembed
