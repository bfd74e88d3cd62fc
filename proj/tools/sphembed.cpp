// sphembed: train word and paragraph embeddings on the unit hypersphere and
// evaluate them on word similarity, document clustering and k-NN document
// classification.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sphembed/corpus.hpp"
#include "sphembed/eval.hpp"
#include "sphembed/io.hpp"
#include "sphembed/model.hpp"

namespace {

using namespace sphembed;

int env_threads_default() {
  if (const char* env = std::getenv("SPHEMBED_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

struct TrainFlags {
  std::string corpus;
  std::string output = "sphembed";
  std::string save_vocab;
  std::string from_manifest;
  TrainConfig config;
  std::string neg_reduce = "sum";
  bool quiet = false;
};

int run_train(TrainFlags& flags) {
  if (!flags.from_manifest.empty()) {
    RunManifest m = read_manifest(flags.from_manifest);
    if (flags.corpus.empty()) flags.corpus = m.corpus_path;
    flags.config = m.config;
  } else {
    flags.config.neg_reduce = flags.neg_reduce == "mean" ? NegReduce::kMean : NegReduce::kSum;
  }
  flags.config.validate();

  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.corpus_path = flags.corpus;
  manifest.corpus_checksum = fnv1a64_file(flags.corpus);
  manifest.config = flags.config;

  Vocabulary vocab = build_vocabulary(flags.corpus, flags.config.min_count);
  EncodedCorpus corpus = encode_corpus(flags.corpus, vocab);
  manifest.vocab_size = vocab.size();
  manifest.doc_count = corpus.doc_count();
  if (!flags.quiet)
    std::fprintf(stderr, "vocab %zu tokens, %zu documents, %zu retained occurrences\n",
                 vocab.size(), corpus.doc_count(), static_cast<std::size_t>(vocab.total_tokens));

  EpochCallback<float> progress;
  if (!flags.quiet) {
    progress = [](int epoch, const TrainStats& stats, const EmbeddingMatrices<float>&) {
      std::fprintf(stderr, "epoch %d: mean loss %.6f, %.1fs, lr %.6f\n", epoch,
                   stats.epoch_mean_loss.back(), stats.epoch_seconds.back(), stats.final_lr);
    };
  }
  TrainResult<float> result = train<float>(corpus, vocab, flags.config, progress);

  manifest.processed_tuples = result.stats.processed_tuples;
  manifest.epoch_seconds = result.stats.epoch_seconds;
  manifest.epoch_mean_loss = result.stats.epoch_mean_loss;
  manifest.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<std::string> doc_keys(corpus.doc_count());
  for (std::size_t i = 0; i < doc_keys.size(); ++i) doc_keys[i] = std::to_string(i);

  write_embeddings(flags.output + ".word.vec", vocab.id_to_token, result.embeddings.target,
                   flags.config.dim);
  write_embeddings(flags.output + ".context.vec", vocab.id_to_token, result.embeddings.context,
                   flags.config.dim);
  write_embeddings(flags.output + ".doc.vec", doc_keys, result.embeddings.paragraph,
                   flags.config.dim);
  write_manifest(flags.output + ".manifest.json", manifest);
  if (!flags.save_vocab.empty()) dump_vocabulary(vocab, flags.save_vocab);
  return 0;
}

int run_eval_sim(const std::string& embeddings_path, const std::string& dataset_path) {
  const EmbeddingFile file = read_embeddings(embeddings_path);
  const SimilarityDataset dataset = read_similarity_tsv(dataset_path);
  const WordSimilarityReport report = evaluate_word_similarity(file.as_map(), dataset);
  std::printf("# pairs_used\t%zu\t/ %zu\n", report.pairs_used, report.pairs_total);
  std::printf("spearman\t%.6f\t0\n", report.spearman);
  std::printf("coverage\t%.6f\t0\n", report.coverage);
  return 0;
}

struct ClusterFlags {
  std::string doc_embeddings;
  std::string labels;
  int k = 0;  // 0 = number of classes in the labels file
  std::string algorithm = "skmeans";
  int runs = 10;
  std::uint64_t seed = 1;
  std::string nmi_norm = "geometric";
};

int run_eval_cluster(const ClusterFlags& flags) {
  const EmbeddingFile file = read_embeddings(flags.doc_embeddings);
  const LabeledCorpus labeled = read_labeled_tsv(flags.labels);
  if (file.vectors.size() != labeled.labels.size())
    throw std::runtime_error("eval-cluster: embeddings/labels row count mismatch (" +
                             std::to_string(file.vectors.size()) + " vs " +
                             std::to_string(labeled.labels.size()) + ")");
  const int k = flags.k > 0 ? flags.k : labeled.class_count;
  const NmiNorm norm_kind =
      flags.nmi_norm == "arithmetic" ? NmiNorm::kArithmetic : NmiNorm::kGeometric;

  std::vector<std::vector<double>> points = file.vectors;
  if (flags.algorithm == "skmeans")
    for (auto& p : points) normalize<double>({p.data(), p.size()});

  std::vector<ClusteringMetrics> runs;
  runs.reserve(static_cast<std::size_t>(flags.runs));
  for (int r = 0; r < flags.runs; ++r) {
    ClusterConfig config;
    config.seed = flags.seed + static_cast<std::uint64_t>(r);
    const ClusteringResult result = flags.algorithm == "skmeans"
                                        ? spherical_kmeans(points, k, config)
                                        : kmeans(points, k, config);
    runs.push_back(clustering_metrics(result.assignments, labeled.labels, norm_kind));
  }

  auto report = [&](const char* name, auto pick) {
    double mean = 0.0;
    for (const auto& m : runs) mean += pick(m);
    mean /= static_cast<double>(runs.size());
    double var = 0.0;
    for (const auto& m : runs) var += (pick(m) - mean) * (pick(m) - mean);
    const double sd = runs.size() > 1 ? std::sqrt(var / static_cast<double>(runs.size() - 1)) : 0.0;
    std::printf("%s\t%.6f\t%.6f\n", name, mean, sd);
  };
  std::printf("# algorithm\t%s\tk=%d runs=%d\n", flags.algorithm.c_str(), k, flags.runs);
  std::printf("# mi_log_base\te\n");
  std::printf("# nmi_normalization\t%s\n", flags.nmi_norm.c_str());
  report("mi", [](const ClusteringMetrics& m) { return m.mi; });
  report("nmi", [](const ClusteringMetrics& m) { return m.nmi; });
  report("ari", [](const ClusteringMetrics& m) { return m.ari; });
  report("purity", [](const ClusteringMetrics& m) { return m.purity; });
  return 0;
}

struct ClassifyFlags {
  std::string doc_embeddings;
  std::string labels;
  std::string split;
  int k = 3;
};

int run_eval_classify(const ClassifyFlags& flags) {
  const EmbeddingFile file = read_embeddings(flags.doc_embeddings);
  const LabeledCorpus labeled = read_labeled_tsv(flags.labels);
  if (file.vectors.size() != labeled.labels.size())
    throw std::runtime_error("eval-classify: embeddings/labels row count mismatch");
  const std::vector<std::size_t> train_indices = read_split_indices(flags.split);

  std::vector<char> is_train(file.vectors.size(), 0);
  for (std::size_t idx : train_indices) {
    if (idx >= file.vectors.size())
      throw std::runtime_error("eval-classify: split index " + std::to_string(idx) +
                               " out of range");
    is_train[idx] = 1;
  }
  std::vector<std::vector<double>> train_points, test_points;
  std::vector<int> train_labels, test_labels;
  for (std::size_t i = 0; i < file.vectors.size(); ++i) {
    if (is_train[i]) {
      train_points.push_back(file.vectors[i]);
      train_labels.push_back(labeled.labels[i]);
    } else {
      test_points.push_back(file.vectors[i]);
      test_labels.push_back(labeled.labels[i]);
    }
  }
  if (test_points.empty()) throw std::runtime_error("eval-classify: split leaves no test documents");

  const std::vector<int> predictions = knn_classify(train_points, train_labels, test_points, flags.k);
  const F1Scores scores = f1_scores(predictions, test_labels, labeled.class_count);
  std::printf("# knn\tk=%d\ttrain=%zu test=%zu classes=%d\n", flags.k, train_points.size(),
              test_points.size(), labeled.class_count);
  std::printf("macro_f1\t%.6f\t0\n", scores.macro_f1);
  std::printf("micro_f1\t%.6f\t0\n", scores.micro_f1);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spherical word + paragraph embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("sphembed ") + sphembed::kToolVersion);

  TrainFlags train_flags;
  train_flags.config.threads = env_threads_default();
  auto* train_cmd = app.add_subcommand("train", "train embeddings from a one-document-per-line corpus");
  train_cmd->add_option("--corpus", train_flags.corpus, "input corpus, one document per line")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--output", train_flags.output,
                        "output prefix for .word.vec/.context.vec/.doc.vec/.manifest.json");
  train_cmd->add_option("--dim", train_flags.config.dim, "embedding dimension")->capture_default_str();
  train_cmd->add_option("--window", train_flags.config.window, "context window size")->capture_default_str();
  train_cmd->add_option("--margin", train_flags.config.margin, "hinge margin")->capture_default_str();
  train_cmd->add_option("--negatives", train_flags.config.negatives, "negative samples per tuple")
      ->capture_default_str();
  train_cmd->add_option("--lr", train_flags.config.initial_lr, "initial learning rate (linear decay)")
      ->capture_default_str();
  train_cmd->add_option("--iters", train_flags.config.iterations, "training epochs")->capture_default_str();
  train_cmd->add_option("--min-count", train_flags.config.min_count, "discard words rarer than this")
      ->capture_default_str();
  train_cmd->add_option("--threads", train_flags.config.threads,
                        "worker threads (default: $SPHEMBED_THREADS or 1)");
  train_cmd->add_option("--seed", train_flags.config.seed, "seed for all randomness")->capture_default_str();
  train_cmd->add_option("--subsample", train_flags.config.subsample,
                        "frequent-word subsampling threshold, <= 0 disables")
      ->capture_default_str();
  train_cmd->add_option("--neg-power", train_flags.config.neg_power,
                        "negative distribution exponent over counts (0 = uniform)")
      ->capture_default_str();
  train_cmd->add_flag("--fixed-window", train_flags.config.fixed_window,
                      "use the full window instead of a uniform draw in [1, window]");
  train_cmd->add_option("--neg-reduce", train_flags.neg_reduce, "combine negatives by sum or mean")
      ->check(CLI::IsMember({"sum", "mean"}))
      ->capture_default_str();
  train_cmd->add_option("--save-vocab", train_flags.save_vocab, "also dump 'token<TAB>count' lines");
  train_cmd->add_option("--from-manifest", train_flags.from_manifest,
                        "replay corpus and config from a previous run's manifest")
      ->check(CLI::ExistingFile);
  train_cmd->add_flag("--quiet", train_flags.quiet, "suppress progress output");

  std::string sim_embeddings, sim_dataset;
  auto* sim_cmd = app.add_subcommand("eval-sim", "word similarity: Spearman against human scores");
  sim_cmd->add_option("--embeddings", sim_embeddings, "word embedding file")
      ->required()
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--dataset", sim_dataset, "TSV word1<TAB>word2<TAB>score")
      ->required()
      ->check(CLI::ExistingFile);

  ClusterFlags cluster_flags;
  auto* cluster_cmd = app.add_subcommand("eval-cluster", "document clustering against gold labels");
  cluster_cmd->add_option("--doc-embeddings", cluster_flags.doc_embeddings, "paragraph embedding file")
      ->required()
      ->check(CLI::ExistingFile);
  cluster_cmd->add_option("--labels", cluster_flags.labels, "TSV label<TAB>document text")
      ->required()
      ->check(CLI::ExistingFile);
  cluster_cmd->add_option("--k", cluster_flags.k, "clusters (default: number of classes)");
  cluster_cmd->add_option("--alg", cluster_flags.algorithm, "clustering algorithm")
      ->check(CLI::IsMember({"kmeans", "skmeans"}))
      ->capture_default_str();
  cluster_cmd->add_option("--runs", cluster_flags.runs, "restarts with distinct seeds")
      ->capture_default_str();
  cluster_cmd->add_option("--seed", cluster_flags.seed, "base seed")->capture_default_str();
  cluster_cmd->add_option("--nmi-norm", cluster_flags.nmi_norm, "NMI normalization")
      ->check(CLI::IsMember({"geometric", "arithmetic"}))
      ->capture_default_str();

  ClassifyFlags classify_flags;
  auto* classify_cmd = app.add_subcommand("eval-classify", "k-NN document classification");
  classify_cmd->add_option("--doc-embeddings", classify_flags.doc_embeddings, "paragraph embedding file")
      ->required()
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("--labels", classify_flags.labels, "TSV label<TAB>document text")
      ->required()
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("--split", classify_flags.split,
                           "file of 0-based training line indices, one per line")
      ->required()
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("--k", classify_flags.k, "neighbors")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      if (train_flags.corpus.empty() && train_flags.from_manifest.empty())
        throw std::runtime_error("train: --corpus or --from-manifest is required");
      return run_train(train_flags);
    }
    if (sim_cmd->parsed()) return run_eval_sim(sim_embeddings, sim_dataset);
    if (cluster_cmd->parsed()) return run_eval_cluster(cluster_flags);
    if (classify_cmd->parsed()) return run_eval_classify(classify_flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sphembed: %s\n", e.what());
    return 1;
  }
  return 0;
}
