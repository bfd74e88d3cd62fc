#include <catch2/catch.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "sphembed/corpus.hpp"
#include "sphembed/model.hpp"
#include "sphembed/rng.hpp"
#include "synthetic.hpp"

using namespace sphembed;

namespace {

std::vector<double> random_unit_vec(Rng& rng, int p) {
  return testing::random_direction(rng, p);
}

using Span = std::span<const double>;

double loss_of(const std::vector<double>& u, const std::vector<double>& v,
               const std::vector<double>& d, const std::vector<double>& un, double m) {
  return loss<double>({u.data(), u.size()}, {v.data(), v.size()}, {d.data(), d.size()},
                      {un.data(), un.size()}, m);
}

struct TempCorpus {
  std::filesystem::path path;
  explicit TempCorpus(const std::string& contents) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("sphembed_model_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::ofstream out(path);
    out << contents;
  }
  ~TempCorpus() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("initialization puts every row on the sphere, deterministically per seed", "[model]") {
  const auto m = init_embeddings<double>(50, 20, 16, 7);
  for (std::size_t i = 0; i < 50; ++i) {
    REQUIRE(norm<double>(m.target_row(i)) == Approx(1.0).margin(1e-12));
    REQUIRE(norm<double>(m.context_row(i)) == Approx(1.0).margin(1e-12));
  }
  for (std::size_t i = 0; i < 20; ++i)
    REQUIRE(norm<double>(m.paragraph_row(i)) == Approx(1.0).margin(1e-12));

  const auto same = init_embeddings<double>(50, 20, 16, 7);
  CHECK(m.target == same.target);
  const auto other = init_embeddings<double>(50, 20, 16, 8);
  CHECK(m.target != other.target);
}

TEST_CASE("random rows are nearly orthogonal in high dimension", "[model]") {
  const auto m = init_embeddings<double>(1000, 1, 100, 3);
  double mean_abs_cos = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < 1000; i += 7)
    for (std::size_t j = i + 1; j < 1000; j += 13) {
      mean_abs_cos += std::abs(dot<double>(m.target_row(i), m.target_row(j)));
      ++pairs;
    }
  mean_abs_cos /= pairs;
  CHECK(mean_abs_cos < 0.3);  // O(1/sqrt(p)) at p=100 is ~0.08
}

TEST_CASE("hinge loss on reference tuples", "[model]") {
  const std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
  // v=u=(1,0), d=u'=(0,1): 0.15 - 1 - 0 + 0 + 1 = 0.15
  CHECK(loss_of(e1, e1, e2, e2, 0.15) == Approx(0.15));
  // all four cosines zero -> margin only (u' = u is orthogonal to v and d)
  const std::vector<double> e3{0.0, 0.0, 1.0};
  const std::vector<double> a{1.0, 0.0, 0.0}, b{0.0, 1.0, 0.0};
  CHECK(loss_of(a, b, e3, a, 0.15) == Approx(0.15));

  // margin fully satisfied: hinge inactive
  const std::vector<double> neg{0.0, -1.0};
  CHECK(loss_of(e1, e1, e1, neg, 0.15) == 0.0);
}

TEST_CASE("euclidean gradients vanish when the hinge is inactive", "[model]") {
  const std::vector<double> e1{1.0, 0.0}, neg{0.0, -1.0};
  const auto g = euclidean_gradients<double>({e1.data(), 2}, {e1.data(), 2}, {e1.data(), 2},
                                             {neg.data(), 2}, 0.15);
  CHECK_FALSE(g.active);
  for (double x : g.g_u) CHECK(x == 0.0);
  for (double x : g.g_v) CHECK(x == 0.0);
  for (double x : g.g_d) CHECK(x == 0.0);
  for (double x : g.g_uneg) CHECK(x == 0.0);
}

TEST_CASE("euclidean gradients match central finite differences", "[model]") {
  // the loss is multilinear in each argument, so central differences at
  // h = 1e-6 agree to near machine precision on active tuples
  Rng rng(99);
  const double m = 0.15, h = 1e-6;
  for (int p : {2, 10, 100}) {
    int checked = 0;
    while (checked < 334) {
      auto u = random_unit_vec(rng, p), v = random_unit_vec(rng, p);
      auto d = random_unit_vec(rng, p), un = random_unit_vec(rng, p);
      const double base = loss_of(u, v, d, un, m);
      if (base <= 1e-3) continue;  // keep clear of the hinge kink
      ++checked;
      const auto g = euclidean_gradients<double>({u.data(), u.size()}, {v.data(), v.size()},
                                                 {d.data(), d.size()}, {un.data(), un.size()}, m);
      REQUIRE(g.active);

      auto check_grad = [&](std::vector<double>& var, const std::vector<double>& grad) {
        for (std::size_t i = 0; i < var.size(); i += 3) {  // a sample of coordinates
          const double keep = var[i];
          var[i] = keep + h;
          const double up = loss_of(u, v, d, un, m);
          var[i] = keep - h;
          const double down = loss_of(u, v, d, un, m);
          var[i] = keep;
          const double fd = (up - down) / (2.0 * h);
          const double scale = std::max(1.0, std::abs(grad[i]));
          REQUIRE(std::abs(fd - grad[i]) <= 1e-5 * scale);
        }
      };
      check_grad(u, g.g_u);
      check_grad(v, g.g_v);
      check_grad(d, g.g_d);
      check_grad(un, g.g_uneg);

      // analytic bound on every output
      for (const auto* grad : {&g.g_u, &g.g_v, &g.g_d, &g.g_uneg})
        REQUIRE(norm<double>({grad->data(), grad->size()}) <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("train step leaves parameters untouched on inactive tuples", "[model]") {
  auto m = init_embeddings<double>(10, 4, 8, 21);
  // craft an inactive tuple: u = v = d, negative antipodal
  std::copy(m.target_row(0).begin(), m.target_row(0).end(), m.context_row(1).begin());
  std::copy(m.target_row(0).begin(), m.target_row(0).end(), m.paragraph_row(2).begin());
  for (int i = 0; i < 8; ++i) m.target_row(3)[static_cast<std::size_t>(i)] = -m.target_row(0)[static_cast<std::size_t>(i)];

  const auto before = m;
  TrainingTuple tuple{0, 1, 2, {3, 3}};
  StepScratch<double> scratch;
  const double step_loss = train_step<double>(m, tuple, 0.05, 0.15, NegReduce::kSum, scratch);
  CHECK(step_loss == 0.0);
  CHECK(m.target == before.target);
  CHECK(m.context == before.context);
  CHECK(m.paragraph == before.paragraph);
}

TEST_CASE("train step reproduces the composition of the geometry ops", "[model]") {
  // single active negative in p=2: replay euclidean_gradients + update_point
  auto m = init_embeddings<double>(4, 2, 2, 5);
  TrainingTuple tuple{0, 1, 0, {2}};

  const std::vector<double> u0(m.target_row(0).begin(), m.target_row(0).end());
  const std::vector<double> v0(m.context_row(1).begin(), m.context_row(1).end());
  const std::vector<double> d0(m.paragraph_row(0).begin(), m.paragraph_row(0).end());
  const std::vector<double> n0(m.target_row(2).begin(), m.target_row(2).end());
  const double margin = 1.9;  // strong margin so the hinge is active
  const double eta = 0.1;

  const auto g = euclidean_gradients<double>({u0.data(), 2}, {v0.data(), 2}, {d0.data(), 2},
                                             {n0.data(), 2}, margin);
  REQUIRE(g.active);
  const auto u_ref = update_point(UnitVector<double>::from_unit(u0), Span{g.g_u.data(), 2}, eta, false);
  const auto v_ref = update_point(UnitVector<double>::from_unit(v0), Span{g.g_v.data(), 2}, eta, false);
  const auto d_ref = update_point(UnitVector<double>::from_unit(d0), Span{g.g_d.data(), 2}, eta, false);
  const auto n_ref = update_point(UnitVector<double>::from_unit(n0), Span{g.g_uneg.data(), 2}, eta, true);

  StepScratch<double> scratch;
  const std::vector<double> bystander_u(m.target_row(3).begin(), m.target_row(3).end());
  const std::vector<double> bystander_d(m.paragraph_row(1).begin(), m.paragraph_row(1).end());
  const double step_loss = train_step<double>(m, tuple, eta, margin, NegReduce::kSum, scratch);
  REQUIRE(step_loss > 0.0);
  for (int i = 0; i < 2; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    CHECK(m.target_row(0)[idx] == Approx(u_ref.coords[idx]).margin(1e-12));
    CHECK(m.context_row(1)[idx] == Approx(v_ref.coords[idx]).margin(1e-12));
    CHECK(m.paragraph_row(0)[idx] == Approx(d_ref.coords[idx]).margin(1e-12));
    CHECK(m.target_row(2)[idx] == Approx(n_ref.coords[idx]).margin(1e-12));
    // rows outside the tuple stay bit-identical
    CHECK(m.target_row(3)[idx] == bystander_u[idx]);
    CHECK(m.paragraph_row(1)[idx] == bystander_d[idx]);
  }
}

TEST_CASE("train step keeps touched rows unit-norm", "[model]") {
  auto m = init_embeddings<float>(30, 6, 24, 31);
  Rng rng(17);
  StepScratch<float> scratch;
  for (int iter = 0; iter < 500; ++iter) {
    TrainingTuple tuple;
    tuple.center = static_cast<int>(rng.next_below(30));
    tuple.context = static_cast<int>(rng.next_below(30));
    tuple.doc = static_cast<int>(rng.next_below(6));
    tuple.negatives = {static_cast<int>(rng.next_below(30)), static_cast<int>(rng.next_below(30))};
    train_step<float>(m, tuple, 0.04f, 0.15f, NegReduce::kSum, scratch);
    REQUIRE(norm<float>(m.target_row(static_cast<std::size_t>(tuple.center))) == Approx(1.0).margin(1e-6));
    REQUIRE(norm<float>(m.context_row(static_cast<std::size_t>(tuple.context))) == Approx(1.0).margin(1e-6));
    REQUIRE(norm<float>(m.paragraph_row(static_cast<std::size_t>(tuple.doc))) == Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("an active positive update increases the context-center cosine", "[model]") {
  auto m = init_embeddings<double>(6, 2, 12, 57);
  TrainingTuple tuple{0, 1, 0, {4}};
  const double before = dot<double>(m.target_row(0), m.context_row(1));

  StepScratch<double> scratch;
  const double step_loss = train_step<double>(m, tuple, 1e-3, 1.9, NegReduce::kSum, scratch);
  REQUIRE(step_loss > 0.0);  // margin 1.9 forces the hinge active
  const double after = dot<double>(m.target_row(0), m.context_row(1));
  CHECK(after > before);
}

TEST_CASE("mean reduction scales the update by the negative count", "[model]") {
  auto m_sum = init_embeddings<double>(8, 2, 6, 77);
  auto m_mean = m_sum;
  TrainingTuple tuple{0, 1, 0, {3, 3}};  // identical negatives: mean = sum / 2
  StepScratch<double> scratch;
  const double loss_sum = train_step<double>(m_sum, tuple, 0.02, 1.9, NegReduce::kSum, scratch);
  const double loss_mean = train_step<double>(m_mean, tuple, 0.02, 1.9, NegReduce::kMean, scratch);
  CHECK(loss_mean == Approx(0.5 * loss_sum));
  // mean produces a strictly smaller parameter displacement
  double disp_sum = 0.0, disp_mean = 0.0;
  const auto init = init_embeddings<double>(8, 2, 6, 77);
  for (std::size_t i = 0; i < m_sum.context.size(); ++i) {
    disp_sum += std::abs(m_sum.context[i] - init.context[i]);
    disp_mean += std::abs(m_mean.context[i] - init.context[i]);
  }
  CHECK(disp_mean < disp_sum);
}

TEST_CASE("zero iterations returns the initialization unchanged", "[model]") {
  TempCorpus corpus("a b a b\nb a\n");
  const Vocabulary vocab = build_vocabulary(corpus.path.string(), 1);
  const EncodedCorpus encoded = encode_corpus(corpus.path.string(), vocab);
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.iterations = 0;
  cfg.seed = 3;
  const auto result = train<float>(encoded, vocab, cfg);
  const auto init = init_embeddings<float>(vocab.size(), encoded.doc_count(), 8, 3);
  CHECK(result.embeddings.target == init.target);
  CHECK(result.embeddings.context == init.context);
  CHECK(result.embeddings.paragraph == init.paragraph);
  CHECK(result.stats.processed_tuples == 0);
}

TEST_CASE("single-threaded training is bit-reproducible", "[model]") {
  TempCorpus corpus("a b c d e a b c\nb c d a e e\nd e a b c d\n");
  const Vocabulary vocab = build_vocabulary(corpus.path.string(), 1);
  const EncodedCorpus encoded = encode_corpus(corpus.path.string(), vocab);

  TrainConfig cfg;
  cfg.dim = 16;
  cfg.iterations = 3;
  cfg.window = 3;
  cfg.seed = 11;
  cfg.threads = 1;

  const auto run1 = train<float>(encoded, vocab, cfg);
  const auto run2 = train<float>(encoded, vocab, cfg);
  REQUIRE(run1.embeddings.target.size() == run2.embeddings.target.size());
  CHECK(std::memcmp(run1.embeddings.target.data(), run2.embeddings.target.data(),
                    run1.embeddings.target.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(run1.embeddings.context.data(), run2.embeddings.context.data(),
                    run1.embeddings.context.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(run1.embeddings.paragraph.data(), run2.embeddings.paragraph.data(),
                    run1.embeddings.paragraph.size() * sizeof(float)) == 0);
  CHECK(run1.stats.processed_tuples == run2.stats.processed_tuples);
  CHECK(run1.stats.epoch_mean_loss == run2.stats.epoch_mean_loss);
}

TEST_CASE("row norms stay within tolerance at epoch boundaries, any thread count", "[model]") {
  const auto corpus_data = testing::generate_corpus(
      {.clusters = 2, .docs_per_cluster = 20, .vocab = 80, .dim = 12, .tokens_per_doc = 40, .seed = 5});
  TempCorpus corpus([&] {
    std::string s;
    for (const auto& line : corpus_data.lines) s += line + "\n";
    return s;
  }());
  const Vocabulary vocab = build_vocabulary(corpus.path.string(), 1);
  const EncodedCorpus encoded = encode_corpus(corpus.path.string(), vocab);

  for (int threads : {1, 2}) {
    TrainConfig cfg;
    cfg.dim = 12;
    cfg.iterations = 2;
    cfg.threads = threads;
    cfg.seed = 13;
    bool checked = false;
    const auto result = train<float>(
        encoded, vocab, cfg,
        [&](int, const TrainStats&, const EmbeddingMatrices<float>& m) {
          checked = true;
          for (std::size_t i = 0; i < m.vocab_size; ++i) {
            REQUIRE(norm<float>(m.target_row(i)) == Approx(1.0).margin(1e-5));
            REQUIRE(norm<float>(m.context_row(i)) == Approx(1.0).margin(1e-5));
          }
          for (std::size_t i = 0; i < m.doc_count; ++i)
            REQUIRE(norm<float>(m.paragraph_row(i)) == Approx(1.0).margin(1e-5));
        });
    CHECK(checked);
    CHECK(result.stats.processed_tuples > 0);
  }
}

TEST_CASE("loss decreases and the gradient shrinks on a model-generated corpus", "[model]") {
  // small instance of the convergence check (the full-size one runs in the
  // acceptance suite)
  const auto corpus_data = testing::generate_corpus({.clusters = 3,
                                                     .docs_per_cluster = 30,
                                                     .vocab = 200,
                                                     .dim = 10,
                                                     .cluster_kappa = 5.0,
                                                     .tokens_per_doc = 50,
                                                     .gen_concentration = 15.0,
                                                     .seed = 41});
  TempCorpus corpus([&] {
    std::string s;
    for (const auto& line : corpus_data.lines) s += line + "\n";
    return s;
  }());
  const Vocabulary vocab = build_vocabulary(corpus.path.string(), 1);
  const EncodedCorpus encoded = encode_corpus(corpus.path.string(), vocab);

  TrainConfig cfg;
  cfg.dim = 10;
  cfg.iterations = 6;
  cfg.threads = 1;
  cfg.seed = 1;
  cfg.subsample = 0.0;

  double grad_epoch1 = 0.0;
  const auto result = train<float>(
      encoded, vocab, cfg,
      [&](int epoch, const TrainStats&, const EmbeddingMatrices<float>& m) {
        if (epoch == 1)
          grad_epoch1 = batch_riemannian_grad_norm<float>(m, encoded, vocab, cfg, 999, 3000);
      });

  const auto& losses = result.stats.epoch_mean_loss;
  REQUIRE(losses.size() == 6);
  for (std::size_t e = 1; e < 4; ++e) REQUIRE(losses[e] < losses[e - 1]);

  const double grad_final =
      batch_riemannian_grad_norm<float>(result.embeddings, encoded, vocab, cfg, 999, 3000);
  CHECK(grad_final < grad_epoch1);
}

TEST_CASE("config validation rejects out-of-range fields", "[model]") {
  TrainConfig cfg;
  cfg.margin = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.initial_lr = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.dim = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  CHECK_NOTHROW(cfg.validate());
}
