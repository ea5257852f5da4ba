#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "twinpurify/models/embedder.hpp"
#include "twinpurify/nn/gradcheck.hpp"
#include "twinpurify/synth_cohort.hpp"

using namespace twinpurify;
using namespace twinpurify::models;
using Catch::Matchers::ContainsSubstring;

namespace {

SynthCohort tiny_cohort(std::uint64_t seed = 1) {
  SynthConfig c;
  c.n_genes = 200;
  c.n_tumor = 60;
  c.n_normal = 12;
  c.block_size = 20;
  c.seed = seed;
  return generate_cohort(c);
}

TrainConfig tiny_config(std::size_t epochs = 15) {
  TrainConfig t;
  t.encoder_hidden = {32, 16};
  t.projector_hidden = {16};
  t.projector_dim = 8;
  t.epochs = epochs;
  t.batch_size = 16;
  t.seed = 4;
  return t;
}

Matrix normal_pool(const ExpressionMatrix& m) { return m.select_rows(m.normal_indices()).values; }

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += v[i];
  return s / static_cast<double>(to - from);
}

}  // namespace

TEST_CASE("batch_normalize_columns", "[models]") {
  Matrix z(2, 1);
  z << 1, -1;
  const auto r = batch_normalize_columns(z);
  CHECK(r.z(0, 0) == 1.0);
  CHECK(r.z(1, 0) == -1.0);
  CHECK_FALSE(r.any_degenerate());

  Matrix c(3, 2);
  c << 5, 1, 5, 2, 5, 4;
  const auto d = batch_normalize_columns(c);
  CHECK(d.degenerate == std::vector<bool>{true, false});
  CHECK(d.z.col(0).isZero(0.0));

  const auto rnd = batch_normalize_columns(tp_test::random_matrix(30, 5, 2, 3.0));
  for (Eigen::Index j = 0; j < 5; ++j) {
    CHECK(std::abs(rnd.z.col(j).mean()) < 1e-12);
    CHECK(std::abs(rnd.z.col(j).squaredNorm() / 30.0 - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(batch_normalize_columns(Matrix::Ones(1, 3)), ValidationError);
}

TEST_CASE("cross_correlation examples", "[models]") {
  Matrix q(4, 2);
  q << 1, 1, 1, -1, -1, 1, -1, -1;
  CHECK((cross_correlation(q, q) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

  const Matrix z = batch_normalize_columns(tp_test::random_matrix(16, 3, 3)).z;
  const Matrix cn = cross_correlation(z, -z);
  CHECK((cn + cross_correlation(z, z)).cwiseAbs().maxCoeff() < 1e-15);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(cn(i, i) + 1.0) < 1e-12);

  // B=2 by hand: column norms are all sqrt(2); C_ij = sum_b z1_bi z2_bj / 2.
  Matrix z1(2, 2), z2(2, 2), expected(2, 2);
  z1 << 1, 1, -1, -1;
  z2 << 1, -1, -1, 1;
  expected << 1, -1, 1, -1;
  CHECK((cross_correlation(z1, z2) - expected).cwiseAbs().maxCoeff() < 1e-12);

  Matrix zero = Matrix::Zero(3, 2);
  zero.col(0) << 1, 0, -1;
  CHECK_THROWS_AS(cross_correlation(zero, zero), NumericalError);
  CHECK_THROWS_AS(cross_correlation(Matrix::Ones(3, 2), Matrix::Ones(4, 2)), ValidationError);
}

TEST_CASE("normalized self-correlation has a unit diagonal", "[models]") {
  for (unsigned seed = 0; seed < 100; ++seed) {
    const Matrix z = batch_normalize_columns(tp_test::random_matrix(8 + seed % 7, 1 + seed % 6, seed)).z;
    const Matrix c = cross_correlation(z, z);
    CHECK((c.diagonal().array() - 1.0).abs().maxCoeff() < 1e-9);
    CHECK(c.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("tp_loss fixtures", "[models]") {
  CHECK(tp_loss(Matrix::Identity(5, 5), 54.9).value == 0.0);
  CHECK(std::abs(tp_loss(Matrix::Zero(4, 4), 54.9).value - 4.0) < 1e-12);
  Matrix c(2, 2);
  c << 1, 0.5, 0.5, 1;
  CHECK(std::abs(tp_loss(c, 54.9).value - 27.45) < 1e-12);
  CHECK_THROWS_AS(tp_loss(Matrix::Zero(2, 3), 1.0), ValidationError);

  // dL/dC against differences of the closed form.
  const Matrix r = tp_test::random_matrix(3, 3, 5, 0.5);
  const auto lv = tp_loss(r, 7.0);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      Matrix up = r, down = r;
      up(i, j) += 1e-6;
      down(i, j) -= 1e-6;
      CHECK(std::abs((tp_loss(up, 7.0).value - tp_loss(down, 7.0).value) / 2e-6 - lv.grad(i, j)) < 1e-6);
    }
}

TEST_CASE("loss is invariant to a shared latent permutation", "[models]") {
  const Matrix p1 = tp_test::random_matrix(12, 4, 6), p2 = tp_test::random_matrix(12, 4, 7);
  const LossConfig cfg{.lambda = 3.0};
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
  perm.indices() << 2, 0, 3, 1;
  const double a = pair_objective(p1, p2, cfg).loss;
  const double b = pair_objective(p1 * perm, p2 * perm, cfg).loss;
  CHECK(std::abs(a - b) < 1e-12 * std::max(1.0, a));
}

TEST_CASE("pair objective gradient matches central differences", "[models]") {
  const Matrix p1 = tp_test::random_matrix(6, 3, 8), p2 = tp_test::random_matrix(6, 3, 9);
  const LossConfig cfg{.lambda = 5.0};
  const auto po = pair_objective(p1, p2, cfg);
  Matrix a = p1, b = p2;
  std::vector<nn::ParamView> views{{"p1", nn::as_span(a)}, {"p2", nn::as_span(b)}};
  const std::vector<std::vector<double>> analytic{{po.grad1.data(), po.grad1.data() + po.grad1.size()},
                                                  {po.grad2.data(), po.grad2.data() + po.grad2.size()}};
  const auto rep = nn::finite_diff_check([&] { return pair_objective(a, b, cfg).loss; }, views, analytic);
  CHECK(rep.max_relative_error < 1e-6);
}

TEST_CASE("twin-view training", "[models]") {
  const auto coh = tiny_cohort();
  const auto pool = normal_pool(coh.matrix);
  const auto cfg = tiny_config(30);
  const auto st = train_twinpurify(coh.matrix, pool, cfg, MixtureSpec{}, LossConfig{.lambda = 10.0});
  const auto& trace = st.report.loss_trace;
  REQUIRE(trace.size() == 30);
  CHECK(mean_of(trace, 25, 30) < mean_of(trace, 0, 5));

  const auto again = train_twinpurify(coh.matrix, pool, cfg, MixtureSpec{}, LossConfig{.lambda = 10.0});
  CHECK(again.report.loss_trace == trace);

  // Resuming for more epochs continues the same run.
  auto half_cfg = cfg;
  half_cfg.epochs = 15;
  const auto half = train_twinpurify(coh.matrix, pool, half_cfg, MixtureSpec{}, LossConfig{.lambda = 10.0});
  const auto rest = train_twinpurify(coh.matrix, pool, half_cfg, MixtureSpec{}, LossConfig{.lambda = 10.0}, &half);
  CHECK(rest.report.loss_trace == trace);

  auto big = cfg;
  big.batch_size = 61;
  CHECK_THROWS_WITH(train_twinpurify(coh.matrix, pool, big, MixtureSpec{}, LossConfig{}),
                    ContainsSubstring("batch size"));
}

TEST_CASE("encode", "[models]") {
  const auto coh = tiny_cohort();
  const auto st =
      train_twinpurify(coh.matrix, normal_pool(coh.matrix), tiny_config(2), MixtureSpec{}, LossConfig{});
  const Matrix e1 = encode(st.model, coh.matrix);
  CHECK(e1.rows() == static_cast<Eigen::Index>(coh.matrix.n_samples()));
  CHECK(e1.cols() == 4);
  CHECK(encode(st.model, coh.matrix) == e1);

  auto dup = coh.matrix.select_rows({3, 3});
  const Matrix ed = encode(st.model, dup);
  CHECK(ed.row(0) == ed.row(1));

  auto permuted = coh.matrix;
  std::swap(permuted.genes[0], permuted.genes[1]);
  CHECK_THROWS_WITH(encode(st.model, permuted), ContainsSubstring("gene-order"));
}

TEST_CASE("bt-noise views collapse to the input as the noise vanishes", "[models]") {
  Rng rng = make_stream(3);
  const auto cfg = tiny_config();
  const nn::Mlp enc = nn::Mlp::initialized(cfg.encoder_spec(10, 4), "encoder", rng);
  const nn::Mlp proj = nn::Mlp::initialized(cfg.projector_spec(), "projector", rng);
  const Matrix x = tp_test::random_matrix(16, 10, 4);
  double prev_gap = 1.0;
  for (double sd : {1e-1, 1e-3, 1e-6}) {
    const Matrix v1 = x + tp_test::random_matrix(16, 10, 5, sd);
    const Matrix v2 = x + tp_test::random_matrix(16, 10, 6, sd);
    const auto ev = evaluate_pair(enc, proj, v1, v2, LossConfig{}, false);
    const double gap = (ev.objective.c.diagonal().array() - 1.0).abs().maxCoeff();
    CHECK(gap <= prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-6);

  const auto coh = tiny_cohort();
  const auto st = train_bt_noise(coh.matrix, tiny_config(30), NoiseConfig{}, LossConfig{.lambda = 10.0});
  CHECK(mean_of(st.report.loss_trace, 25, 30) < mean_of(st.report.loss_trace, 0, 5));
  CHECK(train_bt_noise(coh.matrix, tiny_config(30), NoiseConfig{}, LossConfig{.lambda = 10.0}).report.loss_trace ==
        st.report.loss_trace);
  CHECK_THROWS_AS(train_bt_noise(coh.matrix, tiny_config(), NoiseConfig{.noise_sd = 0.0}, LossConfig{}),
                  ValidationError);
}

TEST_CASE("pca", "[models]") {
  SECTION("rank-one data reconstructs exactly") {
    Eigen::VectorXd dir(4);
    dir << 1, -2, 0.5, 3;
    Matrix x(6, 4);
    for (Eigen::Index i = 0; i < 6; ++i) x.row(i) = (0.7 * static_cast<double>(i) - 1.0) * dir.transpose();
    x.rowwise() += Eigen::RowVectorXd::Constant(4, 2.0);
    const auto m = pca_fit(tp_test::make_matrix(x), 1);
    const Matrix recon = (m.embed(x) * m.components.transpose()).rowwise() + m.mean.transpose();
    CHECK((recon - x).cwiseAbs().maxCoeff() < 1e-10);
  }
  SECTION("components are orthonormal and scores match the covariance oracle") {
    const Matrix x = tp_test::random_matrix(5, 3, 11);
    const auto m = pca_fit(tp_test::make_matrix(x), 2);
    CHECK((m.components.transpose() * m.components - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
    const Matrix scores = m.embed(x);
    CHECK((scores - tp_test::oracle_pca_scores(x, 2, scores)).cwiseAbs().maxCoeff() < 1e-8);
  }
  SECTION("score variances equal the top eigenvalues") {
    const Matrix x = tp_test::random_matrix(30, 8, 12);
    const auto m = pca_fit(tp_test::make_matrix(x), 3);
    const Matrix s = m.embed(x);
    const auto [vals, vecs] = tp_test::jacobi_eigen((x.rowwise() - x.colwise().mean()).transpose() *
                                                    (x.rowwise() - x.colwise().mean()) / 29.0);
    for (Eigen::Index k = 0; k < 3; ++k) {
      const double var = (s.col(k).array() - s.col(k).mean()).square().sum() / 29.0;
      CHECK(std::abs(var - vals[k]) < 1e-6);
      CHECK(std::abs(m.explained_variance[k] - vals[k]) < 1e-6);
    }
  }
  SECTION("validation") {
    const auto data = tp_test::make_matrix(tp_test::random_matrix(5, 3, 1));
    CHECK_THROWS_AS(pca_fit(data, 4), ValidationError);
    CHECK_THROWS_AS(pca_fit(data, 0), ValidationError);
    auto other = data;
    other.genes = {"G2", "G1", "G0"};
    CHECK_THROWS_AS(pca_transform(pca_fit(data, 2), other), ValidationError);
  }
}

TEST_CASE("autoencoders", "[models]") {
  CHECK(vae_kl(Matrix::Zero(3, 4), Matrix::Zero(3, 4)).isZero(0.0));
  Matrix mu(1, 1), lv(1, 1);
  mu << 1.0;
  lv << 0.0;
  CHECK(vae_kl(mu, lv)[0] == 0.5);

  // Rank-one data is reconstructed almost perfectly through the bottleneck.
  std::mt19937_64 g(2);
  std::normal_distribution<double> n01;
  Eigen::VectorXd dir(20);
  for (auto& v : dir) v = n01(g);
  Matrix x(64, 20);
  for (Eigen::Index i = 0; i < 64; ++i) x.row(i) = n01(g) * dir.transpose();
  auto cfg = tiny_config(300);
  cfg.adam.learning_rate = 3e-3;
  const auto data = tp_test::make_matrix(x);
  const auto ae = train_autoencoder(data, cfg, AutoencoderVariant::AE);
  CHECK(ae.loss_trace.back() < 0.05);
  CHECK(ae.loss_trace.back() < 0.1 * ae.loss_trace.front());
  const auto ae2 = train_autoencoder(data, cfg, AutoencoderVariant::AE);
  CHECK(ae2.loss_trace == ae.loss_trace);

  auto vcfg = tiny_config(5);
  const auto vae = train_autoencoder(data, vcfg, AutoencoderVariant::VAE);
  CHECK(vae.model.encoder.spec.output_width() == 8);
  CHECK(encode(vae.model, data).cols() == 4);
  CHECK(train_autoencoder(data, vcfg, AutoencoderVariant::VAE).loss_trace == vae.loss_trace);

  vcfg.batch_size = 65;
  CHECK_THROWS_AS(train_autoencoder(data, vcfg, AutoencoderVariant::AE), ValidationError);
}

TEST_CASE("every model kind survives a checkpoint round trip", "[models]") {
  const auto coh = tiny_cohort();
  const auto cfg = tiny_config(2);
  std::vector<EmbeddingModel> all;
  all.emplace_back(train_twinpurify(coh.matrix, normal_pool(coh.matrix), cfg, MixtureSpec{}, LossConfig{}).model);
  all.emplace_back(train_bt_noise(coh.matrix, cfg, NoiseConfig{}, LossConfig{}).model);
  all.emplace_back(train_autoencoder(coh.matrix, cfg, AutoencoderVariant::AE).model);
  all.emplace_back(train_autoencoder(coh.matrix, cfg, AutoencoderVariant::VAE).model);
  all.emplace_back(pca_fit(coh.matrix, 4));
  const auto dir = tp_test::scratch_dir("models_ckpt");
  for (const auto& m : all) {
    const auto path = dir / (to_string(kind_of(m)) + ".ckpt");
    save_model(m, path);
    const auto back = load_model(path);
    CHECK(kind_of(back) == kind_of(m));
    CHECK(embed(back, coh.matrix) == embed(m, coh.matrix));
  }
  CHECK(parse_model_kind("VAE") == ModelKind::VAE);
  CHECK_THROWS_AS(parse_model_kind("SimCLR"), ValidationError);
}
