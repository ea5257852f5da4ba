#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "twinpurify/eval/dilution.hpp"
#include "twinpurify/models/pca.hpp"
#include "twinpurify/synth_cohort.hpp"

using namespace twinpurify;
using namespace twinpurify::eval;

namespace {

std::vector<std::string> repeat(std::initializer_list<std::pair<const char*, int>> spec) {
  std::vector<std::string> out;
  for (auto [label, n] : spec)
    for (int i = 0; i < n; ++i) out.emplace_back(label);
  return out;
}

}  // namespace

TEST_CASE("logistic regression fits", "[eval]") {
  SECTION("separable toy set") {
    Eigen::MatrixXd x(8, 2);
    x << 0, 0, 0.2, 0.1, 0.1, 0.3, 0.3, 0.2, 2, 2, 2.1, 1.8, 1.9, 2.2, 2.3, 2.1;
    const auto y = repeat({{"A", 4}, {"B", 4}});
    const auto m = fit_multinomial_lr(x, y, {.l2 = 1e-4});
    CHECK(m.predict(x) == y);
  }
  SECTION("all-zero features give the empirical frequencies") {
    const auto y = repeat({{"A", 2}, {"B", 5}, {"C", 3}});
    const auto m = fit_multinomial_lr(Eigen::MatrixXd::Zero(10, 3), y);
    const Eigen::MatrixXd p = m.predict_proba(Eigen::MatrixXd::Zero(1, 3));
    CHECK(std::abs(p(0, 0) - 0.2) < 1e-6);
    CHECK(std::abs(p(0, 1) - 0.5) < 1e-6);
    CHECK(std::abs(p(0, 2) - 0.3) < 1e-6);
  }
  SECTION("duplicating every sample keeps the decision function") {
    const Eigen::MatrixXd x = tp_test::random_matrix(30, 3, 4);
    std::vector<std::string> y;
    for (Eigen::Index i = 0; i < 30; ++i) y.push_back(x(i, 0) + 0.5 * x(i, 1) > 0 ? "P" : (i % 3 ? "N" : "Z"));
    Eigen::MatrixXd xx(60, 3);
    xx << x, x;
    auto yy = y;
    yy.insert(yy.end(), y.begin(), y.end());
    const auto a = fit_multinomial_lr(x, y), b = fit_multinomial_lr(xx, yy);
    const Eigen::MatrixXd probe = tp_test::random_matrix(200, 3, 5, 2.0);
    CHECK(a.predict(probe) == b.predict(probe));
  }
  SECTION("the optimum does not depend on the starting point") {
    const Eigen::MatrixXd x = tp_test::random_matrix(40, 4, 6);
    std::vector<std::string> y;
    for (Eigen::Index i = 0; i < 40; ++i) y.push_back(x(i, 0) - x(i, 2) > 0.3 ? "a" : (x(i, 1) > 0 ? "b" : "c"));
    const auto ref = fit_multinomial_lr(x, y, {.l2 = 1e-2});
    const double f0 = lr_objective(ref, x, y);
    for (unsigned s = 0; s < 5; ++s) {
      const auto m = fit_multinomial_lr(x, y, {.l2 = 1e-2, .initial = tp_test::random_matrix(5, 3, 100 + s, 3.0)});
      CHECK(std::abs(lr_objective(m, x, y) - f0) < 1e-6);
    }
  }
  SECTION("validation") {
    CHECK_THROWS_AS(fit_multinomial_lr(Eigen::MatrixXd::Zero(3, 1), repeat({{"A", 3}})), ValidationError);
    CHECK_THROWS_AS(fit_multinomial_lr(Eigen::MatrixXd::Zero(3, 1), repeat({{"A", 2}})), ValidationError);
  }
}

TEST_CASE("stratified_kfold", "[eval]") {
  const auto y = repeat({{"A", 10}, {"B", 10}, {"C", 10}, {"D", 10}, {"E", 10}});
  const auto f = stratified_kfold(y, 5, 3);
  std::map<std::pair<std::size_t, std::string>, int> count;
  for (std::size_t i = 0; i < y.size(); ++i) ++count[{f[i], y[i]}];
  CHECK(count.size() == 25);
  for (const auto& [key, c] : count) CHECK(c == 2);
  CHECK(stratified_kfold(y, 5, 3) == f);
  CHECK(stratified_kfold(y, 5, 4) != f);

  const auto uneven = repeat({{"A", 7}, {"B", 13}});
  const auto g = stratified_kfold(uneven, 5, 1);
  for (const char* label : {"A", "B"}) {
    std::vector<int> per(5, 0);
    for (std::size_t i = 0; i < uneven.size(); ++i)
      if (uneven[i] == label) ++per[g[i]];
    CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
  }
  CHECK_THROWS_WITH(stratified_kfold(repeat({{"A", 10}, {"B", 3}}), 5, 0),
                    Catch::Matchers::ContainsSubstring("fewer than k=5"));
}

TEST_CASE("majority vote", "[eval]") {
  const std::vector<std::string> vocab{"A", "B", "C"};
  CHECK(majority_vote({{"A"}, {"A"}, {"A"}, {"B"}, {"B"}}, {}, vocab) == std::vector<std::string>{"A"});
  CHECK(majority_vote({{"C"}, {"C"}, {"C"}, {"C"}, {"C"}}, {}, vocab) == std::vector<std::string>{"C"});

  // Two-way tie resolved by mean probability: P(A)=0.4 > P(B)=0.35.
  std::vector<Eigen::MatrixXd> p(5, Eigen::MatrixXd(1, 3));
  p[0] << 0.6, 0.2, 0.2;
  p[1] << 0.5, 0.3, 0.2;
  p[2] << 0.2, 0.6, 0.2;
  p[3] << 0.3, 0.5, 0.2;
  p[4] << 0.4, 0.15, 0.45;
  CHECK(majority_vote({{"A"}, {"A"}, {"B"}, {"B"}, {"C"}}, p, vocab) == std::vector<std::string>{"A"});
  // Equal probabilities fall back to label order.
  std::vector<Eigen::MatrixXd> flat(5, Eigen::MatrixXd::Constant(1, 3, 1.0 / 3.0));
  CHECK(majority_vote({{"B"}, {"C"}, {"C"}, {"B"}, {"A"}}, flat, vocab) == std::vector<std::string>{"B"});
  CHECK_THROWS_AS(majority_vote({{"A"}, {"A", "B"}}, {}, vocab), ValidationError);
}

TEST_CASE("macro F1 fixtures", "[eval]") {
  const std::vector<std::string> v{"A", "B"};
  CHECK(macro_f1({"A", "B", "A"}, {"A", "B", "A"}, v) == 1.0);
  CHECK(macro_f1({"A", "A", "B", "B"}, {"A", "B", "A", "B"}, v) == 0.5);
  CHECK(macro_f1({"A", "A", "B", "B"}, {"A", "A", "A", "A"}, v) == 1.0 / 3.0);
  // A category absent from both sides is left out of the mean.
  CHECK(macro_f1({"A", "B"}, {"A", "B"}, {"A", "B", "C"}) == 1.0);
  CHECK_THROWS_AS(macro_f1({"A"}, {"Q"}, v), ValidationError);

  std::vector<std::string> t{"A", "B", "A", "B", "B"}, q{"B", "B", "A", "A", "B"};
  const double base = macro_f1(t, q, v);
  std::reverse(t.begin(), t.end());
  std::reverse(q.begin(), q.end());
  CHECK(macro_f1(t, q, v) == base);
}

TEST_CASE("dilution evaluation on a synthetic cohort", "[eval]") {
  SynthConfig c;
  c.n_genes = 600;
  c.n_tumor = 150;
  c.n_normal = 40;
  c.block_size = 60;
  c.seed = 2;
  const auto coh = generate_cohort(c);
  SplitOptions so;
  so.seed = 2;
  so.stratify_on = LabelField::Subtype;
  const auto split = split_cohort(coh.matrix, so);
  const auto train = coh.matrix.select_rows(split.train_indices);
  const auto test = coh.matrix.select_rows(split.test_indices);
  const Eigen::MatrixXd pool = train.select_rows(train.normal_indices()).values;
  const auto pca = models::pca_fit(train, 4);
  const EmbedFn embed = [&](const Eigen::MatrixXd& x) { return pca.embed(x); };

  auto spec = DilutionSpec::tenths(2);
  const auto rep = dilution_eval(embed, train, test, pool, spec);
  REQUIRE(rep.macro_f1.size() == 11);
  CHECK(rep.macro_f1[0] >= 0.95);
  CHECK(terminal_fraction(rep, "PN") >= 0.9);
  for (const auto& t : rep.trajectories) CHECK(t.size() == 11);
  CHECK(dilution_eval(embed, train, test, pool, spec).trajectories == rep.trajectories);

  // Rate-0 trajectories are the clean ensemble predictions.
  std::vector<std::string> labels;
  for (const auto& s : train.samples) labels.push_back(*class_label(s, LabelField::Subtype));
  const auto ens = fit_cv_ensemble(embed(train.values), labels);
  const auto tumors = test.tumor_indices();
  const auto clean = predict_ensemble(ens, embed(test.select_rows(tumors).values));
  for (std::size_t t = 0; t < tumors.size(); ++t) CHECK(rep.trajectories[t][0] == clean.labels[t]);

  spec.rates = {0.3, 0.1};
  CHECK_THROWS_AS(dilution_eval(embed, train, test, pool, spec), ValidationError);
}
