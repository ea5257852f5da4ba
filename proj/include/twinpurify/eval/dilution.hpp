#pragma once

// Dilution benchmark: fit the fold ensemble on clean training embeddings,
// then classify test tumors admixed with synthetic normals at each rate.

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinpurify/augment.hpp"
#include "twinpurify/error.hpp"
#include "twinpurify/eval/kfold.hpp"
#include "twinpurify/eval/metrics.hpp"
#include "twinpurify/expr_data.hpp"
#include "twinpurify/stats.hpp"

namespace twinpurify::eval {

/// Raw log2 rows (training gene order) -> embedding rows.
using EmbedFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

struct DilutionReport {
  std::vector<double> rates;
  std::vector<std::string> vocabulary;
  std::vector<double> macro_f1;       // ensemble, per rate
  std::vector<double> fold_mean_f1;   // mean over fold models, per rate
  std::vector<double> fold_sd_f1;     // sd over fold models, per rate
  /// rate x vocabulary; NaN where the category is absent from truth and prediction
  std::vector<std::vector<double>> category_f1;
  std::vector<std::string> trajectory_samples;  // diluted test tumors
  std::vector<std::string> trajectory_truth;
  std::vector<std::vector<std::string>> trajectories;  // sample x rate
  std::vector<double> chosen_l2;
};

struct DilutionEvalOptions {
  LabelField label = LabelField::Subtype;
  EnsembleOptions ensemble;
};

/// Test tumors are diluted with normals drawn from `normal_pool`; test
/// adjacent normals stay undiluted at every rate so the PN category is always
/// represented. Samples without a label for the chosen field are skipped.
inline DilutionReport dilution_eval(const EmbedFn& embed, const ExpressionMatrix& train,
                                    const ExpressionMatrix& test, const Eigen::MatrixXd& normal_pool,
                                    const DilutionSpec& spec, const DilutionEvalOptions& opt = {}) {
  spec.validate();
  require(train.genes == test.genes, "dilution_eval: train and test gene orders differ");
  require(normal_pool.cols() == static_cast<Eigen::Index>(test.n_genes()),
          "dilution_eval: normal pool width does not match the gene count");

  std::vector<std::size_t> train_rows;
  std::vector<std::string> train_labels;
  for (std::size_t i = 0; i < train.n_samples(); ++i)
    if (auto l = class_label(train.samples[i], opt.label)) {
      train_rows.push_back(i);
      train_labels.push_back(*l);
    }
  const Eigen::MatrixXd train_emb = embed(detail::take_rows(train.values, train_rows));
  const CVEnsemble ens = fit_cv_ensemble(train_emb, train_labels, opt.ensemble);
  const std::string pn = opt.label == LabelField::Subtype ? std::string(kPureNormalLabel) : "0";
  require(std::find(ens.vocabulary.begin(), ens.vocabulary.end(), pn) != ens.vocabulary.end(),
          "dilution_eval: training labels lack the pure-normal category '" + pn + "'");

  std::vector<std::size_t> tumors, normals;
  std::vector<std::string> tumor_truth, normal_truth;
  for (std::size_t i = 0; i < test.n_samples(); ++i) {
    auto l = class_label(test.samples[i], opt.label);
    if (!l) continue;
    require(std::find(ens.vocabulary.begin(), ens.vocabulary.end(), *l) != ens.vocabulary.end(),
            "dilution_eval: test label '" + *l + "' was not seen in training");
    if (test.samples[i].is_normal()) {
      normals.push_back(i);
      normal_truth.push_back(*l);
    } else {
      tumors.push_back(i);
      tumor_truth.push_back(*l);
    }
  }
  require(!tumors.empty(), "dilution_eval: no labelled test tumors");

  DilutionReport rep;
  rep.rates = spec.rates;
  rep.vocabulary = ens.vocabulary;
  rep.chosen_l2 = ens.chosen_l2;
  rep.trajectory_truth = tumor_truth;
  for (auto i : tumors) rep.trajectory_samples.push_back(test.samples[i].sample_id);
  rep.trajectories.assign(tumors.size(), {});

  // Per-sample series from counter-derived streams.
  const std::size_t R = spec.rates.size();
  std::vector<Eigen::MatrixXd> diluted(R, Eigen::MatrixXd(static_cast<Eigen::Index>(tumors.size()),
                                                          test.values.cols()));
  for (std::size_t t = 0; t < tumors.size(); ++t) {
    Rng rng = make_stream(spec.seed, tumors[t]);
    const auto series = dilution_series(test.values.row(static_cast<Eigen::Index>(tumors[t])).transpose(),
                                        normal_pool, spec, rng);
    for (std::size_t r = 0; r < R; ++r) diluted[r].row(static_cast<Eigen::Index>(t)) = series[r].second.transpose();
  }
  const Eigen::MatrixXd normal_emb =
      normals.empty() ? Eigen::MatrixXd(0, train_emb.cols()) : embed(detail::take_rows(test.values, normals));

  std::vector<std::string> truth = tumor_truth;
  truth.insert(truth.end(), normal_truth.begin(), normal_truth.end());
  for (std::size_t r = 0; r < R; ++r) {
    const Eigen::MatrixXd tumor_emb = embed(diluted[r]);
    Eigen::MatrixXd emb(tumor_emb.rows() + normal_emb.rows(), tumor_emb.cols());
    emb << tumor_emb, normal_emb;
    const auto pred = predict_ensemble(ens, emb);
    rep.macro_f1.push_back(macro_f1(truth, pred.labels, ens.vocabulary));
    std::vector<double> per_fold;
    for (const auto& labels : pred.per_model) per_fold.push_back(macro_f1(truth, labels, ens.vocabulary));
    rep.fold_mean_f1.push_back(stats::mean(per_fold));
    rep.fold_sd_f1.push_back(stats::sd(per_fold));
    std::vector<double> cat;
    for (const auto& v : per_category_f1(truth, pred.labels, ens.vocabulary))
      cat.push_back(v.value_or(std::nan("")));
    rep.category_f1.push_back(std::move(cat));
    for (std::size_t t = 0; t < tumors.size(); ++t) rep.trajectories[t].push_back(pred.labels[t]);
  }
  return rep;
}

/// Fraction of trajectories whose label at the last rate is `category`.
inline double terminal_fraction(const DilutionReport& rep, const std::string& category) {
  require(!rep.trajectories.empty(), "terminal_fraction: no trajectories");
  std::size_t hits = 0;
  for (const auto& t : rep.trajectories) hits += t.back() == category ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(rep.trajectories.size());
}

}  // namespace twinpurify::eval
