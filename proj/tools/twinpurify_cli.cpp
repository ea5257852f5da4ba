// Command-line front end. Every command writes manifest.json into its output
// directory; `--config <manifest.json>` replays a run, and flags given next to
// it override the stored values.

#include <Eigen/Core>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "svg.hpp"
#include "twinpurify/twinpurify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace twinpurify;
using twinpurify::detail::format_double;

namespace {

// --- parameter blocks ---------------------------------------------------------

struct DataParams {
  std::string expr;
  std::string meta;
  std::string format = "tsv";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DataParams, expr, meta, format)

struct ArchParams {
  std::vector<std::size_t> encoder_hidden{512, 128};
  std::size_t embedding_dim = 4;
  std::vector<std::size_t> projector_hidden{64};
  std::size_t projector_dim = 64;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  bool per_gene_scaling = false;
  double max_skip_fraction = 0.1;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ArchParams, encoder_hidden, embedding_dim, projector_hidden,
                                                projector_dim, epochs, batch_size, learning_rate,
                                                per_gene_scaling, max_skip_fraction)

struct SplitParams {
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SplitParams, train_fraction, split_seed)

struct SynthParams {
  std::size_t n_genes = 2000, n_tumor = 300, n_normal = 60, n_subtypes = 3, block_size = 100;
  double block_density = 0.5, program_strength = 1.5, purity_low = 0.5, purity_high = 1.0;
  double noise_sd = 0.2, normal_factor_sd = 0.0;
  std::size_t n_normal_factors = 3;
  double normal_factor_density = 0.1;
  std::vector<double> hazard_weights;
  double base_hazard = 1.0 / 60.0;
  double censor_max_time = 120.0;  // <= 0 disables censoring
  std::uint64_t seed = 0;
  std::string out = "synth_out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthParams, n_genes, n_tumor, n_normal, n_subtypes, block_size,
                                                block_density, program_strength, purity_low, purity_high, noise_sd,
                                                normal_factor_sd, n_normal_factors, normal_factor_density,
                                                hazard_weights, base_hazard, censor_max_time, seed, out)

struct TrainParams {
  DataParams data;
  SplitParams split;
  ArchParams arch;
  std::string model = "TP";
  std::uint64_t seed = 0;
  double alpha = 0.27;
  std::size_t m_normals = 5;
  std::string mix_space = "log2";
  double lambda = 54.9;
  double eps = 1e-9;
  double noise_scale = 0.5;
  double noise_sd = 0.0;  // > 0 overrides noise_scale with an absolute sd
  double vae_beta = 1.0;
  std::string resume;
  std::string out = "train_out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainParams, data, split, arch, model, seed, alpha, m_normals,
                                                mix_space, lambda, eps, noise_scale, noise_sd, vae_beta, resume, out)

struct TuneParams {
  DataParams data;
  SplitParams split;
  ArchParams arch;
  std::size_t n_trials = 20;
  std::uint64_t seed = 0;
  std::vector<double> alpha_range{0.05, 0.95};
  std::vector<double> lambda_range{10.0, 100.0};
  std::size_t m_normals = 5;
  double validation_fraction = 0.2;
  std::vector<double> rates{0.0, 0.3, 0.6};
  std::string out = "tune_out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TuneParams, data, split, arch, n_trials, seed, alpha_range,
                                                lambda_range, m_normals, validation_fraction, rates, out)

struct EmbedParams {
  DataParams data;
  std::string model;
  std::string out = "embed_out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EmbedParams, data, model, out)

struct DiluteParams {
  DataParams data;
  std::string pool_expr;  // defaults to the adjacent normals of the input
  std::vector<double> rates;
  std::uint64_t seed = 0;
  std::size_t m_normals = 5;
  std::string mix_space = "log2";
  std::string out = "dilute_out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DiluteParams, data, pool_expr, rates, seed, m_normals, mix_space, out)

struct ClassifyParams {
  DataParams data;
  SplitParams split;
  std::string split_file;
  std::vector<std::string> models;
  std::string label = "subtype";
  std::vector<double> rates;
  std::uint64_t dilution_seed = 0;
  std::size_t m_normals = 5;
  std::string mix_space = "log2";
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::vector<double> l2_grid{1e-3, 1e-4, 1e-2};
  double validation_fraction = 0.2;
  std::size_t max_iterations = 5000;
  bool svg = false;
  std::string out = "classify_out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ClassifyParams, data, split, split_file, models, label, rates,
                                                dilution_seed, m_normals, mix_space, folds, seed, l2_grid,
                                                validation_fraction, max_iterations, svg, out)

struct RankParams {
  DataParams data;
  std::string model;
  std::size_t n_top = 20, n_bottom = 20;
  std::string out = "rank_out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RankParams, data, model, n_top, n_bottom, out)

struct UniquenessParams {
  DataParams data;
  std::vector<std::string> models;
  std::size_t top_n = 1000;
  std::size_t n_permutations = 1000;
  std::uint64_t seed = 0;
  std::string out = "uniqueness_out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(UniquenessParams, data, models, top_n, n_permutations, seed, out)

struct SurvivalParams {
  DataParams data;
  std::vector<std::string> models;
  std::size_t n_top = 20, n_bottom = 20;
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;
  double max_abs_beta = 50.0;
  double ridge = 0.0;
  bool svg = false;
  std::string out = "survival_out";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SurvivalParams, data, models, n_top, n_bottom, max_iterations,
                                                tolerance, max_abs_beta, ridge, svg, out)

struct GradcheckParams {
  ArchParams arch;
  std::size_t n_genes = 50, n_normals = 10, batch = 8;
  std::size_t entries_per_block = 20;
  double step = 1e-5;
  double alpha = 0.27, lambda = 54.9;
  double threshold = 1e-4;
  std::uint64_t seed = 0;
  std::string out;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GradcheckParams, arch, n_genes, n_normals, batch, entries_per_block,
                                                step, alpha, lambda, threshold, seed, out)

// --- helpers ------------------------------------------------------------------

std::size_t thread_count() {
  if (const char* v = std::getenv("TWINPURIFY_THREADS")) {
    const long n = std::strtol(v, nullptr, 10);
    if (n >= 1) return static_cast<std::size_t>(n);
  }
  return 1;
}

void write_manifest(const std::string& out_dir, const std::string& command, std::uint64_t seed,
                    const json& config, const std::vector<std::string>& outputs) {
  fs::create_directories(out_dir);
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = seed;
  m["threads"] = thread_count();
  m["config"] = config;
  m["outputs"] = outputs;
  std::ofstream f(fs::path(out_dir) / "manifest.json");
  f << m.dump(2) << '\n';
  require(f.good(), "cannot write manifest in " + out_dir);
}

TableFormat parse_format(const std::string& s) {
  if (s == "tsv") return TableFormat::TSV;
  if (s == "csv") return TableFormat::CSV;
  throw ValidationError("unknown table format '" + s + "' (expected tsv or csv)");
}

MixSpace parse_space(const std::string& s) {
  if (s == "log2") return MixSpace::Log2;
  if (s == "linear") return MixSpace::Linear;
  throw ValidationError("unknown mixing space '" + s + "' (expected log2 or linear)");
}

LabelField parse_label(const std::string& s) {
  if (s == "subtype") return LabelField::Subtype;
  if (s == "grade") return LabelField::Grade;
  throw ValidationError("unknown label field '" + s + "' (expected subtype or grade)");
}

ExpressionMatrix load_data(const DataParams& d) {
  require(!d.expr.empty(), "--expr is required");
  std::optional<fs::path> meta;
  if (!d.meta.empty()) meta = d.meta;
  return load_matrix(d.expr, parse_format(d.format), meta);
}

models::TrainConfig train_config(const ArchParams& a, std::uint64_t seed) {
  models::TrainConfig c;
  c.encoder_hidden = a.encoder_hidden;
  c.embedding_dim = a.embedding_dim;
  c.projector_hidden = a.projector_hidden;
  c.projector_dim = a.projector_dim;
  c.epochs = a.epochs;
  c.batch_size = a.batch_size;
  c.adam.learning_rate = a.learning_rate;
  c.per_gene_scaling = a.per_gene_scaling;
  c.max_skip_fraction = a.max_skip_fraction;
  c.seed = seed;
  return c;
}

CohortSplit make_split(const ExpressionMatrix& m, const SplitParams& p) {
  SplitOptions so;
  so.train_fraction = p.train_fraction;
  so.seed = p.split_seed;
  so.stratify_on = LabelField::Subtype;
  return split_cohort(m, so);
}

void write_split(const ExpressionMatrix& m, const CohortSplit& s, const fs::path& path) {
  auto out = twinpurify::detail::open_output(path);
  out << "sample_id,set\n";
  std::vector<std::pair<std::size_t, const char*>> rows;
  for (auto i : s.train_indices) rows.emplace_back(i, "train");
  for (auto i : s.test_indices) rows.emplace_back(i, "test");
  std::sort(rows.begin(), rows.end());
  for (const auto& [i, set] : rows) out << m.samples[i].sample_id << ',' << set << '\n';
}

CohortSplit read_split(const ExpressionMatrix& m, const fs::path& path) {
  auto in = twinpurify::detail::open_input(path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "sample_id,set",
          "split file " + path.string() + " lacks the header 'sample_id,set'");
  std::map<std::string, std::string> set_of;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, "malformed split line: " + line);
    set_of[line.substr(0, comma)] = line.substr(comma + 1);
  }
  CohortSplit s;
  for (std::size_t i = 0; i < m.n_samples(); ++i) {
    auto it = set_of.find(m.samples[i].sample_id);
    require(it != set_of.end(), "sample " + m.samples[i].sample_id + " missing from split file");
    require(it->second == "train" || it->second == "test", "split set must be train or test");
    (it->second == "train" ? s.train_indices : s.test_indices).push_back(i);
  }
  return s;
}

std::vector<double> default_rates(const std::vector<double>& rates) {
  return rates.empty() ? DilutionSpec::tenths().rates : rates;
}

std::string rate_tag(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", r);
  return buf;
}

/// Report names: model kind, disambiguated by file stem when kinds repeat.
std::vector<std::string> model_names(const std::vector<std::string>& paths,
                                     const std::vector<models::EmbeddingModel>& ms) {
  std::map<std::string, int> count;
  for (const auto& m : ms) ++count[to_string(models::kind_of(m))];
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    std::string k = to_string(models::kind_of(ms[i]));
    out.push_back(count[k] > 1 ? k + ":" + fs::path(paths[i]).stem().string() : k);
  }
  return out;
}

std::vector<PrerankedList> model_lists(const models::EmbeddingModel& model, const ExpressionMatrix& data) {
  return dim_gene_correlation(models::embed(model, data), data);
}

// --- commands -----------------------------------------------------------------

int run_synth(const SynthParams& p) {
  SynthConfig c;
  c.n_genes = p.n_genes;
  c.n_tumor = p.n_tumor;
  c.n_normal = p.n_normal;
  c.n_subtypes = p.n_subtypes;
  c.block_size = p.block_size;
  c.block_density = p.block_density;
  c.program_strength = p.program_strength;
  c.purity_range = {p.purity_low, p.purity_high};
  c.noise_sd = p.noise_sd;
  c.normal_factor_sd = p.normal_factor_sd;
  c.n_normal_factors = p.n_normal_factors;
  c.normal_factor_density = p.normal_factor_density;
  c.hazard_weights = p.hazard_weights;
  c.base_hazard = p.base_hazard;
  c.censor_max_time = p.censor_max_time > 0.0 ? std::optional<double>(p.censor_max_time) : std::nullopt;
  c.seed = p.seed;
  const SynthCohort coh = generate_cohort(c);
  const fs::path out(p.out);
  save_matrix(coh.matrix, out / "expression.tsv");
  write_metadata(coh.matrix.samples, out / "metadata.tsv");
  write_manifest(p.out, "synth", p.seed, p, {"expression.tsv", "metadata.tsv"});
  std::cout << "synth: " << coh.matrix.n_samples() << " samples x " << coh.matrix.n_genes() << " genes -> "
            << p.out << '\n';
  return 0;
}

int run_train(const TrainParams& p) {
  const ExpressionMatrix all = load_data(p.data);
  const CohortSplit split = make_split(all, p.split);
  const ExpressionMatrix train = all.select_rows(split.train_indices);
  const models::ModelKind kind = models::parse_model_kind(p.model);
  const auto cfg = train_config(p.arch, p.seed);
  models::LossConfig loss{p.lambda, p.eps};
  const fs::path out(p.out);

  models::EmbeddingModel model;
  models::TrainingState state;
  bool has_state = false;
  if (kind == models::ModelKind::PCA) {
    model = models::pca_fit(train, p.arch.embedding_dim);
  } else if (kind == models::ModelKind::AE || kind == models::ModelKind::VAE) {
    auto st = models::train_autoencoder(train, cfg,
                                        kind == models::ModelKind::AE ? models::AutoencoderVariant::AE
                                                                      : models::AutoencoderVariant::VAE,
                                        p.vae_beta);
    state.optimizer = st.optimizer;
    state.loss_trace = st.loss_trace;
    state.epochs_completed = st.epochs_completed;
    has_state = true;
    model = std::move(st.model);
  } else {
    models::TrainedTwinPurify st;
    if (kind == models::ModelKind::TwinPurify) {
      MixtureSpec mix;
      mix.alpha = p.alpha;
      mix.m_normals = p.m_normals;
      mix.seed = p.seed;
      mix.space = parse_space(p.mix_space);
      const Eigen::MatrixXd pool = train.select_rows(train.normal_indices()).values;
      if (!p.resume.empty()) {
        models::TrainingState prev;
        auto loaded = models::load_model(p.resume, &prev);
        auto* tp = std::get_if<models::TwinPurifyModel>(&loaded);
        require(tp != nullptr, "--resume needs a TP checkpoint");
        models::TrainedTwinPurify base;
        base.model = *tp;
        base.optimizer = prev.optimizer;
        base.report.loss_trace = prev.loss_trace;
        base.report.skipped_batches = prev.skipped_batches;
        base.report.total_batches = prev.total_batches;
        base.epochs_completed = prev.epochs_completed;
        st = models::train_twinpurify(train, pool, cfg, mix, loss, &base);
      } else {
        st = models::train_twinpurify(train, pool, cfg, mix, loss);
      }
    } else {
      models::NoiseConfig nc;
      nc.noise_scale = p.noise_scale;
      if (p.noise_sd > 0.0) nc.noise_sd = p.noise_sd;
      st = models::train_bt_noise(train, cfg, nc, loss);
    }
    state.optimizer = st.optimizer;
    state.loss_trace = st.report.loss_trace;
    state.epochs_completed = st.epochs_completed;
    state.skipped_batches = st.report.skipped_batches;
    state.total_batches = st.report.total_batches;
    has_state = true;
    model = std::move(st.model);
  }

  models::save_model(model, out / "model.ckpt", has_state ? &state : nullptr);
  write_split(all, split, out / "split.csv");
  {
    auto f = twinpurify::detail::open_output(out / "loss.csv");
    f << "epoch,loss\n";
    for (std::size_t e = 0; e < state.loss_trace.size(); ++e)
      f << e << ',' << format_double(state.loss_trace[e]) << '\n';
  }
  write_manifest(p.out, "train", p.seed, p, {"model.ckpt", "split.csv", "loss.csv"});
  std::cout << "train: " << p.model << " on " << train.n_samples() << " samples";
  if (!state.loss_trace.empty()) std::cout << ", final loss " << state.loss_trace.back();
  std::cout << " -> " << p.out << '\n';
  return 0;
}

int run_tune(const TuneParams& p) {
  require(p.n_trials >= 1, "n_trials must be >= 1");
  require(p.alpha_range.size() == 2 && p.alpha_range[0] > 0.0 && p.alpha_range[0] <= p.alpha_range[1] &&
              p.alpha_range[1] <= 1.0,
          "alpha_range must be [lo, hi] within (0,1]");
  require(p.lambda_range.size() == 2 && p.lambda_range[0] > 0.0 && p.lambda_range[0] <= p.lambda_range[1],
          "lambda_range must be [lo, hi] with lo > 0");
  const ExpressionMatrix all = load_data(p.data);
  const ExpressionMatrix train = all.select_rows(make_split(all, p.split).train_indices);

  std::vector<std::string> labels;
  for (const auto& s : train.samples) labels.push_back(class_label(s, LabelField::Subtype).value_or(""));
  Rng hold_rng = make_stream(p.seed, 0x484F4C44);
  const auto held = eval::stratified_holdout(labels, p.validation_fraction, hold_rng);
  std::vector<std::size_t> inner_rows, val_rows;
  for (std::size_t i = 0; i < held.size(); ++i) (held[i] ? val_rows : inner_rows).push_back(i);
  const ExpressionMatrix inner = train.select_rows(inner_rows);
  const ExpressionMatrix val = train.select_rows(val_rows);
  const Eigen::MatrixXd pool = inner.select_rows(inner.normal_indices()).values;

  DilutionSpec spec;
  spec.rates = p.rates;
  spec.seed = p.seed;
  spec.m_normals = p.m_normals;

  struct Trial {
    double alpha, lambda, objective, final_loss;
  };
  std::vector<Trial> trials;
  for (std::size_t t = 0; t < p.n_trials; ++t) {
    Rng rng = make_stream(p.seed, 0x54524941 + t);
    Trial tr{};
    tr.alpha = p.alpha_range[0] + (p.alpha_range[1] - p.alpha_range[0]) * uniform01(rng);
    tr.lambda = p.lambda_range[0] + (p.lambda_range[1] - p.lambda_range[0]) * uniform01(rng);
    MixtureSpec mix;
    mix.alpha = tr.alpha;
    mix.m_normals = p.m_normals;
    auto st = models::train_twinpurify(inner, pool, train_config(p.arch, p.seed + t), mix,
                                       models::LossConfig{tr.lambda, 1e-9});
    tr.final_loss = st.report.loss_trace.back();
    const auto rep = eval::dilution_eval([&](const Eigen::MatrixXd& x) { return st.model.embed(x); }, inner, val,
                                         pool, spec);
    tr.objective = stats::mean(rep.macro_f1);
    trials.push_back(tr);
    std::cout << "trial " << t << ": alpha=" << tr.alpha << " lambda=" << tr.lambda
              << " objective=" << tr.objective << '\n';
  }
  std::size_t best = 0;
  for (std::size_t t = 1; t < trials.size(); ++t)
    if (trials[t].objective > trials[best].objective) best = t;

  const fs::path out(p.out);
  {
    auto f = twinpurify::detail::open_output(out / "trials.csv");
    f << "trial,alpha,lambda,objective,final_loss\n";
    for (std::size_t t = 0; t < trials.size(); ++t)
      f << t << ',' << format_double(trials[t].alpha) << ',' << format_double(trials[t].lambda) << ','
        << format_double(trials[t].objective) << ',' << format_double(trials[t].final_loss) << '\n';
  }
  {
    auto f = twinpurify::detail::open_output(out / "best.csv");
    f << "trial,alpha,lambda,objective\n"
      << best << ',' << format_double(trials[best].alpha) << ',' << format_double(trials[best].lambda) << ','
      << format_double(trials[best].objective) << '\n';
  }
  write_manifest(p.out, "tune", p.seed, p, {"trials.csv", "best.csv"});
  std::cout << "tune: best trial " << best << " alpha=" << trials[best].alpha << " lambda=" << trials[best].lambda
            << '\n';
  return 0;
}

int run_embed(const EmbedParams& p) {
  require(!p.model.empty(), "--model is required");
  const auto model = models::load_model(p.model);
  const ExpressionMatrix data = load_data(p.data);
  const Eigen::MatrixXd e = models::embed(model, data);
  auto f = twinpurify::detail::open_output(fs::path(p.out) / "embedding.csv");
  f << "sample_id";
  for (Eigen::Index k = 0; k < e.cols(); ++k) f << ",dim" << k;
  f << '\n';
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    f << data.samples[static_cast<std::size_t>(i)].sample_id;
    for (Eigen::Index k = 0; k < e.cols(); ++k) f << ',' << format_double(e(i, k));
    f << '\n';
  }
  f.close();
  write_manifest(p.out, "embed", 0, p, {"embedding.csv"});
  return 0;
}

int run_dilute(const DiluteParams& p) {
  const ExpressionMatrix data = load_data(p.data);
  Eigen::MatrixXd pool;
  if (!p.pool_expr.empty()) {
    const ExpressionMatrix pm = load_matrix(p.pool_expr, parse_format(p.data.format));
    require(pm.genes == data.genes, "pool matrix genes differ from the input matrix");
    pool = pm.values;
  } else {
    pool = data.select_rows(data.normal_indices()).values;
  }
  require(pool.rows() >= 1, "no normal pool: the input has no adjacent normals and --pool-expr is unset");
  DilutionSpec spec;
  spec.rates = default_rates(p.rates);
  spec.seed = p.seed;
  spec.m_normals = p.m_normals;
  spec.space = parse_space(p.mix_space);
  const auto tumors = data.tumor_indices();
  require(!tumors.empty(), "no tumor samples to dilute");
  std::vector<ExpressionMatrix> per_rate(spec.rates.size(), data.select_rows(tumors));
  for (std::size_t t = 0; t < tumors.size(); ++t) {
    Rng rng = make_stream(spec.seed, tumors[t]);
    const auto series = dilution_series(data.values.row(static_cast<Eigen::Index>(tumors[t])).transpose(), pool,
                                        spec, rng);
    for (std::size_t r = 0; r < series.size(); ++r)
      per_rate[r].values.row(static_cast<Eigen::Index>(t)) = series[r].second.transpose();
  }
  std::vector<std::string> outputs;
  for (std::size_t r = 0; r < spec.rates.size(); ++r) {
    const std::string name = "diluted_" + rate_tag(spec.rates[r]) + ".tsv";
    save_matrix(per_rate[r], fs::path(p.out) / name);
    outputs.push_back(name);
  }
  write_manifest(p.out, "dilute", p.seed, p, outputs);
  return 0;
}

int run_classify(const ClassifyParams& p) {
  require(!p.models.empty(), "at least one --model is required");
  const ExpressionMatrix all = load_data(p.data);
  const CohortSplit split = p.split_file.empty() ? make_split(all, p.split) : read_split(all, p.split_file);
  const ExpressionMatrix train = all.select_rows(split.train_indices);
  const ExpressionMatrix test = all.select_rows(split.test_indices);
  const Eigen::MatrixXd pool = train.select_rows(train.normal_indices()).values;

  DilutionSpec spec;
  spec.rates = default_rates(p.rates);
  spec.seed = p.dilution_seed;
  spec.m_normals = p.m_normals;
  spec.space = parse_space(p.mix_space);
  eval::DilutionEvalOptions opt;
  opt.label = parse_label(p.label);
  opt.ensemble.folds = p.folds;
  opt.ensemble.seed = p.seed;
  opt.ensemble.l2_grid = p.l2_grid;
  opt.ensemble.validation_fraction = p.validation_fraction;
  opt.ensemble.max_iterations = p.max_iterations;

  std::vector<models::EmbeddingModel> ms;
  for (const auto& path : p.models) ms.push_back(models::load_model(path));
  const auto names = model_names(p.models, ms);

  const fs::path out(p.out);
  std::vector<std::string> outputs{"report.csv", "category_f1.csv"};
  auto report = twinpurify::detail::open_output(out / "report.csv");
  report << "model,rate,macro_f1,fold_mean_f1,fold_sd_f1\n";
  auto cats = twinpurify::detail::open_output(out / "category_f1.csv");
  cats << "model,rate,category,f1\n";
  std::vector<cli::Series> curves;
  for (std::size_t m = 0; m < ms.size(); ++m) {
    const auto& model = ms[m];
    const auto rep = eval::dilution_eval([&](const Eigen::MatrixXd& x) { return models::embed(model, x); },
                                         train, test, pool, spec, opt);
    cli::Series s{names[m], rep.rates, rep.macro_f1};
    curves.push_back(s);
    for (std::size_t r = 0; r < rep.rates.size(); ++r) {
      report << names[m] << ',' << format_double(rep.rates[r]) << ',' << format_double(rep.macro_f1[r]) << ','
             << format_double(rep.fold_mean_f1[r]) << ',' << format_double(rep.fold_sd_f1[r]) << '\n';
      for (std::size_t k = 0; k < rep.vocabulary.size(); ++k)
        cats << names[m] << ',' << format_double(rep.rates[r]) << ',' << rep.vocabulary[k] << ','
             << (std::isnan(rep.category_f1[r][k]) ? std::string("NA") : format_double(rep.category_f1[r][k]))
             << '\n';
    }
    std::string tag = names[m];
    std::replace(tag.begin(), tag.end(), ':', '_');
    const std::string tname = "trajectories_" + tag + ".csv";
    outputs.push_back(tname);
    auto tf = twinpurify::detail::open_output(out / tname);
    tf << "sample_id,truth";
    for (double r : rep.rates) tf << ",rate_" << rate_tag(r);
    tf << '\n';
    for (std::size_t i = 0; i < rep.trajectory_samples.size(); ++i) {
      tf << rep.trajectory_samples[i] << ',' << rep.trajectory_truth[i];
      for (const auto& l : rep.trajectories[i]) tf << ',' << l;
      tf << '\n';
    }
    std::cout << names[m] << ": macro-F1";
    for (double v : rep.macro_f1) std::cout << ' ' << rate_tag(v);
    std::cout << '\n';
  }
  report.close();
  cats.close();
  if (p.svg) {
    cli::write_line_chart(out / "macro_f1.svg", "Macro-F1 under dilution", "dilution rate", "macro-F1", curves);
    outputs.push_back("macro_f1.svg");
  }
  write_manifest(p.out, "classify", p.seed, p, outputs);
  return 0;
}

int run_rank(const RankParams& p) {
  require(!p.model.empty(), "--model is required");
  const auto model = models::load_model(p.model);
  const ExpressionMatrix data = load_data(p.data);
  const auto lists = model_lists(model, data);
  const std::string name = to_string(models::kind_of(model));
  const fs::path out(p.out);
  std::vector<std::string> outputs{"signature.csv"};
  auto sig = twinpurify::detail::open_output(out / "signature.csv");
  sig << "model,dimension,side,rank,gene,r\n";
  for (const auto& l : lists) {
    const std::string rnk = name + "_dim" + std::to_string(l.dimension) + ".rnk";
    export_rnk(l, out / rnk);
    outputs.push_back(rnk);
    const Signature s = signature_genes(l, p.n_top, p.n_bottom);
    std::map<std::string, double> r;
    for (const auto& e : l.entries) r[e.gene] = e.r;
    for (std::size_t k = 0; k < s.top.size(); ++k)
      sig << name << ',' << l.dimension << ",top," << k << ',' << s.top[k] << ',' << format_double(r[s.top[k]])
          << '\n';
    for (std::size_t k = 0; k < s.bottom.size(); ++k)
      sig << name << ',' << l.dimension << ",bottom," << k << ',' << s.bottom[k] << ','
          << format_double(r[s.bottom[k]]) << '\n';
  }
  sig.close();
  write_manifest(p.out, "rank", 0, p, outputs);
  return 0;
}

int run_uniqueness(const UniquenessParams& p) {
  require(!p.models.empty(), "at least one --model is required");
  const ExpressionMatrix data = load_data(p.data);
  std::vector<models::EmbeddingModel> ms;
  for (const auto& path : p.models) ms.push_back(models::load_model(path));
  const auto names = model_names(p.models, ms);
  auto f = twinpurify::detail::open_output(fs::path(p.out) / "uniqueness.csv");
  f << "model,dimension,unique,p_value\n";
  for (std::size_t m = 0; m < ms.size(); ++m) {
    const auto res = uniqueness_permutation_test(model_lists(ms[m], data), p.top_n, p.n_permutations, p.seed);
    for (std::size_t k = 0; k < res.u.size(); ++k) {
      f << names[m] << ',' << k << ',' << format_double(res.u[k]) << ',' << format_double(res.p_value[k]) << '\n';
      std::cout << names[m] << " dim" << k << ": u=" << res.u[k] << " p=" << res.p_value[k] << '\n';
    }
  }
  f.close();
  write_manifest(p.out, "uniqueness", p.seed, p, {"uniqueness.csv"});
  return 0;
}

int run_survival(const SurvivalParams& p) {
  require(!p.models.empty(), "at least one --model is required");
  const ExpressionMatrix data = load_data(p.data);
  std::vector<models::EmbeddingModel> ms;
  for (const auto& path : p.models) ms.push_back(models::load_model(path));
  const auto names = model_names(p.models, ms);
  survival::CoxOptions co{p.max_iterations, p.tolerance, p.max_abs_beta, p.ridge};

  const fs::path out(p.out);
  std::vector<std::string> outputs{"summary.csv", "km.csv", "risk_scores.csv", "signatures.csv"};
  auto summary = twinpurify::detail::open_output(out / "summary.csv");
  summary << "model,c_index,logrank_chi2,logrank_p,n_genes\n";
  auto km = twinpurify::detail::open_output(out / "km.csv");
  km << "model,group,time,survival,at_risk,events\n";
  auto risk = twinpurify::detail::open_output(out / "risk_scores.csv");
  risk << "model,sample_id,score,group\n";
  auto sigs = twinpurify::detail::open_output(out / "signatures.csv");
  sigs << "model,gene\n";
  for (std::size_t m = 0; m < ms.size(); ++m) {
    std::vector<Signature> per_dim;
    for (const auto& l : model_lists(ms[m], data)) per_dim.push_back(signature_genes(l, p.n_top, p.n_bottom));
    const survival::ModelSignature sig{names[m], signature_union(per_dim)};
    const auto s = survival::survival_for_signature(sig, data, co);
    for (const auto& g : s.genes_used) sigs << names[m] << ',' << g << '\n';
    summary << names[m] << ',' << format_double(s.c_index) << ',' << format_double(s.log_rank.statistic) << ','
            << format_double(s.log_rank.p_value) << ',' << s.genes_used.size() << '\n';
    auto dump = [&](const survival::KMCurve& c, const char* group) {
      for (std::size_t i = 0; i < c.times.size(); ++i)
        km << names[m] << ',' << group << ',' << format_double(c.times[i]) << ',' << format_double(c.survival[i])
           << ',' << c.at_risk[i] << ',' << c.events[i] << '\n';
    };
    dump(s.km_high, "High");
    dump(s.km_low, "Low");
    for (std::size_t i = 0; i < s.sample_ids.size(); ++i)
      risk << names[m] << ',' << s.sample_ids[i] << ',' << format_double(s.scores[i]) << ','
           << survival::to_string(s.groups[i]) << '\n';
    if (p.svg) {
      std::string tag = names[m];
      std::replace(tag.begin(), tag.end(), ':', '_');
      const std::string svg = "km_" + tag + ".svg";
      cli::write_line_chart(out / svg, names[m] + " (log-rank p=" + rate_tag(s.log_rank.p_value) + ")",
                            "time (months)", "survival",
                            {{"High", s.km_high.times, s.km_high.survival}, {"Low", s.km_low.times, s.km_low.survival}},
                            true);
      outputs.push_back(svg);
    }
    std::cout << names[m] << ": c-index " << s.c_index << ", log-rank p " << s.log_rank.p_value << '\n';
  }
  summary.close();
  km.close();
  risk.close();
  sigs.close();
  write_manifest(p.out, "survival", 0, p, outputs);
  return 0;
}

int run_gradcheck(const GradcheckParams& p) {
  require(p.batch >= 2, "gradcheck batch must be >= 2");
  Rng rng = make_stream(p.seed, 0x4752414443);
  Eigen::MatrixXd tumors(static_cast<Eigen::Index>(p.batch), static_cast<Eigen::Index>(p.n_genes));
  Eigen::MatrixXd pool(static_cast<Eigen::Index>(p.n_normals), static_cast<Eigen::Index>(p.n_genes));
  for (Eigen::Index i = 0; i < tumors.size(); ++i) tumors.data()[i] = 4.0 + standard_normal(rng);
  for (Eigen::Index i = 0; i < pool.size(); ++i) pool.data()[i] = 4.0 + standard_normal(rng);
  MixtureSpec mix;
  mix.alpha = p.alpha;
  mix.m_normals = std::min<std::size_t>(5, p.n_normals);
  mix.validate(p.n_normals);
  Eigen::MatrixXd v1(tumors.rows(), tumors.cols()), v2(tumors.rows(), tumors.cols());
  for (Eigen::Index i = 0; i < tumors.rows(); ++i) {
    auto [a, b] = make_views(tumors.row(i).transpose(), pool, mix, rng);
    v1.row(i) = a.transpose();
    v2.row(i) = b.transpose();
  }
  const auto cfg = train_config(p.arch, p.seed);
  Rng init = make_stream(p.seed, 7);
  nn::Mlp enc = nn::Mlp::initialized(cfg.encoder_spec(p.n_genes, cfg.embedding_dim), "encoder", init);
  nn::Mlp proj = nn::Mlp::initialized(cfg.projector_spec(), "projector", init);
  const models::LossConfig loss{p.lambda, 1e-9};
  const auto ev = models::evaluate_pair(enc, proj, v1, v2, loss);
  require(!ev.objective.degenerate, "gradcheck: degenerate projector batch; change --seed or --batch");
  const auto analytic = nn::copy_blocks(
      models::concat(ev.encoder_grad.views(enc.name), ev.projector_grad.views(proj.name)));
  nn::GradCheckOptions go;
  go.step = p.step;
  go.max_entries_per_block = p.entries_per_block;
  go.seed = p.seed;
  const auto rep = nn::finite_diff_check(
      [&] { return models::evaluate_pair(enc, proj, v1, v2, loss, false).objective.loss; },
      models::concat(enc.parameters(), proj.parameters()), analytic, go);
  for (const auto& b : rep.blocks)
    std::cout << b.name << ": checked " << b.checked << ", relative error " << b.relative_error << '\n';
  std::cout << "max relative error " << rep.max_relative_error << '\n';
  if (!p.out.empty()) write_manifest(p.out, "gradcheck", p.seed, p, {});
  return rep.max_relative_error < p.threshold ? 0 : 2;
}

// --- option binding -----------------------------------------------------------

void bind_data(CLI::App* c, DataParams& d) {
  c->add_option("--expr", d.expr, "expression table (sample_id + gene columns)");
  c->add_option("--meta", d.meta, "metadata sidecar TSV");
  c->add_option("--format", d.format, "tsv or csv")->capture_default_str();
}

void bind_arch(CLI::App* c, ArchParams& a) {
  c->add_option("--encoder-hidden", a.encoder_hidden)->capture_default_str();
  c->add_option("--embedding-dim", a.embedding_dim)->capture_default_str();
  c->add_option("--projector-hidden", a.projector_hidden)->capture_default_str();
  c->add_option("--projector-dim", a.projector_dim)->capture_default_str();
  c->add_option("--epochs", a.epochs)->capture_default_str();
  c->add_option("--batch-size", a.batch_size)->capture_default_str();
  c->add_option("--lr", a.learning_rate)->capture_default_str();
  c->add_option("--per-gene-scaling", a.per_gene_scaling)->capture_default_str();
  c->add_option("--max-skip-fraction", a.max_skip_fraction)->capture_default_str();
}

void bind_split(CLI::App* c, SplitParams& s) {
  c->add_option("--train-fraction", s.train_fraction)->capture_default_str();
  c->add_option("--split-seed", s.split_seed)->capture_default_str();
}

/// Finds `--config <path>` (or `--config=<path>`) ahead of CLI parsing so
/// the stored values become the defaults that explicit flags override.
std::optional<std::string> find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

template <class P>
void load_config(const std::string& path, const std::string& command, P& params) {
  std::ifstream in(path);
  require(in.good(), "missing file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse config " + path + ": " + e.what());
  }
  if (j.contains("command"))
    require(j["command"] == command, "config " + path + " was written by '" + j["command"].get<std::string>() +
                                         "', not '" + command + "'");
  try {
    params = (j.contains("config") ? j["config"] : j).template get<P>();
  } catch (const json::exception& e) {
    throw ValidationError("invalid config " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twinpurify: tumor-purity-robust embeddings and their evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  const auto config_path = find_config(argc, argv);
  std::string config_sink;

  SynthParams synth;
  TrainParams train;
  TuneParams tune;
  EmbedParams embedp;
  DiluteParams dilute;
  ClassifyParams classify;
  RankParams rank;
  UniquenessParams uniq;
  SurvivalParams surv;
  GradcheckParams grad;

  auto add = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--config", config_sink, "replay a manifest.json (flags given here override it)");
    return c;
  };

  auto* c_synth = add("synth", "generate a synthetic cohort");
  c_synth->add_option("--n-genes", synth.n_genes)->capture_default_str();
  c_synth->add_option("--n-tumor", synth.n_tumor)->capture_default_str();
  c_synth->add_option("--n-normal", synth.n_normal)->capture_default_str();
  c_synth->add_option("--n-subtypes", synth.n_subtypes)->capture_default_str();
  c_synth->add_option("--block-size", synth.block_size)->capture_default_str();
  c_synth->add_option("--block-density", synth.block_density)->capture_default_str();
  c_synth->add_option("--program-strength", synth.program_strength)->capture_default_str();
  c_synth->add_option("--purity-low", synth.purity_low)->capture_default_str();
  c_synth->add_option("--purity-high", synth.purity_high)->capture_default_str();
  c_synth->add_option("--noise-sd", synth.noise_sd)->capture_default_str();
  c_synth->add_option("--normal-factor-sd", synth.normal_factor_sd)->capture_default_str();
  c_synth->add_option("--n-normal-factors", synth.n_normal_factors)->capture_default_str();
  c_synth->add_option("--normal-factor-density", synth.normal_factor_density)->capture_default_str();
  c_synth->add_option("--hazard-weights", synth.hazard_weights, "one per subtype");
  c_synth->add_option("--base-hazard", synth.base_hazard)->capture_default_str();
  c_synth->add_option("--censor-max-time", synth.censor_max_time, "<= 0 disables censoring")->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--out", synth.out)->capture_default_str();

  auto* c_train = add("train", "train one embedding model");
  bind_data(c_train, train.data);
  bind_split(c_train, train.split);
  bind_arch(c_train, train.arch);
  c_train->add_option("--model", train.model, "TP, BTNoise, AE, VAE or PCA")->capture_default_str();
  c_train->add_option("--seed", train.seed)->capture_default_str();
  c_train->add_option("--alpha", train.alpha)->capture_default_str();
  c_train->add_option("--m-normals", train.m_normals)->capture_default_str();
  c_train->add_option("--mix-space", train.mix_space, "log2 or linear")->capture_default_str();
  c_train->add_option("--lambda", train.lambda)->capture_default_str();
  c_train->add_option("--eps", train.eps)->capture_default_str();
  c_train->add_option("--noise-scale", train.noise_scale)->capture_default_str();
  c_train->add_option("--noise-sd", train.noise_sd, "> 0 sets an absolute noise sd")->capture_default_str();
  c_train->add_option("--vae-beta", train.vae_beta)->capture_default_str();
  c_train->add_option("--resume", train.resume, "continue training a TP checkpoint");
  c_train->add_option("--out", train.out)->capture_default_str();

  auto* c_tune = add("tune", "random search over alpha and lambda");
  bind_data(c_tune, tune.data);
  bind_split(c_tune, tune.split);
  bind_arch(c_tune, tune.arch);
  c_tune->add_option("--n-trials", tune.n_trials)->capture_default_str();
  c_tune->add_option("--seed", tune.seed)->capture_default_str();
  c_tune->add_option("--alpha-range", tune.alpha_range)->expected(2)->capture_default_str();
  c_tune->add_option("--lambda-range", tune.lambda_range)->expected(2)->capture_default_str();
  c_tune->add_option("--m-normals", tune.m_normals)->capture_default_str();
  c_tune->add_option("--validation-fraction", tune.validation_fraction)->capture_default_str();
  c_tune->add_option("--rates", tune.rates)->capture_default_str();
  c_tune->add_option("--out", tune.out)->capture_default_str();

  auto* c_embed = add("embed", "embed samples with a trained model");
  bind_data(c_embed, embedp.data);
  c_embed->add_option("--model", embedp.model);
  c_embed->add_option("--out", embedp.out)->capture_default_str();

  auto* c_dilute = add("dilute", "write dilution series of every tumor");
  bind_data(c_dilute, dilute.data);
  c_dilute->add_option("--pool-expr", dilute.pool_expr, "normal pool table (default: input normals)");
  c_dilute->add_option("--rates", dilute.rates, "default 0, 0.1, ..., 1");
  c_dilute->add_option("--seed", dilute.seed)->capture_default_str();
  c_dilute->add_option("--m-normals", dilute.m_normals)->capture_default_str();
  c_dilute->add_option("--mix-space", dilute.mix_space)->capture_default_str();
  c_dilute->add_option("--out", dilute.out)->capture_default_str();

  auto* c_classify = add("classify", "dilution evaluation with the fold ensemble");
  bind_data(c_classify, classify.data);
  bind_split(c_classify, classify.split);
  c_classify->add_option("--split-file", classify.split_file, "split.csv written by train");
  c_classify->add_option("--model", classify.models, "checkpoints (repeatable)");
  c_classify->add_option("--label", classify.label, "subtype or grade")->capture_default_str();
  c_classify->add_option("--rates", classify.rates, "default 0, 0.1, ..., 1");
  c_classify->add_option("--dilution-seed", classify.dilution_seed)->capture_default_str();
  c_classify->add_option("--m-normals", classify.m_normals)->capture_default_str();
  c_classify->add_option("--mix-space", classify.mix_space)->capture_default_str();
  c_classify->add_option("--folds", classify.folds)->capture_default_str();
  c_classify->add_option("--seed", classify.seed)->capture_default_str();
  c_classify->add_option("--l2-grid", classify.l2_grid)->capture_default_str();
  c_classify->add_option("--validation-fraction", classify.validation_fraction)->capture_default_str();
  c_classify->add_option("--max-iterations", classify.max_iterations)->capture_default_str();
  c_classify->add_option("--svg", classify.svg)->capture_default_str();
  c_classify->add_option("--out", classify.out)->capture_default_str();

  auto* c_rank = add("rank", "preranked gene lists and signatures");
  bind_data(c_rank, rank.data);
  c_rank->add_option("--model", rank.model);
  c_rank->add_option("--n-top", rank.n_top)->capture_default_str();
  c_rank->add_option("--n-bottom", rank.n_bottom)->capture_default_str();
  c_rank->add_option("--out", rank.out)->capture_default_str();

  auto* c_uniq = add("uniqueness", "dimension uniqueness with a permutation test");
  bind_data(c_uniq, uniq.data);
  c_uniq->add_option("--model", uniq.models, "checkpoints (repeatable)");
  c_uniq->add_option("--top-n", uniq.top_n)->capture_default_str();
  c_uniq->add_option("--n-permutations", uniq.n_permutations)->capture_default_str();
  c_uniq->add_option("--seed", uniq.seed)->capture_default_str();
  c_uniq->add_option("--out", uniq.out)->capture_default_str();

  auto* c_surv = add("survival", "signature Cox model, KM curves, log-rank, C-index");
  bind_data(c_surv, surv.data);
  c_surv->add_option("--model", surv.models, "checkpoints (repeatable)");
  c_surv->add_option("--n-top", surv.n_top)->capture_default_str();
  c_surv->add_option("--n-bottom", surv.n_bottom)->capture_default_str();
  c_surv->add_option("--max-iterations", surv.max_iterations)->capture_default_str();
  c_surv->add_option("--tolerance", surv.tolerance)->capture_default_str();
  c_surv->add_option("--max-abs-beta", surv.max_abs_beta)->capture_default_str();
  c_surv->add_option("--ridge", surv.ridge, "Cox ridge penalty (standardized scale)")->capture_default_str();
  c_surv->add_option("--svg", surv.svg)->capture_default_str();
  c_surv->add_option("--out", surv.out)->capture_default_str();

  auto* c_grad = add("gradcheck", "finite-difference check of the twin-view objective");
  bind_arch(c_grad, grad.arch);
  c_grad->add_option("--n-genes", grad.n_genes)->capture_default_str();
  c_grad->add_option("--n-normals", grad.n_normals)->capture_default_str();
  c_grad->add_option("--batch", grad.batch)->capture_default_str();
  c_grad->add_option("--entries-per-block", grad.entries_per_block, "0 checks every entry")->capture_default_str();
  c_grad->add_option("--step", grad.step)->capture_default_str();
  c_grad->add_option("--alpha", grad.alpha)->capture_default_str();
  c_grad->add_option("--lambda", grad.lambda)->capture_default_str();
  c_grad->add_option("--threshold", grad.threshold)->capture_default_str();
  c_grad->add_option("--seed", grad.seed)->capture_default_str();
  c_grad->add_option("--out", grad.out);

  try {
    if (config_path && argc > 1) {
      const std::string cmd = argv[1];
      if (cmd == "synth") load_config(*config_path, cmd, synth);
      else if (cmd == "train") load_config(*config_path, cmd, train);
      else if (cmd == "tune") load_config(*config_path, cmd, tune);
      else if (cmd == "embed") load_config(*config_path, cmd, embedp);
      else if (cmd == "dilute") load_config(*config_path, cmd, dilute);
      else if (cmd == "classify") load_config(*config_path, cmd, classify);
      else if (cmd == "rank") load_config(*config_path, cmd, rank);
      else if (cmd == "uniqueness") load_config(*config_path, cmd, uniq);
      else if (cmd == "survival") load_config(*config_path, cmd, surv);
      else if (cmd == "gradcheck") load_config(*config_path, cmd, grad);
    }
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    Eigen::setNbThreads(static_cast<int>(thread_count()));
    if (c_synth->parsed()) return run_synth(synth);
    if (c_train->parsed()) return run_train(train);
    if (c_tune->parsed()) return run_tune(tune);
    if (c_embed->parsed()) return run_embed(embedp);
    if (c_dilute->parsed()) return run_dilute(dilute);
    if (c_classify->parsed()) return run_classify(classify);
    if (c_rank->parsed()) return run_rank(rank);
    if (c_uniq->parsed()) return run_uniqueness(uniq);
    if (c_surv->parsed()) return run_survival(surv);
    if (c_grad->parsed()) return run_gradcheck(grad);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
