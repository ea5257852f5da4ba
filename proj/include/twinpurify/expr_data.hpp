#pragma once

// Expression matrices, sample metadata, TSV I/O, and cohort splitting.

#include <Eigen/Core>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/random.hpp"

namespace twinpurify {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class SampleKind { Tumor, AdjacentNormal };

inline constexpr std::string_view kPureNormalLabel = "PN";
inline constexpr std::string_view kNormalLikeLabel = "Normal-like";

struct SampleMeta {
  std::string sample_id;
  SampleKind kind = SampleKind::Tumor;
  std::optional<std::string> subtype;
  std::optional<int> grade;
  std::optional<double> surv_time;
  std::optional<bool> surv_event;

  bool is_normal() const { return kind == SampleKind::AdjacentNormal; }
  bool operator==(const SampleMeta&) const = default;
};

enum class LabelField { Subtype, Grade };

/// Classification label of a sample. Adjacent normals map to the pure-normal
/// category: "PN" for subtypes and grade "0".
inline std::optional<std::string> class_label(const SampleMeta& s, LabelField field) {
  if (field == LabelField::Subtype) {
    if (s.is_normal()) return std::string(kPureNormalLabel);
    return s.subtype;
  }
  if (s.is_normal()) return std::string("0");
  if (s.grade) return std::to_string(*s.grade);
  return std::nullopt;
}

inline bool valid_identifier(std::string_view id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(),
                      [](unsigned char c) { return std::isspace(c) != 0; });
}

inline void validate_meta(const SampleMeta& s) {
  require(valid_identifier(s.sample_id), "invalid sample id '" + s.sample_id + "'");
  require(s.surv_time.has_value() == s.surv_event.has_value(),
          "sample " + s.sample_id + ": surv_time and surv_event must be both present or both absent");
  if (s.surv_time) {
    require(std::isfinite(*s.surv_time) && *s.surv_time >= 0.0,
            "sample " + s.sample_id + ": negative or non-finite surv_time");
  }
  if (s.grade) {
    require(*s.grade >= 0 && *s.grade <= 3, "sample " + s.sample_id + ": grade outside 0-3");
    require(*s.grade != 0 || s.is_normal(),
            "sample " + s.sample_id + ": grade 0 is reserved for adjacent-normal samples");
  }
}

/// Samples x genes matrix with identifiers and per-sample metadata.
struct ExpressionMatrix {
  std::vector<std::string> genes;
  std::vector<SampleMeta> samples;
  Matrix values;  // n_samples x n_genes

  std::size_t n_samples() const { return samples.size(); }
  std::size_t n_genes() const { return genes.size(); }

  void validate() const {
    require(static_cast<std::size_t>(values.rows()) == samples.size() &&
                static_cast<std::size_t>(values.cols()) == genes.size(),
            "matrix shape does not match identifier lists");
    std::unordered_set<std::string_view> seen;
    for (const auto& g : genes) {
      require(valid_identifier(g), "invalid gene id '" + g + "'");
      require(seen.insert(g).second, "duplicate gene '" + g + "'");
    }
    seen.clear();
    for (const auto& s : samples) {
      validate_meta(s);
      require(seen.insert(s.sample_id).second, "duplicate sample '" + s.sample_id + "'");
    }
    require(values.allFinite(), "matrix contains non-finite values");
  }

  ExpressionMatrix select_rows(const std::vector<std::size_t>& rows) const {
    ExpressionMatrix out;
    out.genes = genes;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    out.samples.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
      out.samples.push_back(samples[rows[i]]);
    }
    return out;
  }

  /// Restrict to `subset` (in that order); every gene must be present.
  ExpressionMatrix select_genes(const std::vector<std::string>& subset) const {
    std::unordered_map<std::string_view, Eigen::Index> index;
    for (std::size_t j = 0; j < genes.size(); ++j) index.emplace(genes[j], static_cast<Eigen::Index>(j));
    ExpressionMatrix out;
    out.genes = subset;
    out.samples = samples;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(subset.size()));
    for (std::size_t j = 0; j < subset.size(); ++j) {
      auto it = index.find(subset[j]);
      require(it != index.end(), "gene '" + subset[j] + "' not present in matrix");
      out.values.col(static_cast<Eigen::Index>(j)) = values.col(it->second);
    }
    return out;
  }

  std::vector<std::size_t> indices_where(auto&& pred) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (pred(samples[i])) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> tumor_indices() const {
    return indices_where([](const SampleMeta& s) { return !s.is_normal(); });
  }
  std::vector<std::size_t> normal_indices() const {
    return indices_where([](const SampleMeta& s) { return s.is_normal(); });
  }
};

// ---------------------------------------------------------------------------
// TSV / CSV I/O

enum class TableFormat { TSV, CSV };

namespace detail {

inline char delimiter(TableFormat f) { return f == TableFormat::TSV ? '\t' : ','; }

inline std::vector<std::string> split_line(std::string_view line, char delim) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

inline bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), "missing file: " + path.string());
  std::ifstream in(path);
  require(in.good(), "cannot open file: " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(out.good(), "cannot write file: " + path.string());
  return out;
}

}  // namespace detail

inline std::string to_string(SampleKind k) {
  return k == SampleKind::Tumor ? "Tumor" : "AdjacentNormal";
}

inline SampleKind parse_kind(std::string_view s) {
  if (s == "Tumor") return SampleKind::Tumor;
  if (s == "AdjacentNormal") return SampleKind::AdjacentNormal;
  throw ValidationError("unknown sample kind '" + std::string(s) + "'");
}

inline const std::vector<std::string>& metadata_columns() {
  static const std::vector<std::string> cols{"sample_id", "kind",     "subtype",
                                             "grade",     "surv_time", "surv_event"};
  return cols;
}

/// Metadata sidecar: header `sample_id kind subtype grade surv_time surv_event`,
/// empty cell = absent.
inline std::vector<SampleMeta> read_metadata(const std::filesystem::path& path,
                                             TableFormat format = TableFormat::TSV) {
  auto in = detail::open_input(path);
  const char delim = detail::delimiter(format);
  std::string line;
  require(detail::read_line(in, line), "empty metadata file: " + path.string());
  require(detail::split_line(line, delim) == metadata_columns(),
          "metadata header must be: sample_id, kind, subtype, grade, surv_time, surv_event");
  std::vector<SampleMeta> out;
  std::size_t row = 0;
  while (detail::read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = detail::split_line(line, delim);
    require(cells.size() == 6, "ragged metadata row " + std::to_string(row));
    SampleMeta m;
    m.sample_id = cells[0];
    m.kind = parse_kind(cells[1]);
    if (!cells[2].empty()) m.subtype = cells[2];
    if (!cells[3].empty()) {
      auto g = detail::parse_double(cells[3]);
      require(g && *g == std::floor(*g), "non-integer grade at metadata row " + std::to_string(row));
      m.grade = static_cast<int>(*g);
    }
    if (!cells[4].empty()) {
      auto t = detail::parse_double(cells[4]);
      require(t.has_value(), "non-numeric surv_time at metadata row " + std::to_string(row));
      m.surv_time = *t;
    }
    if (!cells[5].empty()) {
      const auto& e = cells[5];
      if (e == "1" || e == "true") m.surv_event = true;
      else if (e == "0" || e == "false") m.surv_event = false;
      else throw ValidationError("invalid surv_event at metadata row " + std::to_string(row));
    }
    validate_meta(m);
    out.push_back(std::move(m));
  }
  return out;
}

inline void write_metadata(const std::vector<SampleMeta>& samples,
                           const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  const auto& cols = metadata_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "\t" : "") << cols[i];
  out << '\n';
  for (const auto& s : samples) {
    out << s.sample_id << '\t' << to_string(s.kind) << '\t' << s.subtype.value_or("") << '\t';
    if (s.grade) out << *s.grade;
    out << '\t';
    if (s.surv_time) out << detail::format_double(*s.surv_time);
    out << '\t';
    if (s.surv_event) out << (*s.surv_event ? 1 : 0);
    out << '\n';
  }
  require(out.good(), "write failed: " + path.string());
}

/// Loads an expression table (first header cell `sample_id`, remaining header
/// cells gene ids, one row per sample). With a metadata path, every matrix
/// sample must have exactly one metadata row and vice versa; without one,
/// every sample is a tumor with no annotations.
inline ExpressionMatrix load_matrix(const std::filesystem::path& path, TableFormat format,
                                   const std::optional<std::filesystem::path>& metadata = {}) {
  auto in = detail::open_input(path);
  const char delim = detail::delimiter(format);
  std::string line;
  require(detail::read_line(in, line), "empty expression file: " + path.string());
  auto header = detail::split_line(line, delim);
  require(!header.empty() && header[0] == "sample_id",
          "expression header must start with 'sample_id'");
  ExpressionMatrix m;
  m.genes.assign(header.begin() + 1, header.end());
  require(!m.genes.empty(), "expression file has no gene columns");
  {
    std::unordered_set<std::string_view> seen;
    for (const auto& g : m.genes) {
      require(valid_identifier(g), "invalid gene id '" + g + "'");
      require(seen.insert(g).second, "duplicate gene '" + g + "'");
    }
  }
  std::vector<double> buffer;
  std::vector<std::string> ids;
  std::size_t row = 0;
  while (detail::read_line(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_line(line, delim);
    require(cells.size() == header.size(),
            "ragged row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                " cells, got " + std::to_string(cells.size()));
    ids.push_back(cells[0]);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      auto v = detail::parse_double(cells[c]);
      if (!v)
        throw ValidationError("non-numeric cell at (" + std::to_string(row) + "," +
                              std::to_string(c - 1) + "): '" + cells[c] + "'");
      buffer.push_back(*v);
    }
    ++row;
  }
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto g = static_cast<Eigen::Index>(m.genes.size());
  m.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      buffer.data(), n, g);

  std::unordered_set<std::string_view> seen;
  for (const auto& id : ids) {
    require(valid_identifier(id), "invalid sample id '" + id + "'");
    require(seen.insert(id).second, "duplicate sample '" + id + "'");
  }
  if (metadata) {
    auto meta = read_metadata(*metadata, format);
    std::unordered_map<std::string, SampleMeta> by_id;
    for (auto& s : meta) {
      require(seen.count(s.sample_id) == 1,
              "metadata sample missing from matrix: " + s.sample_id);
      require(by_id.emplace(s.sample_id, s).second, "duplicate metadata sample " + s.sample_id);
    }
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      require(it != by_id.end(), "matrix sample missing from metadata: " + id);
      m.samples.push_back(it->second);
    }
  } else {
    for (const auto& id : ids) m.samples.push_back(SampleMeta{.sample_id = id});
  }
  m.validate();
  return m;
}

inline void save_matrix(const ExpressionMatrix& m, const std::filesystem::path& path,
                        TableFormat format = TableFormat::TSV) {
  auto out = detail::open_output(path);
  const char delim = detail::delimiter(format);
  out << "sample_id";
  for (const auto& g : m.genes) out << delim << g;
  out << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    out << m.samples[static_cast<std::size_t>(i)].sample_id;
    for (Eigen::Index j = 0; j < m.values.cols(); ++j)
      out << delim << detail::format_double(m.values(i, j));
    out << '\n';
  }
  require(out.good(), "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Preprocessing

/// log2(v + 1) elementwise. Apply exactly once: the transform is not idempotent.
inline ExpressionMatrix log2_transform(ExpressionMatrix m) {
  for (Eigen::Index i = 0; i < m.values.rows(); ++i)
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      const double v = m.values(i, j);
      if (v < 0.0)
        throw ValidationError("negative value at (" + std::to_string(i) + "," +
                              std::to_string(j) + ") cannot be log-transformed");
      m.values(i, j) = std::log2(v + 1.0);
    }
  return m;
}

/// Restricts every matrix to the shared gene set in lexicographic order.
inline std::vector<ExpressionMatrix> intersect_genes(const std::vector<ExpressionMatrix>& ms) {
  require(ms.size() >= 2, "intersect_genes needs at least two matrices");
  std::set<std::string> common(ms[0].genes.begin(), ms[0].genes.end());
  for (std::size_t k = 1; k < ms.size(); ++k) {
    std::set<std::string> next;
    for (const auto& g : ms[k].genes)
      if (common.count(g)) next.insert(g);
    common = std::move(next);
  }
  require(!common.empty(), "empty intersection of gene sets");
  const std::vector<std::string> order(common.begin(), common.end());
  std::vector<ExpressionMatrix> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back(m.select_genes(order));
  return out;
}

// ---------------------------------------------------------------------------
// Cohort splitting

struct CohortSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
  bool operator==(const CohortSplit&) const = default;
};

struct SplitOptions {
  double train_fraction = 0.8;
  std::optional<LabelField> stratify_on;
  std::uint64_t seed = 0;
  /// Subtype labels routed exclusively to the test set.
  std::vector<std::string> test_only_subtypes{std::string(kNormalLikeLabel)};
};

/// Seeded train/test split. Stratified splits take round(fraction * size)
/// training samples from every stratum; samples without a label form their
/// own stratum. Index lists are returned in ascending order.
inline CohortSplit split_cohort(const ExpressionMatrix& m, const SplitOptions& opt) {
  require(opt.train_fraction > 0.0 && opt.train_fraction < 1.0,
          "split fraction must lie in (0,1)");
  CohortSplit split;
  split.seed = opt.seed;
  Rng rng = make_stream(opt.seed, 0x53504C4954);

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < m.n_samples(); ++i) {
    const auto& s = m.samples[i];
    if (s.subtype && std::find(opt.test_only_subtypes.begin(), opt.test_only_subtypes.end(),
                               *s.subtype) != opt.test_only_subtypes.end()) {
      split.test_indices.push_back(i);
      continue;
    }
    std::string key;
    if (opt.stratify_on) key = class_label(s, *opt.stratify_on).value_or("");
    strata[key].push_back(i);
  }
  for (auto& [label, members] : strata) {
    if (opt.stratify_on)
      require(members.size() >= 2, "stratum '" + label + "' has fewer than 2 samples");
    shuffle(std::span(members), rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(opt.train_fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < members.size(); ++k)
      (k < n_train ? split.train_indices : split.test_indices).push_back(members[k]);
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  return split;
}

}  // namespace twinpurify
