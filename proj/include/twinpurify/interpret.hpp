#pragma once

// Latent-dimension interpretation: gene preranking by Pearson correlation,
// .rnk export, set-uniqueness of extreme genes, and signatures.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/expr_data.hpp"
#include "twinpurify/random.hpp"

namespace twinpurify {

struct RankedGene {
  std::string gene;
  double r = 0.0;
  bool constant = false;  // zero-variance gene, r set to 0
};

/// Genes sorted by r descending, ties by gene id ascending.
struct PrerankedList {
  std::size_t dimension = 0;
  std::vector<RankedGene> entries;
};

namespace detail {
inline void sort_ranked(std::vector<RankedGene>& v) {
  std::sort(v.begin(), v.end(), [](const RankedGene& a, const RankedGene& b) {
    return a.r != b.r ? a.r > b.r : a.gene < b.gene;
  });
}
}  // namespace detail

/// One preranked list per embedding column.
inline std::vector<PrerankedList> dim_gene_correlation(const Eigen::MatrixXd& embedding,
                                                       const ExpressionMatrix& m) {
  require(embedding.rows() == static_cast<Eigen::Index>(m.n_samples()),
          "dim_gene_correlation: embedding has " + std::to_string(embedding.rows()) +
              " rows but the matrix has " + std::to_string(m.n_samples()) + " samples");
  require(embedding.rows() >= 3, "dim_gene_correlation: need at least 3 samples");
  const Eigen::MatrixXd e = embedding.rowwise() - embedding.colwise().mean();
  const Eigen::MatrixXd x = m.values.rowwise() - m.values.colwise().mean();
  const Eigen::VectorXd enorm = e.colwise().norm().transpose();
  const Eigen::VectorXd xnorm = x.colwise().norm().transpose();
  const Eigen::MatrixXd cross = e.transpose() * x;  // d x genes

  std::vector<PrerankedList> out;
  for (Eigen::Index k = 0; k < e.cols(); ++k) {
    if (enorm[k] == 0.0) warn("embedding dimension " + std::to_string(k) + " is constant");
    PrerankedList list;
    list.dimension = static_cast<std::size_t>(k);
    list.entries.reserve(m.n_genes());
    for (Eigen::Index g = 0; g < x.cols(); ++g) {
      RankedGene rg{m.genes[static_cast<std::size_t>(g)], 0.0, xnorm[g] == 0.0};
      if (!rg.constant && enorm[k] > 0.0)
        rg.r = std::clamp(cross(k, g) / (enorm[k] * xnorm[g]), -1.0, 1.0);
      list.entries.push_back(std::move(rg));
    }
    detail::sort_ranked(list.entries);
    out.push_back(std::move(list));
  }
  return out;
}

/// `gene<TAB>score` per line, no header, in list order.
inline void export_rnk(const PrerankedList& list, const std::filesystem::path& path) {
  for (const auto& e : list.entries)
    require(valid_identifier(e.gene), "illegal character in gene id '" + e.gene + "'");
  auto out = detail::open_output(path);
  for (const auto& e : list.entries) out << e.gene << '\t' << detail::format_double(e.r) << '\n';
  require(out.good(), "write failed: " + path.string());
}

inline PrerankedList import_rnk(const std::filesystem::path& path, std::size_t dimension = 0) {
  auto in = detail::open_input(path);
  PrerankedList list;
  list.dimension = dimension;
  std::string line;
  std::size_t row = 0;
  while (detail::read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = detail::split_line(line, '\t');
    require(cells.size() == 2, path.string() + ": line " + std::to_string(row) + " must have two columns");
    const auto v = detail::parse_double(cells[1]);
    require(v.has_value(), path.string() + ": non-numeric score on line " + std::to_string(row));
    list.entries.push_back({cells[0], *v, false});
  }
  return list;
}

/// Extreme-gene set of one dimension: the top_n highest and top_n lowest r.
inline std::vector<std::size_t> extreme_set(const PrerankedList& list,
                                            const std::unordered_map<std::string, std::size_t>& index,
                                            std::size_t top_n) {
  const std::size_t n = list.entries.size();
  std::vector<std::size_t> s;
  s.reserve(2 * top_n);
  for (std::size_t i = 0; i < top_n; ++i) s.push_back(index.at(list.entries[i].gene));
  for (std::size_t i = n - top_n; i < n; ++i) s.push_back(index.at(list.entries[i].gene));
  return s;
}

namespace detail {

inline std::unordered_map<std::string, std::size_t> gene_universe(const std::vector<PrerankedList>& lists,
                                                                  std::size_t top_n) {
  require(lists.size() >= 2, "uniqueness needs at least two dimensions");
  require(top_n >= 1, "uniqueness: top_n must be >= 1");
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& e : lists[0].entries) index.emplace(e.gene, index.size());
  require(index.size() == lists[0].entries.size(), "uniqueness: duplicate gene in preranked list");
  for (const auto& l : lists) {
    require(l.entries.size() == index.size(), "uniqueness: preranked lists cover different genes");
    for (const auto& e : l.entries)
      require(index.count(e.gene) == 1, "uniqueness: gene '" + e.gene + "' missing from the first list");
  }
  require(2 * top_n <= index.size(), "uniqueness: top_n=" + std::to_string(top_n) +
                                         " too large for " + std::to_string(index.size()) + " genes");
  return index;
}

/// u_k for index sets over a universe of size G; `count` is scratch space.
inline std::vector<double> set_uniqueness(const std::vector<std::vector<std::size_t>>& sets,
                                          std::vector<std::uint32_t>& count) {
  for (const auto& s : sets)
    for (auto g : s) ++count[g];
  std::vector<double> u;
  for (const auto& s : sets) {
    std::size_t unique = 0;
    for (auto g : s) unique += count[g] == 1 ? 1 : 0;
    u.push_back(static_cast<double>(unique) / static_cast<double>(s.size()));
  }
  for (const auto& s : sets)
    for (auto g : s) count[g] = 0;
  return u;
}

}  // namespace detail

/// u_k = |S_k \ union_{j != k} S_j| / |S_k|.
inline std::vector<double> uniqueness_score(const std::vector<PrerankedList>& lists, std::size_t top_n = 1000) {
  const auto index = detail::gene_universe(lists, top_n);
  std::vector<std::vector<std::size_t>> sets;
  for (const auto& l : lists) sets.push_back(extreme_set(l, index, top_n));
  std::vector<std::uint32_t> count(index.size(), 0);
  return detail::set_uniqueness(sets, count);
}

struct UniquenessResult {
  std::vector<double> u;
  std::vector<double> p_value;
  std::size_t n_permutations = 0;
  std::size_t top_n = 0;
  std::uint64_t seed = 0;
};

/// Null: every dimension's set replaced by a uniform random gene subset of
/// the same size. Permutation b draws from stream (seed, b).
inline UniquenessResult uniqueness_permutation_test(const std::vector<PrerankedList>& lists,
                                                    std::size_t top_n = 1000, std::size_t n_perm = 1000,
                                                    std::uint64_t seed = 0) {
  require(n_perm >= 1, "uniqueness: n_perm must be >= 1");
  const auto index = detail::gene_universe(lists, top_n);
  const std::size_t G = index.size();
  std::vector<std::vector<std::size_t>> sets;
  for (const auto& l : lists) sets.push_back(extreme_set(l, index, top_n));
  std::vector<std::uint32_t> count(G, 0);

  UniquenessResult res;
  res.u = detail::set_uniqueness(sets, count);
  res.n_permutations = n_perm;
  res.top_n = top_n;
  res.seed = seed;
  std::vector<std::size_t> exceed(sets.size(), 0);
  std::vector<std::vector<std::size_t>> null_sets(sets.size());
  for (std::size_t b = 0; b < n_perm; ++b) {
    Rng rng = make_stream(seed, b);
    for (std::size_t k = 0; k < sets.size(); ++k) null_sets[k] = sample_without_replacement(G, sets[k].size(), rng);
    const auto u = detail::set_uniqueness(null_sets, count);
    for (std::size_t k = 0; k < sets.size(); ++k) exceed[k] += u[k] >= res.u[k] ? 1 : 0;
  }
  for (auto e : exceed)
    res.p_value.push_back(static_cast<double>(1 + e) / static_cast<double>(n_perm + 1));
  return res;
}

struct Signature {
  std::size_t dimension = 0;
  std::vector<std::string> top;     // highest r first
  std::vector<std::string> bottom;  // lowest r first
};

/// Extremes of one list. Equal r is resolved by gene id at both ends; the
/// bottom is taken from the genes not already in the top.
inline Signature signature_genes(const PrerankedList& list, std::size_t n_top = 20, std::size_t n_bottom = 20) {
  require(list.entries.size() >= n_top + n_bottom,
          "signature_genes: list has " + std::to_string(list.entries.size()) + " genes, fewer than " +
              std::to_string(n_top + n_bottom));
  std::vector<RankedGene> sorted = list.entries;
  detail::sort_ranked(sorted);
  Signature sig;
  sig.dimension = list.dimension;
  for (std::size_t i = 0; i < n_top; ++i) sig.top.push_back(sorted[i].gene);
  std::vector<RankedGene> rest(sorted.begin() + static_cast<std::ptrdiff_t>(n_top), sorted.end());
  std::sort(rest.begin(), rest.end(), [](const RankedGene& a, const RankedGene& b) {
    return a.r != b.r ? a.r < b.r : a.gene < b.gene;
  });
  for (std::size_t i = 0; i < n_bottom; ++i) sig.bottom.push_back(rest[i].gene);
  return sig;
}

/// Union of all signature genes, first occurrence order, duplicates once.
inline std::vector<std::string> signature_union(const std::vector<Signature>& sigs) {
  std::vector<std::string> out;
  std::unordered_map<std::string, bool> seen;
  for (const auto& s : sigs) {
    for (const auto* part : {&s.top, &s.bottom})
      for (const auto& g : *part)
        if (seen.emplace(g, true).second) out.push_back(g);
  }
  return out;
}

}  // namespace twinpurify
