#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "twinpurify/interpret.hpp"
#include "twinpurify/stats.hpp"

#include <set>

using namespace twinpurify;
using Catch::Matchers::ContainsSubstring;

namespace {

/// List whose entries appear in the given order, scores descending.
PrerankedList ordered(const std::vector<std::string>& genes, std::size_t dim = 0) {
  PrerankedList l;
  l.dimension = dim;
  for (std::size_t i = 0; i < genes.size(); ++i)
    l.entries.push_back({genes[i], 1.0 - 2.0 * static_cast<double>(i) / static_cast<double>(genes.size())});
  return l;
}

std::vector<std::string> gene_names(std::size_t n) {
  std::vector<std::string> g;
  for (std::size_t i = 0; i < n; ++i) g.push_back("g" + std::to_string(1000 + i));
  return g;
}

double r_of(const PrerankedList& l, const std::string& gene) {
  for (const auto& e : l.entries)
    if (e.gene == gene) return e.r;
  FAIL("gene not found");
  return 0.0;
}

}  // namespace

TEST_CASE("dimension-gene correlation", "[interpret]") {
  const Eigen::MatrixXd emb = tp_test::random_matrix(50, 2, 1);
  Eigen::MatrixXd x(50, 4);
  x.col(0) = emb.col(0);
  x.col(1) = -3.0 * emb.col(1) + Eigen::VectorXd::Constant(50, 2.0);
  x.col(2).setConstant(7.0);
  x.col(3) = tp_test::random_matrix(50, 1, 2);
  const auto m = tp_test::make_matrix(x);
  const auto lists = dim_gene_correlation(emb, m);
  REQUIRE(lists.size() == 2);
  CHECK(std::abs(r_of(lists[0], "G0") - 1.0) < 1e-12);
  CHECK(std::abs(r_of(lists[1], "G1") + 1.0) < 1e-12);
  CHECK(r_of(lists[0], "G2") == 0.0);
  for (const auto& e : lists[0].entries)
    if (e.gene == "G2") CHECK(e.constant);
  CHECK(lists[0].entries.front().gene == "G0");
  CHECK(lists[1].entries.back().gene == "G1");

  // Positive affine maps of a dimension leave the ranking unchanged.
  Eigen::MatrixXd scaled = emb;
  scaled.col(0) = 4.0 * scaled.col(0).array() + 11.0;
  const auto again = dim_gene_correlation(scaled, m);
  for (std::size_t i = 0; i < 4; ++i) CHECK(again[0].entries[i].gene == lists[0].entries[i].gene);

  CHECK_THROWS_AS(dim_gene_correlation(emb.topRows(10), m), ValidationError);
}

TEST_CASE("independent columns give small correlations", "[interpret]") {
  int small = 0;
  for (unsigned s = 0; s < 100; ++s) {
    const auto lists = dim_gene_correlation(tp_test::random_matrix(1000, 1, 2 * s),
                                            tp_test::make_matrix(tp_test::random_matrix(1000, 1, 2 * s + 1)));
    small += std::abs(lists[0].entries[0].r) < 0.1 ? 1 : 0;
  }
  CHECK(small >= 99);
}

TEST_CASE("rnk export and import", "[interpret]") {
  const auto dir = tp_test::scratch_dir("rnk");
  PrerankedList l;
  l.entries = {{"TP53", 0.9}, {"ESR1", 0.125}, {"ERBB2", -0.5}};
  export_rnk(l, dir / "a.rnk");
  CHECK(tp_test::read_text(dir / "a.rnk") == "TP53\t0.9\nESR1\t0.125\nERBB2\t-0.5\n");
  const auto back = import_rnk(dir / "a.rnk");
  REQUIRE(back.entries.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.entries[i].gene == l.entries[i].gene);
    CHECK(back.entries[i].r == l.entries[i].r);
  }

  PrerankedList bad;
  bad.entries = {{"A\tB", 0.1}};
  CHECK_THROWS_WITH(export_rnk(bad, dir / "b.rnk"), ContainsSubstring("illegal character"));
}

TEST_CASE("uniqueness fixtures", "[interpret]") {
  const auto g = gene_names(12);
  // Dimension 0 extremes {0,1,10,11}; dimension 1 extremes {2,3,8,9}.
  const auto l0 = ordered(g);
  const auto l1 = ordered({g[2], g[3], g[0], g[1], g[4], g[5], g[6], g[7], g[10], g[11], g[8], g[9]});
  CHECK(uniqueness_score({l0, l1}, 2) == std::vector<double>{1.0, 1.0});
  CHECK(uniqueness_score({l0, l0}, 2) == std::vector<double>{0.0, 0.0});
  // One shared gene (g0) between the two extreme sets.
  const auto l2 = ordered({g[0], g[3], g[2], g[1], g[4], g[5], g[6], g[7], g[10], g[11], g[8], g[9]});
  CHECK(uniqueness_score({l0, l2}, 2) == std::vector<double>{0.75, 0.75});

  CHECK_THROWS_AS(uniqueness_score({l0}, 2), ValidationError);
  CHECK_THROWS_AS(uniqueness_score({l0, l1}, 7), ValidationError);
}

TEST_CASE("uniqueness permutation p-values", "[interpret]") {
  // Four dimensions whose extreme sets partition a 40-gene universe; random
  // sets of 10 almost never do.
  const auto g = gene_names(40);
  std::vector<PrerankedList> lists;
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<std::string> head, middle, tail;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i >= 10 * k && i < 10 * k + 5) head.push_back(g[i]);
      else if (i >= 10 * k + 5 && i < 10 * k + 10) tail.push_back(g[i]);
      else middle.push_back(g[i]);
    }
    head.insert(head.end(), middle.begin(), middle.end());
    head.insert(head.end(), tail.begin(), tail.end());
    lists.push_back(ordered(head, k));
  }
  const auto disjoint = uniqueness_permutation_test(lists, 5, 200, 1);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(disjoint.u[k] == 1.0);
    CHECK(disjoint.p_value[k] == 1.0 / 201.0);
  }

  const auto same = uniqueness_permutation_test({lists[0], lists[0]}, 5, 50, 1);
  CHECK(same.u == std::vector<double>{0.0, 0.0});
  CHECK(same.p_value == std::vector<double>{1.0, 1.0});

  CHECK(uniqueness_permutation_test(lists, 5, 200, 1).p_value == disjoint.p_value);

  // Higher observed uniqueness never has a larger p-value under one seed.
  const auto small = gene_names(24);
  std::vector<double> u, p;
  for (std::size_t shift = 0; shift <= 4; ++shift) {
    std::vector<std::string> other = small;
    std::rotate(other.begin(), other.begin() + static_cast<std::ptrdiff_t>(shift), other.end());
    const auto r = uniqueness_permutation_test({ordered(small), ordered(other)}, 4, 300, 9);
    u.push_back(r.u[0]);
    p.push_back(r.p_value[0]);
  }
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < u.size(); ++j)
      if (u[i] > u[j]) CHECK(p[i] <= p[j]);
}

TEST_CASE("signatures", "[interpret]") {
  const auto g = gene_names(40);
  const auto sig = signature_genes(ordered(g));
  CHECK(sig.top == std::vector<std::string>(g.begin(), g.begin() + 20));
  CHECK(sig.bottom == std::vector<std::string>(g.rbegin(), g.rbegin() + 20));

  // Ties at the cutoff go to the smaller gene id.
  PrerankedList tied;
  tied.entries = {{"b", 0.5}, {"a", 0.5}, {"c", 0.1}, {"d", -0.2}};
  const auto t = signature_genes(tied, 1, 1);
  CHECK(t.top == std::vector<std::string>{"a"});
  CHECK(t.bottom == std::vector<std::string>{"d"});

  std::vector<Signature> sigs;
  const auto big = gene_names(100);
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<std::string> order = big;
    std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(15 * k), order.end());
    sigs.push_back(signature_genes(ordered(order, k)));
  }
  const auto u = signature_union(sigs);
  CHECK(u.size() <= 160);
  CHECK(std::set<std::string>(u.begin(), u.end()).size() == u.size());

  CHECK_THROWS_AS(signature_genes(ordered(gene_names(39))), ValidationError);
}
