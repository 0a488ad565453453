#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pluto/error.hpp"
#include "pluto/metrics.hpp"
#include "pluto/tree.hpp"

using namespace pluto;

namespace {

GrowOptions small_options(std::uint64_t seed = 11) {
  GrowOptions o;
  o.partition.min_node_size = 40;
  o.max_depth = 4;
  o.seed = seed;
  return o;
}

const Tree& grown_tree() {
  static const Tree t = grow(fixture::piecewise(800, 21), small_options()).tree;
  return t;
}

// Random full binary tree of the given depth with deviances only; internal
// nodes sometimes fail to improve on their children.
Tree random_deviance_tree(std::uint64_t seed, int depth) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Tree t;
  std::function<double(std::int64_t, int)> build = [&](std::int64_t id, int d) -> double {
    TreeNode n;
    n.id = id;
    n.depth = d;
    const bool leaf = d == depth || (d > 0 && unif(rng) < 0.25);
    if (leaf) {
      n.deviance = 5.0 + 20.0 * unif(rng);
    } else {
      n.split = SplitRule{"x", false, 0.0, {}};
      double below = build(2 * id, d + 1) + build(2 * id + 1, d + 1);
      n.deviance = below + (unif(rng) < 0.15 ? -1.0 : 12.0 * unif(rng));
    }
    t.nodes[id] = n;
    return n.deviance;
  };
  build(1, 0);
  return t;
}

std::vector<PruneRecord> table_records() {
  // (leaves, mean, se) rows of a published pruning table.
  const double rows[][3] = {{227, 2766, 64}, {200, 2645, 65}, {150, 2464, 51}, {101, 2209, 46}, {50, 2017, 33},
                            {40, 1955, 23},  {39, 1953, 24},  {38, 1945, 25},  {36, 1948, 23},  {35, 1958, 20},
                            {33, 1962, 18},  {32, 1959, 21},  {31, 1961, 21},  {30, 1964, 20},  {29, 1959, 18},
                            {27, 1962, 18},  {26, 1972, 17},  {16, 2027, 18},  {1, 3011, 8}};
  std::vector<PruneRecord> out;
  for (const auto& r : rows) {
    PruneRecord p;
    p.subtree_leaves = static_cast<std::size_t>(r[0]);
    p.cv_dev_mean = r[1];
    p.cv_dev_se = r[2];
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("se rule picks the published subtree sizes") {
  auto recs = table_records();
  CHECK(recs[apply_se_rule(recs, 0.0)].subtree_leaves == 38);
  CHECK(recs[apply_se_rule(recs, 0.5)].subtree_leaves == 36);
  CHECK(recs[apply_se_rule(recs, 1.0)].subtree_leaves == 27);
  CHECK_THROWS_AS(apply_se_rule(recs, -0.1), ConfigError);
  CHECK_THROWS_AS(apply_se_rule(std::vector<PruneRecord>{}, 0.0), ConfigError);
}

TEST_CASE("se rule sizes never grow with theta") {
  auto recs = table_records();
  std::size_t prev = recs[apply_se_rule(recs, 0.0)].subtree_leaves;
  for (double th = 0.05; th <= 5.0; th += 0.05) {
    std::size_t now = recs[apply_se_rule(recs, th)].subtree_leaves;
    CHECK(now <= prev);
    prev = now;
  }
}

TEST_CASE("weakest-link sequence matches brute-force subtree enumeration") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Tree t = random_deviance_tree(seed, seed % 2 ? 3 : 4);
    PruneSequence seq = prune_sequence(t);
    auto children = [&](std::int64_t id) -> std::vector<std::int64_t> {
      if (t.nodes.at(id).is_leaf()) return {};
      return {2 * id, 2 * id + 1};
    };
    auto subs = oracle::all_subtrees(1, children, [&](std::int64_t id) { return t.nodes.at(id).deviance; });

    std::vector<double> probes{0.0};
    for (double k : seq.kappas) probes.insert(probes.end(), {k, k * 1.001 + 1e-9, k * 0.999});
    probes.push_back(1e6);
    for (double kappa : probes) {
      if (kappa < 0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (auto [d, l] : subs) best = std::min(best, d + kappa * static_cast<double>(l));
      auto k = static_cast<std::size_t>(std::upper_bound(seq.kappas.begin(), seq.kappas.end(), kappa) -
                                        seq.kappas.begin()) - 1;
      CHECK(seq.deviance[k] + kappa * static_cast<double>(seq.leaves[k]) == doctest::Approx(best).epsilon(1e-9));
    }
    CHECK(seq.leaves.back() == 1);
  }
}

TEST_CASE("pruning sequence is nested with strictly increasing kappa") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Tree t = random_deviance_tree(seed, 4);
    PruneSequence seq = prune_sequence(t);
    CHECK(seq.kappas.front() == 0.0);
    for (std::size_t k = 1; k < seq.kappas.size(); ++k) {
      CHECK(seq.kappas[k] > seq.kappas[k - 1]);
      CHECK(seq.leaves[k] < seq.leaves[k - 1]);
      auto a = seq.collapsed_ids(seq.kappas[k - 1]), b = seq.collapsed_ids(seq.kappas[k]);
      CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
      Tree sub = seq.subtree(t, seq.kappas[k]);
      CHECK(sub.n_leaves() == seq.leaves[k]);
      CHECK(sub.deviance() == doctest::Approx(seq.deviance[k]));
    }
  }
}

TEST_CASE("grown trees partition the data") {
  const Tree& t = grown_tree();
  Dataset d = fixture::piecewise(800, 21);
  REQUIRE(t.n_leaves() > 1);
  std::size_t total = 0;
  for (auto id : t.leaf_ids()) total += t.nodes.at(id).n_rows;
  CHECK(total == d.n_rows());

  auto leaf = t.route(d);
  std::map<std::int64_t, std::size_t> counts;
  for (auto id : leaf) ++counts[id];
  for (auto id : t.leaf_ids()) CHECK(counts[id] == t.nodes.at(id).n_rows);

  for (const auto& [id, node] : t.nodes) {
    CHECK(node.id == id);
    CHECK(node.depth <= 4);
    CHECK(node.n_rows >= 40);
    if (id > 1) CHECK(t.nodes.count(id / 2));
    if (!node.is_leaf()) {
      CHECK(t.nodes.at(2 * id).n_rows + t.nodes.at(2 * id + 1).n_rows == node.n_rows);
      CHECK(node.depth < 4);
    }
  }
}

TEST_CASE("training rows reproduce leaf statistics and predictions lie in the unit interval") {
  const Tree& t = grown_tree();
  Dataset d = fixture::piecewise(800, 21);
  auto p = t.predict(d);
  auto leaf = t.route(d);
  std::map<std::int64_t, std::size_t> pos;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
    pos[leaf[i]] += d.response()[i];
  }
  for (auto id : t.leaf_ids()) CHECK(pos[id] == t.nodes.at(id).n_pos);
  CHECK(dev(d.response(), p) == doctest::Approx(t.deviance()).epsilon(1e-8));
}

TEST_CASE("growth is deterministic for a seed") {
  Dataset d = fixture::piecewise(500, 8);
  std::string a = grow(d, small_options(5)).tree.to_json().dump();
  std::string b = grow(d, small_options(5)).tree.to_json().dump();
  CHECK(a == b);
}

TEST_CASE("json round trip keeps predictions exactly") {
  const Tree& t = grown_tree();
  Tree u = Tree::from_json(nlohmann::json::parse(t.to_json().dump()));
  Dataset d = fixture::piecewise(300, 77);
  CHECK(t.predict(d) == u.predict(d));
  CHECK(u.to_json() == t.to_json());
}

TEST_CASE("unknown tree format versions are rejected") {
  nlohmann::json doc = grown_tree().to_json();
  doc["version"] = 99;
  CHECK_THROWS_AS(Tree::from_json(doc), IoError);
  CHECK_THROWS_AS(Tree::from_json(nlohmann::json{{"format", "other"}}), IoError);
}

TEST_CASE("prediction needs every column the tree uses") {
  const Tree& t = grown_tree();
  std::vector<Column> cols{fixture::numeric("x3", {0.1})};
  Dataset d(cols, {}, "y");
  try {
    t.predict(d);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("'" + t.root().split->variable + "'") != std::string::npos);
  }
}

TEST_CASE("unseen category labels route right") {
  Tree t;
  TreeNode root;
  root.split = SplitRule{"k", true, 0.0, {"a"}};
  t.nodes[1] = root;
  for (std::int64_t id : {2, 3}) {
    TreeNode leaf;
    leaf.id = id;
    leaf.depth = 1;
    leaf.pure = true;
    leaf.pure_label = id == 2 ? 1 : 0;
    t.nodes[id] = leaf;
  }
  std::vector<Column> cols{fixture::categorical("k", {0, 1, 2}, {"a", "b", "zzz"})};
  Dataset d(cols, {}, "y");
  CHECK(t.route(d) == std::vector<std::int64_t>{2, 3, 3});
  auto p = t.predict(d);
  CHECK(p[0] == 1.0 - kPureLeafClip);
  CHECK(p[2] == kPureLeafClip);
}

TEST_CASE("cross-validated pruning yields one record per subtree") {
  Dataset d = fixture::piecewise(600, 4);
  GrowOptions o = small_options(2);
  Tree full = grow(d, o).tree;
  PruneSequence seq = prune_sequence(full);
  auto recs = cv_prune(d, o, seq, 5, 9);
  REQUIRE(recs.size() == seq.kappas.size());
  for (std::size_t k = 0; k < recs.size(); ++k) {
    CHECK(recs[k].subtree_leaves == seq.leaves[k]);
    CHECK(recs[k].fold_devs.size() == 5);
    CHECK(std::isfinite(recs[k].cv_dev_mean));
    CHECK(recs[k].cv_dev_se >= 0.0);
  }
  auto again = cv_prune(d, o, seq, 5, 9);
  for (std::size_t k = 0; k < recs.size(); ++k) CHECK(again[k].cv_dev_mean == recs[k].cv_dev_mean);
  std::size_t prev = recs[apply_se_rule(recs, 0.0)].subtree_leaves;
  for (double th : {0.5, 1.0, 2.0}) {
    std::size_t now = recs[apply_se_rule(recs, th)].subtree_leaves;
    CHECK(now <= prev);
    prev = now;
  }
  CHECK_THROWS_AS(cv_prune(d, o, seq, 1, 9), ConfigError);
}

TEST_CASE("trace reports every split node") {
  Dataset d = fixture::piecewise(500, 6);
  GrowOptions o = small_options(3);
  std::vector<nlohmann::json> lines;
  o.trace = [&](const nlohmann::json& j) { lines.push_back(j); };
  Tree t = grow(d, o).tree;
  std::size_t internal = 0;
  for (const auto& [id, n] : t.nodes) internal += !n.is_leaf();
  CHECK(lines.size() >= internal);
}

TEST_CASE("dot export lists every node") {
  const Tree& t = grown_tree();
  std::string dot = to_dot(t);
  CHECK(dot.rfind("digraph", 0) == 0);
  for (const auto& [id, n] : t.nodes) CHECK(dot.find("n" + std::to_string(id) + " ") != std::string::npos);
  CHECK(dot.find("Node 1\\n") != std::string::npos);
  CHECK(dot.find("\\\\n") == std::string::npos);
}

TEST_CASE("empty data cannot grow a tree") {
  std::vector<Column> cols{fixture::numeric("a", {})};
  Dataset d(cols, {}, "y");
  CHECK_THROWS_AS(grow(d, small_options()), DataError);
}
