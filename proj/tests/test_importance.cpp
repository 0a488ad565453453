#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "pluto/error.hpp"
#include "pluto/importance.hpp"
#include "pluto/tree.hpp"

using namespace pluto;

namespace {

Tree fitted_tree() {
  GrowOptions o;
  o.partition.min_node_size = 40;
  o.max_depth = 3;
  o.seed = 4;
  return grow(fixture::piecewise(800, 12), o).tree;
}

std::set<std::string> used_columns(const Tree& t) {
  std::set<std::string> used;
  for (const auto& [id, n] : t.nodes) {
    if (n.split) used.insert(n.split->variable);
    if (n.is_leaf())
      for (std::size_t j = 0; j < n.regressors.size(); ++j)
        if (n.model.coefficients[j] != 0.0) used.insert(n.regressors[j]);
  }
  return used;
}

}  // namespace

TEST_CASE("magnitude ranks give ties their average rank") {
  CHECK(magnitude_ranks({0.1, -0.5, 0.3}) == std::vector<double>{3, 1, 2});
  CHECK(magnitude_ranks({0.2, -0.2, 0.0, 1.0}) == std::vector<double>{2.5, 2.5, 4, 1});
}

TEST_CASE("unused variables get zero deltas and the informative ones lead") {
  Tree t = fitted_tree();
  Dataset test = fixture::piecewise(600, 99);
  ImportanceOptions o;
  o.reps = 5;
  o.seed = 1;
  ImportanceReport r = rank_importance(t, test, o);
  REQUIRE(r.variables.size() == 4);
  auto used = used_columns(t);
  for (const auto& v : r.variables) {
    if (used.count(v.name)) continue;
    CHECK(v.delta_dev_trimmed == 0.0);
    CHECK(v.delta_mer == 0.0);
    CHECK(*v.delta_auroc == 0.0);
  }
  for (std::size_t i = 1; i < r.variables.size(); ++i)
    CHECK(r.variables[i - 1].final_rank <= r.variables[i].final_rank);
  CHECK(r.variables.back().name == "x3");
  CHECK(r.variables.front().delta_dev_trimmed > 0.0);
}

TEST_CASE("importance is reproducible and honors the resampling mode") {
  Tree t = fitted_tree();
  Dataset test = fixture::piecewise(300, 5);
  ImportanceOptions o;
  o.reps = 3;
  o.seed = 8;
  CHECK(rank_importance(t, test, o).to_json() == rank_importance(t, test, o).to_json());
  o.with_replacement = false;
  ImportanceReport p = rank_importance(t, test, o);
  CHECK(p.to_json()["resampling"] == "permutation");
  CHECK(p.to_table().find("Variable") != std::string::npos);
}

TEST_CASE("one-class test data drops auroc from the ranking") {
  Tree t = fitted_tree();
  Dataset test = fixture::piecewise(200, 5);
  Dataset ones = test.with_response(std::vector<std::uint8_t>(200, 1));
  ImportanceOptions o;
  o.reps = 2;
  ImportanceReport r = rank_importance(t, ones, o);
  CHECK_FALSE(r.auroc_used);
  for (const auto& v : r.variables) CHECK_FALSE(v.delta_auroc);
  o.reps = 0;
  CHECK_THROWS_AS(rank_importance(t, test, o), ConfigError);
}
