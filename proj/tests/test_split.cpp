#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "pluto/special.hpp"
#include "pluto/split.hpp"

using namespace pluto;

TEST_CASE("pearson independence test on published contingency tables") {
  const double left_pos[] = {42, 28, 24, 32}, left_neg[] = {28, 53, 57, 36};
  PearsonResult a = pearson_chi2_independence(left_pos, left_neg);
  CHECK(a.df == 3);
  CHECK(std::abs(a.chi2 - 16.950) <= 0.01);
  CHECK(std::abs(a.p_value - 0.0007) < 0.00005);

  const double right_pos[] = {27, 39, 46, 54}, right_neg[] = {43, 42, 35, 14};
  PearsonResult b = pearson_chi2_independence(right_pos, right_neg);
  CHECK(std::abs(b.chi2 - 25.670) <= 0.01);
  CHECK(b.p_value < 0.0001);
}

TEST_CASE("pearson test ignores empty columns") {
  const double pos[] = {3, 0, 1}, neg[] = {1, 0, 3};
  PearsonResult r = pearson_chi2_independence(pos, neg);
  CHECK(r.df == 1);
  CHECK(r.chi2 == doctest::Approx(2.0));
}

TEST_CASE("adjusted statistic by hand") {
  const double obs[] = {3, 1}, expct[] = {2, 2}, tot[] = {4, 4};
  SplitTestResult r = chi2_from_columns(obs, expct, tot, 1);
  CHECK(r.chi2 == doctest::Approx(2.0));
  CHECK(r.df == 1);
  CHECK(r.realized_columns == 2);
  CHECK(r.p_value == doctest::Approx(chi2_sf(2.0, 1)));
  CHECK(r.log_p == doctest::Approx(std::log(r.p_value)));

  SplitTestResult reduced = chi2_from_columns(obs, expct, tot, 2);
  CHECK(reduced.p_value == 1.0);

  const double one_obs[] = {3}, one_exp[] = {2}, one_tot[] = {4};
  CHECK(chi2_from_columns(one_obs, one_exp, one_tot, 1).p_value == 1.0);
}

TEST_CASE("chi-square tail agrees with closed forms") {
  for (double x : {0.1, 1.0, 4.0, 30.0}) CHECK(chi2_sf(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
  CHECK(chi2_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(chi2_sf(0.0, 3) == 1.0);
  CHECK(chi2_log_sf(2000.0, 2) == doctest::Approx(-1000.0).epsilon(1e-12));
  CHECK(chi2_log_sf(5000.0, 7) < chi2_log_sf(4000.0, 7));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(p_to_z(0.05) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(z_from_log_p(std::log(1e-10)) == doctest::Approx(p_to_z(1e-10)).epsilon(1e-10));
  // Deep tail: log erfc(t) is close to -t^2 - log(t sqrt(pi)).
  const double t = 40.0;
  const double log_p = -t * t - std::log(t * std::sqrt(M_PI)) + std::log(1 - 0.5 / (t * t) + 0.75 / std::pow(t, 4));
  CHECK(z_from_log_p(log_p) == doctest::Approx(std::sqrt(2.0) * t).epsilon(1e-9));
}

TEST_CASE("fitted regressor loses two degrees of freedom, others one") {
  Dataset d = fixture::piecewise(400, 1);
  NodeView v = NodeView::all(d);
  std::vector<double> p(v.size(), 0.5);
  SplitTestResult fitted = adjusted_chi2(v, 1, p, true, 5);
  SplitTestResult other = adjusted_chi2(v, 1, p, false, 5);
  CHECK(fitted.chi2 == doctest::Approx(other.chi2));
  CHECK(fitted.df == 3);
  CHECK(other.df == 4);
  SplitTestResult cat = adjusted_chi2(v, 3, p, true, 5);
  CHECK(cat.df == 2);
}

TEST_CASE("best simple regressor minimizes deviance over candidates") {
  Dataset d = fixture::piecewise(300, 2);
  NodeView v = NodeView::all(d);
  BestSimpleOutcome b = best_simple_regressor(v);
  REQUIRE(b.status == NodeStatus::Ok);
  auto y = v.responses();
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t col : d.regressor_candidates()) {
    const std::size_t cols[] = {col};
    FittedGlm f = fit_irls(regressor_matrix(v, cols), y);
    if (f.deviance < best) {
      best = f.deviance;
      arg = col;
    }
  }
  CHECK(*b.model.best_regressor == arg);
  CHECK(b.model.deviance == doctest::Approx(best));
  CHECK(b.model.fitted.size() == v.size());
}

TEST_CASE("selection finds the variable that switches the slope") {
  Dataset d = fixture::piecewise(600, 3, 0.0);
  NodeView v = NodeView::all(d);
  Engine rng(1);
  for (NodeOption opt : {NodeOption::Simple, NodeOption::Multiple}) {
    NodeModelOptions o;
    o.option = opt;
    o.n_lambda = 30;
    o.cv_folds = 5;
    SelectionOutcome s = select_split_variable(v, o, 5, rng);
    REQUIRE(s.status == NodeStatus::Ok);
    CHECK(d.column(s.variable).name == "x1");
    CHECK(s.tests.size() == d.split_candidates().size());
  }
}

TEST_CASE("pure nodes are reported without a fit") {
  std::vector<Column> cols{fixture::numeric("a", {1, 2, 3, 4})};
  Dataset d(cols, {1, 1, 1, 1}, "y");
  Engine rng(1);
  NodeModel m = fit_node_model(NodeView::all(d), NodeModelOptions{}, rng);
  CHECK(m.status == NodeStatus::PureNode);
  CHECK(m.pure_label == 1);
  CHECK(select_split_variable_simple(NodeView::all(d), 5).status == NodeStatus::PureNode);
}

TEST_CASE("argmin p compares log tails") {
  std::vector<SplitTestResult> t(3);
  t[0].log_p = -800.0;
  t[1].log_p = -900.0;
  t[2].log_p = -1.0;
  CHECK(argmin_p(t) == 1);
  t[0].log_p = -900.0;
  CHECK(argmin_p(t) == 0);
}
