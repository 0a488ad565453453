// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion, with
// details on indented lines. Arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pluto/config.hpp"
#include "pluto/importance.hpp"
#include "pluto/metrics.hpp"
#include "pluto/simbench.hpp"
#include "pluto/split.hpp"
#include "pluto/train.hpp"
#include "pluto/tree.hpp"

using namespace pluto;

namespace {

// Tolerances and thresholds.
constexpr double kChi2Tol = 0.01;
constexpr double kPTol = 0.00005;  // p printed to four decimals
constexpr double kCoefTol = 1e-6;
constexpr double kMleTol = 1e-5;
constexpr int kSimIterations = 500;
constexpr std::size_t kSimN = 500;
constexpr std::uint64_t kSimSeed = 20240601;
constexpr double kNullLo = 0.14, kNullHi = 0.27;
constexpr double kQuadX1 = 0.75;
constexpr double kLinQuadX3 = 0.95;
constexpr double kLlqMultipleX1 = 0.88;
constexpr double kLlqSimpleX1 = 0.05;
constexpr double kBbcLo = 0.15, kBbcHi = 0.25;
constexpr double kGammaBelow = 1.5, kGammaShare = 0.90;
constexpr double kCensusMerLo = 0.13, kCensusMerHi = 0.17, kCensusAuroc = 0.89;

struct Outcome {
  enum Kind { Pass, Fail, Skip } kind = Fail;
  std::vector<std::string> details;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Checker {
  Outcome out{Outcome::Pass, {}};
  void expect(bool ok, std::string what) {
    out.details.push_back((ok ? "ok   " : "FAIL ") + what);
    if (!ok) out.kind = Outcome::Fail;
  }
  void note(std::string what) { out.details.push_back("     " + what); }
};

// 1. Pearson independence test on the published tables.
Outcome pearson_tables() {
  Checker c;
  const double lp[] = {42, 28, 24, 32}, ln[] = {28, 53, 57, 36};
  const double rp[] = {27, 39, 46, 54}, rn[] = {43, 42, 35, 14};
  PearsonResult a = pearson_chi2_independence(lp, ln), b = pearson_chi2_independence(rp, rn);
  c.expect(std::abs(a.chi2 - 16.950) <= kChi2Tol, fmt("left chi2 %.4f (want 16.950)", a.chi2));
  c.expect(std::abs(a.p_value - 0.0007) < kPTol, fmt("left p %.6f (want 0.0007)", a.p_value));
  c.expect(std::abs(b.chi2 - 25.670) <= kChi2Tol, fmt("right chi2 %.4f (want 25.670)", b.chi2));
  c.expect(b.p_value < 0.0001, fmt("right p %.3g (want < 0.0001)", b.p_value));
  return c.out;
}

// 2. Theta-SE rule on the published pruning table.
Outcome se_rule_table() {
  Checker c;
  const double rows[][3] = {{227, 2766, 64}, {200, 2645, 65}, {150, 2464, 51}, {101, 2209, 46}, {50, 2017, 33},
                            {40, 1955, 23},  {39, 1953, 24},  {38, 1945, 25},  {36, 1948, 23},  {35, 1958, 20},
                            {33, 1962, 18},  {32, 1959, 21},  {31, 1961, 21},  {30, 1964, 20},  {29, 1959, 18},
                            {27, 1962, 18},  {26, 1972, 17},  {16, 2027, 18},  {1, 3011, 8}};
  std::vector<PruneRecord> recs;
  for (const auto& r : rows) {
    PruneRecord p;
    p.subtree_leaves = static_cast<std::size_t>(r[0]);
    p.cv_dev_mean = r[1];
    p.cv_dev_se = r[2];
    recs.push_back(p);
  }
  const std::pair<double, std::size_t> want[] = {{0.0, 38}, {0.5, 36}, {1.0, 27}};
  for (auto [theta, leaves] : want) {
    std::size_t got = recs[apply_se_rule(recs, theta)].subtree_leaves;
    c.expect(got == leaves, fmt("theta %.1f picks %zu leaves (want %zu)", theta, got, leaves));
  }
  return c.out;
}

// 3. Solvers against independent oracles.
Outcome solver_oracles() {
  Checker c;
  const double alphas[] = {1.0, 0.5, 0.1, 0.9};
  const double fractions[] = {0.5, 0.2, 0.05, 0.01};
  double worst_en = 0.0, worst_irls = 0.0, worst_mle = 0.0;
  int failures = 0;
  for (int i = 0; i < 20; ++i) {
    const int k = 1 + i % 10;
    const int n = 60 + 7 * i;  // 60..193
    auto p = oracle::random_problem(1000 + i, n, k, 0.6);
    const double alpha = alphas[i % 4];
    const double lambda = fractions[(i / 4) % 4] * lambda_max(p.x, p.y, alpha);
    FittedGlm f = fit_elastic_net(p.x, p.y, {alpha, lambda});
    auto o = oracle::elastic_net_fista(p.x, p.y, alpha, lambda);
    double err = std::abs(f.intercept - o.intercept);
    for (int j = 0; j < k; ++j) err = std::max(err, std::abs(f.coefficients[j] - o.coefficients[j]));
    worst_en = std::max(worst_en, err);
    failures += !f.converged;

    FittedGlm a = fit_irls(p.x, p.y);
    FittedGlm b = fit_elastic_net(p.x, p.y, {alpha, 0.0});
    double e2 = std::abs(a.intercept - b.intercept);
    for (int j = 0; j < k; ++j) e2 = std::max(e2, std::abs(a.coefficients[j] - b.coefficients[j]));
    worst_irls = std::max(worst_irls, e2);
    failures += !a.converged + !b.converged;

    auto q = oracle::random_problem(5000 + i, n, 1, 0.8);
    FittedGlm s = fit_irls(q.x, q.y);
    auto [b0, b1] = oracle::mle_one_regressor({q.x.data(), static_cast<std::size_t>(n)}, q.y);
    worst_mle = std::max({worst_mle, std::abs(s.intercept - b0), std::abs(s.coefficients[0] - b1)});
  }
  c.expect(failures == 0, fmt("%d non-converged fits", failures));
  c.expect(worst_en <= kCoefTol, fmt("elastic net vs proximal gradient: max |diff| %.2e", worst_en));
  c.expect(worst_irls <= kCoefTol, fmt("lambda = 0 vs irls: max |diff| %.2e", worst_irls));
  c.expect(worst_mle <= kMleTol, fmt("irls vs golden-section MLE: max |diff| %.2e", worst_mle));
  return c.out;
}

SelectionTable run_selection(SimModel m, NodeOption opt, bool bbc = false) {
  SelectionOptions o;
  o.model.option = opt;
  o.iterations = kSimIterations;
  o.n = kSimN;
  o.seed = kSimSeed;
  o.bias_correct = bbc;
  o.calibration.reps = 100;
  o.calibration.grid = {1.0, 2.0, 1000};
  return selection_experiment(m, o);
}

std::string freq_line(const SelectionTable& t) {
  std::string s = t.model + "/" + t.option + ":";
  for (std::size_t v = 0; v < t.variables.size(); ++v) s += fmt(" %s %.3f", t.variables[v].c_str(), t.frequency(v));
  return s + fmt(" failed %.3f", t.failure_rate());
}

// 4. Selection frequencies on simulated data.
Outcome selection_frequencies() {
  Checker c;
  SelectionTable null_s = run_selection(SimModel::Null, NodeOption::Simple);
  c.note(freq_line(null_s));
  for (std::size_t v = 0; v < 5; ++v) {
    double f = null_s.frequency(v);
    c.expect(f >= kNullLo && f <= kNullHi, fmt("(a) Null/simple %s %.3f in [%.2f, %.2f]",
                                                null_s.variables[v].c_str(), f, kNullLo, kNullHi));
  }
  for (NodeOption opt : {NodeOption::Simple, NodeOption::Multiple}) {
    SelectionTable q = run_selection(SimModel::Quadratic, opt);
    c.note(freq_line(q));
    c.expect(q.frequency(0) >= kQuadX1, fmt("(b) Quadratic/%s X1 %.3f >= %.2f", q.option.c_str(), q.frequency(0), kQuadX1));
  }
  for (NodeOption opt : {NodeOption::Simple, NodeOption::Multiple}) {
    SelectionTable lq = run_selection(SimModel::LinQuad, opt);
    c.note(freq_line(lq));
    c.expect(lq.frequency(2) >= kLinQuadX3,
             fmt("(c) LinQuad/%s X3 %.3f >= %.2f", lq.option.c_str(), lq.frequency(2), kLinQuadX3));
  }
  SelectionTable llq_m = run_selection(SimModel::LinLinQuad, NodeOption::Multiple);
  c.note(freq_line(llq_m));
  c.expect(llq_m.frequency(0) >= kLlqMultipleX1,
           fmt("(d) LinLinQuad/multiple X1 %.3f >= %.2f", llq_m.frequency(0), kLlqMultipleX1));
  SelectionTable llq_s = run_selection(SimModel::LinLinQuad, NodeOption::Simple);
  c.note(freq_line(llq_s));
  c.expect(llq_s.frequency(0) <= kLlqSimpleX1,
           fmt("(e) LinLinQuad/simple X1 %.3f <= %.2f", llq_s.frequency(0), kLlqSimpleX1));
  return c.out;
}

// 5. Bootstrap calibration removes the categorical preference under the null.
Outcome bias_correction() {
  Checker c;
  SelectionTable t = run_selection(SimModel::Null, NodeOption::Multiple, true);
  c.note(freq_line(t));
  const double x5 = t.frequency(4);
  c.expect(x5 >= kBbcLo && x5 <= kBbcHi, fmt("X5 %.3f in [%.2f, %.2f]", x5, kBbcLo, kBbcHi));
  std::size_t below = 0;
  for (double g : t.gamma_stars) below += g < kGammaBelow;
  const double share = t.gamma_stars.empty() ? 0.0 : static_cast<double>(below) / t.gamma_stars.size();
  c.expect(share >= kGammaShare, fmt("gamma* < %.1f in %.3f of %zu runs (want >= %.2f)", kGammaBelow, share,
                                     t.gamma_stars.size(), kGammaShare));
  return c.out;
}

// 6. Structural properties of grown and pruned trees.
void check_tree(Checker& c, const std::string& label, const Dataset& d, const RunConfig& cfg) {
  Schema schema = Schema::from_json(nlohmann::json::parse(fixture::kPiecewiseSchema));
  GrowOptions g = cfg.grow_options();
  Tree full = grow(d, g).tree;

  std::size_t total = 0;
  for (auto id : full.leaf_ids()) total += full.nodes.at(id).n_rows;
  auto routed = full.route(d);
  std::map<std::int64_t, std::size_t> hits;
  for (auto id : routed) ++hits[id];
  bool routes_match = true;
  for (auto id : full.leaf_ids()) routes_match &= hits[id] == full.nodes.at(id).n_rows;
  c.expect(total == d.n_rows() && routes_match,
           fmt("%s: %zu leaves partition %zu rows", label.c_str(), full.n_leaves(), d.n_rows()));

  PruneSequence seq = prune_sequence(full);
  bool increasing = true, nested = true;
  for (std::size_t k = 1; k < seq.kappas.size(); ++k) {
    increasing &= seq.kappas[k] > seq.kappas[k - 1] && seq.leaves[k] < seq.leaves[k - 1];
    auto a = seq.collapsed_ids(seq.kappas[k - 1]), b = seq.collapsed_ids(seq.kappas[k]);
    nested &= std::includes(b.begin(), b.end(), a.begin(), a.end());
  }
  c.expect(increasing, fmt("%s: kappa strictly increasing over %zu subtrees", label.c_str(), seq.kappas.size()));
  c.expect(nested, fmt("%s: pruning sequence nested", label.c_str()));

  if (seq.kappas.size() > 1) {
    auto recs = cv_prune(d, g, seq, cfg.prune_folds, derive_seed(*cfg.seed, 1));
    bool monotone = true;
    std::size_t prev = recs[apply_se_rule(recs, 0.0)].subtree_leaves;
    for (double th = 0.25; th <= 3.0; th += 0.25) {
      std::size_t now = recs[apply_se_rule(recs, th)].subtree_leaves;
      monotone &= now <= prev;
      prev = now;
    }
    c.expect(monotone, fmt("%s: theta-SE sizes non-increasing in theta", label.c_str()));
  }

  std::string a = train(d, schema, cfg).tree.to_json().dump();
  std::string b = train(d, schema, cfg).tree.to_json().dump();
  c.expect(a == b, fmt("%s: serialization byte-identical across runs (%zu bytes)", label.c_str(), a.size()));
}

Outcome tree_properties() {
  Checker c;
  Dataset d = fixture::piecewise(1000, 606);
  RunConfig base;
  base.seed = 77;
  base.prune_folds = 5;
  base.max_depth = 6;
  check_tree(c, "simple", d, base);

  RunConfig multiple = base;
  multiple.option = NodeOption::Multiple;
  multiple.n_lambda = 40;
  multiple.cv_folds = 5;
  check_tree(c, "multiple", fixture::piecewise(600, 607), multiple);

  RunConfig bbc = base;
  bbc.bias_correct = true;
  bbc.calib_reps = 30;
  bbc.calib_grid = {1.0, 2.0, 200};
  bbc.pure_policy = PurePolicy::Skip;
  check_tree(c, "simple+bbc/skip", fixture::piecewise(800, 608), bbc);
  return c.out;
}

// 7. Metrics against brute-force oracles.
Outcome metric_oracles() {
  Checker c;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int auroc_mismatch = 0, trim_mismatch = 0;
  double worst_trim = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::uint8_t> y(200);
    std::vector<double> p(200);
    for (int i = 0; i < 200; ++i) {
      p[i] = rep % 2 ? std::round(unif(rng) * 20) / 20 * 0.98 + 0.01 : 0.001 + 0.998 * unif(rng);
      y[i] = unif(rng) < p[i];
    }
    auroc_mismatch += auroc(y, p) != oracle::auroc_pairs(y, p);
    const double a = dev_trimmed(y, p), b = oracle::dev_trimmed_one_percent(y, p);
    worst_trim = std::max(worst_trim, std::abs(a - b) / b);
    trim_mismatch += std::abs(a - b) > 1e-12 * b;
  }
  c.expect(auroc_mismatch == 0, fmt("auroc equals pairwise count on 50 sets of 200 (%d mismatches)", auroc_mismatch));
  const std::vector<std::uint8_t> y4{0, 1, 0, 1};
  const std::vector<double> half(4, 0.5);
  const double d4 = dev(y4, half);
  c.expect(std::abs(d4 - 8.0 * std::log(2.0)) <= 1e-14, fmt("dev of four 0.5 predictions %.15f = 8 ln 2", d4));
  c.expect(trim_mismatch == 0, fmt("dev_trimmed equals sort-and-sum (max rel diff %.1e)", worst_trim));
  return c.out;
}

// 8. Census income data, when supplied.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) {
    auto b = f.find_first_not_of(" \t\r"), e = f.find_last_not_of(" \t\r.");
    out.push_back(b == std::string::npos ? "" : f.substr(b, e - b + 1));
  }
  return out;
}

// Converts a raw UCI file to a headed CSV without incomplete rows.
std::size_t convert_census(const std::string& src, const std::string& dst) {
  static const char* header =
      "Age,Workclass,Fnlwgt,Education,Education-num,Marital,Occupation,Relationship,Race,Sex,Capital-gain,"
      "Capital-loss,Hour,Country,Income";
  std::ifstream in(src);
  std::ofstream out(dst);
  out << header << "\n";
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    auto f = split_fields(line);
    if (f.size() != 15) continue;
    if (std::any_of(f.begin(), f.end(), [](const std::string& s) { return s == "?" || s.empty(); })) continue;
    for (std::size_t j = 0; j < f.size(); ++j) out << (j ? "," : "") << f[j];
    out << "\n";
    ++rows;
  }
  return rows;
}

Outcome census() {
  Checker c;
  const char* dir = std::getenv("PLUTO_CENSUS_DIR");
  if (!dir || !std::filesystem::exists(std::string(dir) + "/adult.data") ||
      !std::filesystem::exists(std::string(dir) + "/adult.test")) {
    c.out.kind = Outcome::Skip;
    c.note("set PLUTO_CENSUS_DIR to a directory holding adult.data and adult.test");
    return c.out;
  }
  auto tmp = fixture::scratch_dir("census");
  const std::string train_csv = (tmp / "train.csv").string(), test_csv = (tmp / "test.csv").string();
  std::size_t ntr = convert_census(std::string(dir) + "/adult.data", train_csv);
  std::size_t nte = convert_census(std::string(dir) + "/adult.test", test_csv);
  c.note(fmt("complete rows: train %zu, test %zu", ntr, nte));
  Schema schema = Schema::from_json(nlohmann::json::parse(R"({
    "Age":"numeric","Workclass":"categorical","Fnlwgt":"excluded","Education":"categorical",
    "Education-num":"numeric","Marital":"categorical","Occupation":"categorical","Relationship":"categorical",
    "Race":"categorical","Sex":"categorical","Capital-gain":"numeric","Capital-loss":"numeric","Hour":"numeric",
    "Country":"categorical","Income":{"role":"response","positive":">50K"}})"));
  Dataset tr = load_csv(train_csv, schema), te = load_csv(test_csv, schema);

  RunConfig simple;
  simple.seed = 1994;
  TrainResult m1 = train(tr, schema, simple);
  ScoreReport s = score(te.response(), m1.tree.predict(te));
  c.expect(s.mer >= kCensusMerLo && s.mer <= kCensusMerHi,
           fmt("%s (%zu leaves) test MER %.4f in [%.2f, %.2f]", m1.tree.model_name.c_str(), m1.tree.n_leaves(),
               s.mer, kCensusMerLo, kCensusMerHi));
  c.expect(s.auroc && *s.auroc >= kCensusAuroc, fmt("test AUROC %.4f >= %.2f", s.auroc.value_or(0), kCensusAuroc));

  RunConfig multiple = simple;
  multiple.option = NodeOption::Multiple;
  TrainResult m2 = train(tr, schema, multiple);
  ImportanceOptions io;
  io.seed = 1994;
  ImportanceReport imp = rank_importance(m2.tree, te, io);
  std::set<std::string> top;
  std::string order;
  for (std::size_t i = 0; i < imp.variables.size(); ++i) {
    if (i < 3) top.insert(imp.variables[i].name);
    order += (i ? ", " : "") + imp.variables[i].name;
  }
  c.note("importance order (" + m2.tree.model_name + "): " + order);
  c.expect(top == std::set<std::string>{"Marital", "Capital-gain", "Education-num"},
           "Marital, Capital-gain, Education-num rank in the top three");
  return c.out;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit_s;  // wall-clock budget, 0 for none
  };
  const std::vector<Criterion> criteria = {
      {"Pearson chi-square on published tables", pearson_tables, 1.0},
      {"theta-SE rule on published pruning table", se_rule_table, 1.0},
      {"solver oracle equivalence", solver_oracles, 30.0},
      {"selection frequencies on simulated data", selection_frequencies, 900.0},
      {"bootstrap bias correction under the null", bias_correction, 1200.0},
      {"tree structural properties", tree_properties, 0.0},
      {"metric oracles", metric_oracles, 5.0},
      {"census income data", census, 0.0},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  bool all_ok = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o.kind = Outcome::Fail;
      o.details.push_back(std::string("FAIL exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double limit = criteria[i].limit_s;
    if (limit > 0.0 && o.kind != Outcome::Skip) {
      const bool in_time = secs < limit;
      o.details.push_back(fmt("%s runtime %.1f s < %.0f s", in_time ? "ok  " : "FAIL", secs, limit));
      if (!in_time) o.kind = Outcome::Fail;
    }
    const char* tag = o.kind == Outcome::Pass ? "PASS" : o.kind == Outcome::Skip ? "SKIP" : "FAIL";
    std::printf("criterion %d %s: %s (%.1f s)\n", id, tag, criteria[i].name, secs);
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    all_ok &= o.kind != Outcome::Fail;
  }
  return all_ok ? 0 : 1;
}
