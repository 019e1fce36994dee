#include <doctest.h>

#include <string>
#include <vector>

#include "spajm/basis.hpp"
#include "spajm/data.hpp"
#include "spajm/model_spec.hpp"
#include "spajm/rng.hpp"

using namespace spajm;

namespace {

TermSpec make_term(TermKind k, const std::string& cov = "") {
  TermSpec t;
  t.kind = k;
  t.covariate = cov;
  t.flat_prior = k == TermKind::Linear;  // penalized kinds never carry a flat prior
  return t;
}

// random valid model: respects placement rules, term-count limits, and the
// single-baseline rule
ParsedModel random_model(Rng& rng) {
  ParsedModel m;
  auto covname = [&](int i) { return "x" + std::to_string(i); };
  int next_cov = 0;
  auto lin = [&] {
    TermSpec t = make_term(TermKind::Linear, covname(next_cov++));
    if (rng.uniform() < 0.3) t.flat_prior = false;
    return t;
  };
  auto ps = [&] {
    TermSpec t = make_term(TermKind::PSpline, covname(next_cov++));
    t.degree = 1 + rng.below(4);
    t.knots = t.degree + 2 + static_cast<int>(rng.below(10));
    t.diff_order = 1 + static_cast<int>(rng.below(2));
    if (rng.uniform() < 0.3) {
      t.a = 0.01 + rng.uniform();
      t.b = 0.01 + rng.uniform();
    }
    return t;
  };
  // shared terms imply a survival part, so eta_ls stays empty unless any_surv
  const bool any_surv = rng.uniform() < 0.8;
  for (int i = static_cast<int>(rng.below(3)); i-- > 0;)
    m.predictors.eta_l.push_back(rng.uniform() < 0.5 ? lin() : ps());
  if (any_surv) {
    for (int i = static_cast<int>(rng.below(3)); i-- > 0;)
      m.predictors.eta_ls.push_back(rng.uniform() < 0.5 ? lin() : ps());
    if (rng.uniform() < 0.5) m.predictors.eta_ls.push_back(make_term(TermKind::RandomIntercept));
    if (rng.uniform() < 0.5) m.predictors.eta_ls.push_back(make_term(TermKind::RandomSlope, "t"));
    for (int i = static_cast<int>(rng.below(2)); i-- > 0;) m.predictors.eta_s.push_back(lin());
    TermSpec base = make_term(TermKind::BaselinePSpline);
    base.degree = 2 + static_cast<int>(rng.below(2));
    base.knots = base.degree + 2 + static_cast<int>(rng.below(6));
    base.diff_order = 2;
    m.predictors.eta_s.push_back(base);
    if (rng.uniform() < 0.4) {
      TermSpec mrf = make_term(TermKind::Mrf, "region");
      mrf.map_ref = "map.gra";
      m.predictors.eta_s.push_back(mrf);
    }
  } else if (m.predictors.eta_l.empty()) {
    m.predictors.eta_l.push_back(lin());
  }
  m.predictors.association_init = rng.uniform(-1.0, 1.0);
  m.sampler.iterations = 100 + static_cast<long>(rng.below(5000));
  m.sampler.burn_in = rng.below(static_cast<std::uint64_t>(m.sampler.iterations));
  m.sampler.thinning = 1 + static_cast<long>(rng.below(20));
  m.sampler.seed = rng.engine()();
  m.sampler.chains = 1 + static_cast<int>(rng.below(3));
  m.sampler.f0_at_midpoint = rng.uniform() < 0.5;
  m.priors.a0 = 0.001 + rng.uniform();
  m.priors.b0 = 0.001 + rng.uniform();
  m.priors.a = 0.001 + rng.uniform();
  m.priors.b = 0.001 + rng.uniform();
  m.priors.a_alpha = 0.001 + rng.uniform();
  m.priors.b_alpha = 0.001 + rng.uniform();
  return m;
}

}  // namespace

TEST_SUITE("model-spec") {

TEST_CASE("minimal valid config parses") {
  const std::string text =
      "[eta_ls]\n"
      "linear(x1)\n"
      "random_intercept()\n"
      "random_slope(t)\n"
      "\n"
      "[eta_s]\n"
      "baseline_pspline(knots=10, degree=3, diff=2)\n";
  const ParsedModel m = parse_model_config(text);
  REQUIRE(m.predictors.eta_ls.size() == 3);
  CHECK(m.predictors.eta_ls[0].kind == TermKind::Linear);
  CHECK(m.predictors.eta_ls[0].covariate == "x1");
  CHECK(m.predictors.eta_ls[1].kind == TermKind::RandomIntercept);
  CHECK(m.predictors.eta_ls[2].kind == TermKind::RandomSlope);
  CHECK(m.predictors.eta_ls[2].covariate == "t");
  REQUIRE(m.predictors.eta_s.size() == 1);
  CHECK(m.predictors.eta_s[0].kind == TermKind::BaselinePSpline);
  CHECK(m.predictors.eta_s[0].knots == 10);
  CHECK(m.sampler.iterations == 20000);  // defaults untouched
}

TEST_CASE("comments and sampler keys") {
  const std::string text =
      "# top comment\n"
      "[eta_l]\n"
      "linear(age) # trailing comment\n"
      "\n[sampler]\n"
      "iterations = 500\n"
      "burnin = 100\n"
      "thin = 4\n"
      "seed = 99\n"
      "chains = 2\n"
      "alpha_init = -0.25\n"
      "\n[priors]\n"
      "a0 = 0.01\n"
      "b_alpha = 0.1\n";
  const ParsedModel m = parse_model_config(text);
  CHECK(m.sampler.iterations == 500);
  CHECK(m.sampler.burn_in == 100);
  CHECK(m.sampler.thinning == 4);
  CHECK(m.sampler.seed == 99);
  CHECK(m.sampler.chains == 2);
  CHECK(m.predictors.association_init == -0.25);
  CHECK(m.priors.a0 == 0.01);
  CHECK(m.priors.b_alpha == 0.1);
  CHECK(m.priors.b0 == 0.001);  // untouched default
}

TEST_CASE("semantic violations are rejected") {
  auto parse_err = [](const std::string& text, const std::string& needle) {
    try {
      parse_model_config(text);
      FAIL("expected ConfigError for: " << text);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  parse_err(
      "[eta_ls]\nmrf(region, map=a.gra)\n\n[eta_s]\nmrf(region2, map=b.gra)\n"
      "baseline_pspline()\n",
      "at most one mrf");
  parse_err("[eta_l]\nlinear(x)\n\n[sampler]\niterations = 100\nburnin = 100\n", "burnin");
  parse_err("[eta_l]\nrandom_intercept()\n", "eta_ls");
  parse_err("[eta_s]\nlinear(x)\n", "baseline_pspline");
  parse_err("[eta_l]\npspline(x, knots=4, degree=3, diff=2)\n", "knots");
  parse_err("[eta_l]\npspline(x, knots=8, degree=3, diff=3)\n", "diff");
  parse_err("[eta_l]\nbaseline_pspline()\n", "eta_s");
  parse_err(
      "[eta_ls]\nrandom_intercept()\nrandom_intercept()\n\n[eta_s]\nbaseline_pspline()\n",
      "random_intercept");
  parse_err("[eta_l]\nlinear(x)\n\n[priors]\na0 = 0\n", "positive");
  parse_err("", "predictor");
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_model_config("[eta_l]\nlinear(x\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_model_config("[eta_q]\n"), ConfigError);
  CHECK_THROWS_AS(parse_model_config("[eta_l]\nwibble(x)\n"), ConfigError);
  CHECK_THROWS_AS(parse_model_config("[eta_l]\nlinear(x, prior=banana)\n"), ConfigError);
}

TEST_CASE("serialization round trips") {
  Rng rng(derive_seed(2024, 5));
  for (int i = 0; i < 60; ++i) {
    const ParsedModel m = random_model(rng);
    const std::string text = serialize_model_config(m);
    ParsedModel back;
    CAPTURE(text);
    REQUIRE_NOTHROW(back = parse_model_config(text));
    CHECK(back == m);
    CHECK(serialize_model_config(back) == text);  // canonical fixed point
  }
}

TEST_CASE("validate_against_data reports mismatches") {
  const auto longd = LongitudinalDataset::from_table(
      Table::from_csv_text("id,time,y,x1,region\n1,0,1,0.5,1\n2,0.5,2,0.25,2\n"));
  const auto survd = SurvivalDataset::from_table(
      Table::from_csv_text("id,T,delta,z,region\n1,1,1,0.2,1\n2,0.8,0,0.1,2\n"));

  ParsedModel ok;
  ok.predictors.eta_l = {make_term(TermKind::Linear, "x1")};
  ok.predictors.eta_ls = {make_term(TermKind::Linear, "x1"),
                          make_term(TermKind::RandomIntercept)};
  ok.predictors.eta_s = {make_term(TermKind::Linear, "z"),
                         make_term(TermKind::BaselinePSpline)};
  CHECK(validate_against_data(ok.predictors, longd, survd).empty());

  ParsedModel bad = ok;
  bad.predictors.eta_l.push_back(make_term(TermKind::Linear, "x9"));
  const auto problems = validate_against_data(bad.predictors, longd, survd);
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find("x9") != std::string::npos);

  // region labels must appear in the adjacency map when one is supplied
  const AdjacencyGraph grid_ok = parse_gra_text("2\n1\n1\n1\n2\n1\n0\n");
  ParsedModel withmap = ok;
  TermSpec mrf = make_term(TermKind::Mrf, "region");
  mrf.map_ref = "some.gra";
  withmap.predictors.eta_s.push_back(mrf);
  CHECK(validate_against_data(withmap.predictors, longd, survd, &grid_ok).empty());

  const AdjacencyGraph grid_bad = parse_gra_text("2\nR1\n1\n1\nR33\n1\n0\n");
  const auto missing = validate_against_data(withmap.predictors, longd, survd, &grid_bad);
  REQUIRE(missing.size() == 1);
  CHECK(missing[0].find("'1'") != std::string::npos);
}

TEST_CASE("read_model_config prefixes the path on errors") {
  try {
    read_model_config("/nonexistent/model.cfg");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("model.cfg") != std::string::npos);
  }
}

}  // TEST_SUITE("model-spec")
