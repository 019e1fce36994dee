#include "spajm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "spajm/simulate.hpp"

namespace spajm {

namespace {

Eigen::VectorXd linspace(double lo, double hi, int n) {
  Eigen::VectorXd g(n);
  if (n == 1) {
    g(0) = 0.5 * (lo + hi);
    return g;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) g(i) = lo + step * i;
  g(n - 1) = hi;
  return g;
}

double column_mean(const Eigen::MatrixXd& draws, Eigen::Index j) {
  return draws.col(j).mean();
}

Hdi column_hdi(const Eigen::MatrixXd& draws, Eigen::Index j, double level) {
  std::vector<double> v(draws.col(j).data(), draws.col(j).data() + draws.rows());
  return hdi(v, level);
}

Eigen::Index find_column(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("no sampled parameter named '" + name + "'");
  return static_cast<Eigen::Index>(it - names.begin());
}

// First column of an effect block in the draw layout.  Blocks with a single
// unconstrained coefficient are stored under their bare label, everything
// else as <label>.1, <label>.2, ...
Eigen::Index block_start(const std::vector<std::string>& names, const EffectBlock& blk) {
  if (blk.raw_ncoef() == 1 && blk.kind == TermKind::Linear)
    return find_column(names, blk.label);
  return find_column(names, blk.label + ".1");
}

const EffectBlock& block_by_label(const JointModel& model, const std::string& label) {
  for (const auto& blk : model.blocks)
    if (blk.label == label) return blk;
  throw ConfigError("model has no effect block labelled '" + label + "'");
}

double mean_of(const Eigen::VectorXd& v) { return v.size() > 0 ? v.mean() : 0.0; }

// Scores a vector-valued target: draws (m x p) against truth (p), both
// centered per draw / once by the supplied weights (nullptr = plain mean).
MetricRow score_vector(const std::string& target, const Eigen::MatrixXd& draws,
                       Eigen::VectorXd truth, const Eigen::VectorXd* weights,
                       double level) {
  const Eigen::Index p = truth.size();
  Eigen::MatrixXd centered = draws;
  if (weights != nullptr) {
    const double wsum = weights->sum();
    Eigen::VectorXd shift = centered * (*weights) / wsum;
    centered.colwise() -= shift;  // colwise over rows: subtract per-draw shift
    truth.array() -= truth.dot(*weights) / wsum;
  } else {
    Eigen::VectorXd shift = centered.rowwise().mean();
    centered.colwise() -= shift;
    truth.array() -= truth.mean();
  }
  MetricRow row;
  row.target = target;
  double mse = 0.0, bias = 0.0, mae = 0.0;
  int hits = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double est = column_mean(centered, j);
    const Hdi box = column_hdi(centered, j, level);
    const double err = est - truth(j);
    mse += err * err;
    bias += err;
    mae += std::abs(err);
    if (truth(j) >= box.lo && truth(j) <= box.hi) ++hits;
  }
  row.mse = mse / static_cast<double>(p);
  row.bias = bias / static_cast<double>(p);
  row.mae = mae / static_cast<double>(p);
  row.covered = static_cast<double>(hits) / static_cast<double>(p);
  return row;
}

}  // namespace

Hdi hdi(const std::vector<double>& draws, double level) {
  const std::size_t m = draws.size();
  if (m < 100) throw NumericError("hdi needs at least 100 draws");
  if (!(level > 0.0) || !(level <= 1.0)) throw NumericError("hdi level must be in (0, 1]");
  std::vector<double> s(draws);
  std::sort(s.begin(), s.end());
  std::size_t k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(m)));
  k = std::min(std::max<std::size_t>(k, 1), m);
  Hdi out;
  if (k >= m - 1) {  // window covering all (or all but one) draws: full range
    out.lo = s.front();
    out.hi = s.back();
    out.degenerate = out.lo == out.hi;
    return out;
  }
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k <= m; ++i) {
    const double width = s[i + k - 1] - s[i];
    if (width < best_width) {  // strict: ties keep the lowest start
      best_width = width;
      best = i;
    }
  }
  out.lo = s[best];
  out.hi = s[best + k - 1];
  out.degenerate = out.lo == out.hi;
  return out;
}

Table PosteriorSummary::scalar_table() const {
  std::vector<double> mean, lo, hi, mcse;
  std::vector<std::string> names;
  for (const auto& sc : scalars) {
    names.push_back(sc.name);
    mean.push_back(sc.mean);
    lo.push_back(sc.hdi_lo);
    hi.push_back(sc.hdi_hi);
    mcse.push_back(sc.mcse);
  }
  Table t;
  t.add_str("parameter", names);
  t.add_num("mean", mean);
  t.add_num("hdi_lo", lo);
  t.add_num("hdi_hi", hi);
  t.add_num("mcse", mcse);
  return t;
}

Eigen::MatrixXd pool_draws(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) throw ConfigError("no chains to pool");
  Eigen::Index rows = 0;
  for (const auto& c : chains) {
    if (c.names != chains.front().names)
      throw ConfigError("chains disagree on parameter layout");
    rows += c.draws.rows();
  }
  Eigen::MatrixXd pooled(rows, chains.front().draws.cols());
  Eigen::Index at = 0;
  for (const auto& c : chains) {
    pooled.middleRows(at, c.draws.rows()) = c.draws;
    at += c.draws.rows();
  }
  return pooled;
}

PosteriorSummary summarize_draws(const std::vector<std::string>& names,
                                 const Eigen::MatrixXd& draws, double level) {
  if (static_cast<std::size_t>(draws.cols()) != names.size())
    throw ConfigError("draw matrix does not match parameter names");
  if (draws.rows() < 100) throw NumericError("need at least 100 retained draws to summarize");
  PosteriorSummary out;
  out.level = level;
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    ScalarSummary sc;
    sc.name = names[static_cast<std::size_t>(j)];
    sc.mean = column_mean(draws, j);
    const Hdi box = column_hdi(draws, j, level);
    sc.hdi_lo = box.lo;
    sc.hdi_hi = box.hi;
    sc.mcse = mcse_batch_means(draws.col(j));
    out.scalars.push_back(std::move(sc));
  }
  return out;
}

PosteriorSummary summarize(const std::vector<ChainOutput>& chains,
                           const JointModel& model, double level, int grid_points) {
  const Eigen::MatrixXd pooled = pool_draws(chains);
  PosteriorSummary out = summarize_draws(chains.front().names, pooled, level);

  for (const auto& blk : model.blocks) {
    if (!blk.has_basis) continue;
    const Eigen::VectorXd grid = linspace(blk.cov_min, blk.cov_max, grid_points);
    const Eigen::MatrixXd design = blk.basis.evaluate(grid);
    const Eigen::Index start = block_start(chains.front().names, blk);
    Eigen::MatrixXd curves =
        pooled.middleCols(start, blk.raw_ncoef()) * design.transpose();
    if (blk.constraint_Q.size() > 0) {  // constrained term: report the contrast
      Eigen::VectorXd shift = curves.rowwise().mean();
      curves.colwise() -= shift;
    }
    CurveSummary cs;
    cs.name = blk.label;
    cs.grid.assign(grid.data(), grid.data() + grid.size());
    for (Eigen::Index j = 0; j < curves.cols(); ++j) {
      cs.mean.push_back(column_mean(curves, j));
      const Hdi box = column_hdi(curves, j, level);
      cs.hdi_lo.push_back(box.lo);
      cs.hdi_hi.push_back(box.hi);
    }
    out.curves.push_back(std::move(cs));
  }
  return out;
}

std::vector<MetricRow> score_against_truth(const std::string& truth_json_text,
                                           const std::vector<ChainOutput>& chains,
                                           const JointModel& model, double level,
                                           int grid_points) {
  const auto truth = nlohmann::ordered_json::parse(truth_json_text);
  const Eigen::MatrixXd pooled = pool_draws(chains);
  const std::vector<std::string>& names = chains.front().names;
  if (pooled.rows() < 100) throw NumericError("need at least 100 retained draws to score");

  std::vector<MetricRow> rows;

  auto scalar_row = [&](const std::string& name, double value) {
    MetricRow row;
    row.target = name;
    row.truth = value;
    const Eigen::Index j = find_column(names, name);
    row.estimate = column_mean(pooled, j);
    const Hdi box = column_hdi(pooled, j, level);
    row.bias = row.estimate - value;
    row.mse = row.bias * row.bias;
    row.mae = std::abs(row.bias);
    row.covered = (value >= box.lo && value <= box.hi) ? 1.0 : 0.0;
    rows.push_back(row);
  };

  if (truth.contains("coefficients"))
    for (const auto& [name, value] : truth["coefficients"].items())
      scalar_row(name, value.get<double>());
  if (truth.contains("variances"))
    for (const auto& [name, value] : truth["variances"].items())
      scalar_row(name, value.get<double>());

  if (truth.contains("random_effects")) {
    const auto& re = truth["random_effects"];
    auto vector_target = [&](const std::string& label, const char* key) {
      if (!re.contains(key)) return;
      const std::vector<double> b = re[key].get<std::vector<double>>();
      const EffectBlock& blk = block_by_label(model, label);
      if (blk.raw_ncoef() != static_cast<int>(b.size()))
        throw ConfigError("random effect size mismatch for " + label);
      const Eigen::Index start = block_start(names, blk);
      Eigen::VectorXd bt = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
      rows.push_back(score_vector(label, pooled.middleCols(start, blk.raw_ncoef()),
                                  bt, nullptr, level));
    };
    vector_target("ls.rint", "b0");
    vector_target("ls.rslope.t", "b1");
  }

  if (truth.contains("smooths")) {
    for (const auto& [label, spec] : truth["smooths"].items()) {
      const EffectBlock& blk = block_by_label(model, label);
      const std::string fn = spec.at("fn").get<std::string>();
      const double scale = spec.at("scale").get<double>();
      const std::vector<double> obs = spec.at("obs_values").get<std::vector<double>>();
      auto f = [&](double x) {
        if (fn == "bump") return scale * f_bump(x);
        if (fn == "sine") return scale * f_sine(x);
        throw ConfigError("unknown smooth function '" + fn + "'");
      };
      const Eigen::VectorXd grid = linspace(blk.cov_min, blk.cov_max, grid_points);
      const Eigen::MatrixXd design_grid = blk.basis.evaluate(grid);
      Eigen::VectorXd obs_v = Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size());
      const Eigen::MatrixXd design_obs = blk.basis.evaluate(obs_v);

      const Eigen::Index start = block_start(names, blk);
      const auto coef = pooled.middleCols(start, blk.raw_ncoef());
      Eigen::MatrixXd curves = coef * design_grid.transpose();
      Eigen::VectorXd shift = (coef * design_obs.transpose()).rowwise().mean();
      curves.colwise() -= shift;

      Eigen::VectorXd truth_grid(grid.size());
      for (Eigen::Index i = 0; i < grid.size(); ++i) truth_grid(i) = f(grid(i));
      Eigen::VectorXd truth_obs(obs_v.size());
      for (Eigen::Index i = 0; i < obs_v.size(); ++i) truth_obs(i) = f(obs_v(i));
      truth_grid.array() -= mean_of(truth_obs);

      MetricRow row;
      row.target = label;
      double mse = 0.0, bias = 0.0, mae = 0.0;
      int hits = 0;
      for (Eigen::Index j = 0; j < curves.cols(); ++j) {
        const double est = column_mean(curves, j);
        const Hdi box = column_hdi(curves, j, level);
        const double err = est - truth_grid(j);
        mse += err * err;
        bias += err;
        mae += std::abs(err);
        if (truth_grid(j) >= box.lo && truth_grid(j) <= box.hi) ++hits;
      }
      row.mse = mse / static_cast<double>(curves.cols());
      row.bias = bias / static_cast<double>(curves.cols());
      row.mae = mae / static_cast<double>(curves.cols());
      row.covered = static_cast<double>(hits) / static_cast<double>(curves.cols());
      rows.push_back(row);
    }
  }

  if (truth.contains("mrf_target") && truth.contains("geo")) {
    const std::string label = truth["mrf_target"].get<std::string>();
    const EffectBlock& blk = block_by_label(model, label);
    const auto& geo = truth["geo"];
    const std::vector<double> values = geo.at("values").get<std::vector<double>>();
    const std::vector<std::string> labels = geo.at("labels").get<std::vector<std::string>>();
    const std::vector<std::string> region =
        geo.at("region_of_subject").get<std::vector<std::string>>();
    if (blk.raw_ncoef() != static_cast<int>(values.size()) ||
        labels.size() != values.size())
      throw ConfigError("spatial field size mismatch for " + label);
    std::map<std::string, Eigen::Index> at;
    for (std::size_t i = 0; i < labels.size(); ++i)
      at[labels[i]] = static_cast<Eigen::Index>(i);
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(values.size());
    for (const auto& r : region) {
      auto it = at.find(r);
      if (it == at.end())
        throw ConfigError("subject region '" + r + "' missing from truth labels");
      weights(it->second) += 1.0;
    }
    const Eigen::Index start = block_start(names, blk);
    Eigen::VectorXd vt = Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
    rows.push_back(score_vector(label, pooled.middleCols(start, blk.raw_ncoef()),
                                vt, &weights, level));
  }

  return rows;
}

Table metric_table(const std::vector<MetricRow>& rows) {
  std::vector<std::string> target;
  std::vector<double> estimate, truth, mse, bias, mae, covered;
  for (const auto& r : rows) {
    target.push_back(r.target);
    estimate.push_back(r.estimate);
    truth.push_back(r.truth);
    mse.push_back(r.mse);
    bias.push_back(r.bias);
    mae.push_back(r.mae);
    covered.push_back(r.covered);
  }
  Table t;
  t.add_str("target", target);
  t.add_num("estimate", estimate);
  t.add_num("truth", truth);
  t.add_num("mse", mse);
  t.add_num("bias", bias);
  t.add_num("mae", mae);
  t.add_num("covered", covered);
  return t;
}

}  // namespace spajm
