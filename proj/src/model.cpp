#include "spajm/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace spajm {

bool JointModel::has_shared() const {
  for (const auto& b : blocks)
    if (b.predictor == PredictorId::Shared) return true;
  return false;
}

std::vector<int> JointModel::block_indices(PredictorId p) const {
  std::vector<int> out;
  for (std::size_t k = 0; k < blocks.size(); ++k)
    if (blocks[k].predictor == p) out.push_back(static_cast<int>(k));
  return out;
}

EffectBlock apply_sum_to_zero(EffectBlock block) {
  const Design& owner = block.Z_long.nrows() > 0 ? block.Z_long : block.Z_ped;
  if (owner.nrows() == 0) throw ConfigError("cannot center a block without rows");
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(owner.nrows());
  Eigen::VectorXd csum = owner.tmul(ones);
  Eigen::MatrixXd Q = sum_to_zero_transform(csum);
  if (Q.cols() == Q.rows()) return block;  // constraint was vacuous
  auto fold = [&](Design& d) {
    if (d.nrows() == 0) return;
    if (d.indexed()) {
      d.Q = d.Q.size() > 0 ? Eigen::MatrixXd(d.Q * Q) : Q;
    } else {
      d.dense = d.dense * Q;
    }
  };
  fold(block.Z_long);
  fold(block.Z_ped);
  if (block.K.size() > 0) {
    block.K = Q.transpose() * block.K * Q;
    block.rank_K = penalty_rank(block.K);
  }
  block.constraint_Q =
      block.constraint_Q.size() > 0 ? Eigen::MatrixXd(block.constraint_Q * Q) : Q;
  return block;
}

namespace {

// evaluation-time and covariate resolution over the two row sets
struct RowContext {
  const LongitudinalDataset& long_data;
  const SurvivalDataset& surv;
  const AugmentedDataset& ped;
  bool midpoint;                       // hazard evaluation time inside intervals
  std::map<int, std::size_t> surv_row;

  explicit RowContext(const LongitudinalDataset& l, const SurvivalDataset& s,
                      const AugmentedDataset& p, bool mid)
      : long_data(l), surv(s), ped(p), midpoint(mid) {
    for (std::size_t i = 0; i < surv.id.size(); ++i) surv_row[surv.id[i]] = i;
  }

  static bool is_time(const std::string& name) { return name == "t" || name == "time"; }

  std::vector<double> ped_eval_time() const {
    std::vector<double> t(ped.nrows());
    for (std::size_t r = 0; r < ped.nrows(); ++r)
      t[r] = midpoint ? 0.5 * (ped.kappa_lo[r] + ped.kappa_hi[r]) : ped.kappa_hi[r];
    return t;
  }

  std::vector<double> long_values(const std::string& name) const {
    if (is_time(name)) return long_data.time;
    if (long_data.covariates.has(name)) {
      if (!long_data.covariates.is_numeric(name))
        throw ConfigError("covariate '" + name + "' must be numeric");
      return long_data.covariates.num(name);
    }
    if (surv.covariates.has(name)) {
      if (!surv.covariates.is_numeric(name))
        throw ConfigError("covariate '" + name + "' must be numeric");
      const auto& src = surv.covariates.num(name);
      std::vector<double> out(long_data.id.size());
      for (std::size_t r = 0; r < long_data.id.size(); ++r)
        out[r] = src[surv_row.at(long_data.id[r])];
      return out;
    }
    throw ConfigError("covariate '" + name + "' not found");
  }

  std::vector<double> ped_values(const std::string& name) const {
    if (is_time(name)) return ped_eval_time();
    if (ped.covariates.has(name)) {
      if (!ped.covariates.is_numeric(name))
        throw ConfigError("covariate '" + name + "' must be numeric");
      return ped.covariates.num(name);
    }
    if (surv.covariates.has(name)) {
      if (!surv.covariates.is_numeric(name))
        throw ConfigError("covariate '" + name + "' must be numeric");
      const auto& src = surv.covariates.num(name);
      std::vector<double> out(ped.nrows());
      for (std::size_t r = 0; r < ped.nrows(); ++r)
        out[r] = src[surv_row.at(ped.id[r])];
      return out;
    }
    throw ConfigError("covariate '" + name + "' not found on augmented rows");
  }

  std::vector<std::string> long_regions(const std::string& name) const {
    if (long_data.covariates.has(name))
      return long_data.covariates.as_strings(name);
    if (surv.covariates.has(name)) {
      auto src = surv.covariates.as_strings(name);
      std::vector<std::string> out(long_data.id.size());
      for (std::size_t r = 0; r < long_data.id.size(); ++r)
        out[r] = src[surv_row.at(long_data.id[r])];
      return out;
    }
    throw ConfigError("region column '" + name + "' not found");
  }

  std::vector<std::string> ped_regions(const std::string& name) const {
    if (ped.covariates.has(name)) return ped.covariates.as_strings(name);
    if (surv.covariates.has(name)) {
      auto src = surv.covariates.as_strings(name);
      std::vector<std::string> out(ped.nrows());
      for (std::size_t r = 0; r < ped.nrows(); ++r)
        out[r] = src[surv_row.at(ped.id[r])];
      return out;
    }
    throw ConfigError("region column '" + name + "' not found on augmented rows");
  }
};

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

std::string block_label(PredictorId pred, const TermSpec& t) {
  std::string p = predictor_prefix(pred);
  switch (t.kind) {
    case TermKind::Linear: return p + ".linear." + t.covariate;
    case TermKind::PSpline: return p + ".pspline." + t.covariate;
    case TermKind::RandomIntercept: return p + ".rint";
    case TermKind::RandomSlope: return p + ".rslope." + t.covariate;
    case TermKind::Mrf: return p + ".mrf." + t.covariate;
    case TermKind::BaselinePSpline: return p + ".baseline";
  }
  return p + ".?";
}

}  // namespace

JointModel assemble_model(const ParsedModel& parsed,
                          const LongitudinalDataset& long_data,
                          const SurvivalDataset& surv,
                          const AugmentedDataset& ped,
                          const AdjacencyGraph* map) {
  auto problems = validate_against_data(parsed.predictors, long_data, surv);
  if (!problems.empty()) {
    std::string msg = "model does not fit the data:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  JointModel m;
  m.priors = parsed.priors;
  m.alpha_init = parsed.predictors.association_init;
  m.y = to_eigen(long_data.y);
  m.ped_offset = ped.offset;
  m.ped_delta.resize(ped.nrows());
  for (std::size_t r = 0; r < ped.nrows(); ++r) m.ped_delta[r] = ped.delta[r];

  RowContext ctx(long_data, surv, ped, parsed.sampler.f0_at_midpoint);
  m.ped_time = ctx.ped_eval_time();

  bool any_long_term = !parsed.predictors.eta_l.empty() || !parsed.predictors.eta_ls.empty();
  std::set<std::string> labels;
  auto push = [&](EffectBlock b) {
    if (!labels.insert(b.label).second)
      throw ConfigError("duplicate term '" + b.label + "' in model");
    m.blocks.push_back(std::move(b));
  };

  if (any_long_term && long_data.id.size() > 0) {
    EffectBlock b;
    b.label = "l.intercept";
    b.kind = TermKind::Linear;
    b.predictor = PredictorId::Longitudinal;
    b.Z_long = Design::from_dense(Eigen::MatrixXd::Ones(long_data.id.size(), 1));
    b.flat_prior = true;
    push(std::move(b));
  }

  auto build = [&](const TermSpec& t, PredictorId pred) {
    EffectBlock b;
    b.label = block_label(pred, t);
    b.kind = t.kind;
    b.predictor = pred;
    b.prior_a = t.a.value_or(parsed.priors.a);
    b.prior_b = t.b.value_or(parsed.priors.b);
    b.flat_prior = t.flat_prior;
    bool on_long = pred != PredictorId::Survival;
    bool on_ped = pred != PredictorId::Longitudinal && ped.nrows() > 0;

    switch (t.kind) {
      case TermKind::Linear: {
        if (on_long) {
          auto v = ctx.long_values(t.covariate);
          b.Z_long = Design::from_dense(to_eigen(v));
          b.cov_min = *std::min_element(v.begin(), v.end());
          b.cov_max = *std::max_element(v.begin(), v.end());
        }
        if (on_ped) b.Z_ped = Design::from_dense(to_eigen(ctx.ped_values(t.covariate)));
        if (!t.flat_prior) {
          b.K = Eigen::MatrixXd::Identity(1, 1);
          b.rank_K = 1;
        }
        break;
      }
      case TermKind::PSpline: {
        std::vector<double> vals = on_long ? ctx.long_values(t.covariate)
                                           : ctx.ped_values(t.covariate);
        b.cov_min = *std::min_element(vals.begin(), vals.end());
        b.cov_max = *std::max_element(vals.begin(), vals.end());
        b.basis = make_bspline_basis(b.cov_min, b.cov_max, t.knots, t.degree);
        b.has_basis = true;
        if (on_long) b.Z_long = Design::from_dense(b.basis.evaluate(to_eigen(vals)));
        if (on_ped)
          b.Z_ped = Design::from_dense(
              b.basis.evaluate(to_eigen(ctx.ped_values(t.covariate))));
        b.K = difference_penalty(t.knots, t.diff_order);
        b.rank_K = t.knots - t.diff_order;
        b = apply_sum_to_zero(std::move(b));
        break;
      }
      case TermKind::RandomIntercept:
      case TermKind::RandomSlope: {
        const std::vector<double>* slope_long = nullptr;
        const std::vector<double>* slope_ped = nullptr;
        std::vector<double> vl, vp;
        if (t.kind == TermKind::RandomSlope) {
          vl = ctx.long_values(t.covariate);
          vp = ctx.ped_values(t.covariate);
          slope_long = &vl;
          slope_ped = &vp;
        }
        int n = surv.n_subjects;
        b.Z_long = random_effect_design(long_data.id, n, slope_long);
        if (on_ped) b.Z_ped = random_effect_design(ped.id, n, slope_ped);
        b.K = Eigen::MatrixXd::Identity(n, n);
        b.rank_K = n;
        break;
      }
      case TermKind::Mrf: {
        if (!map) throw ConfigError("mrf term needs an adjacency map");
        map->validate();
        if (on_long) b.Z_long = mrf_design(ctx.long_regions(t.covariate), *map);
        if (on_ped) b.Z_ped = mrf_design(ctx.ped_regions(t.covariate), *map);
        b.K = mrf_penalty(*map);
        b.rank_K = static_cast<int>(map->size()) - map->connected_components();
        b = apply_sum_to_zero(std::move(b));
        break;
      }
      case TermKind::BaselinePSpline: {
        auto vals = ctx.ped_eval_time();
        b.cov_min = *std::min_element(vals.begin(), vals.end());
        b.cov_max = *std::max_element(vals.begin(), vals.end());
        b.basis = make_bspline_basis(b.cov_min, b.cov_max, t.knots, t.degree);
        b.has_basis = true;
        b.Z_ped = Design::from_dense(b.basis.evaluate(to_eigen(vals)));
        b.K = difference_penalty(t.knots, t.diff_order);
        b.rank_K = t.knots - t.diff_order;
        // left uncentered: the baseline carries the hazard level
        break;
      }
    }
    if (t.kind == TermKind::BaselinePSpline)
      m.baseline_block = static_cast<int>(m.blocks.size());
    push(std::move(b));
  };

  for (const auto& t : parsed.predictors.eta_l) build(t, PredictorId::Longitudinal);
  for (const auto& t : parsed.predictors.eta_ls) build(t, PredictorId::Shared);
  for (const auto& t : parsed.predictors.eta_s) build(t, PredictorId::Survival);

  if (m.has_survival() && m.baseline_block < 0)
    throw ConfigError("survival part needs a baseline_pspline term");
  return m;
}

}  // namespace spajm
