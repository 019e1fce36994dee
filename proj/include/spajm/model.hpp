#pragma once

// Assembly of a fitted-model description: outcome vectors plus one effect
// block per term, each carrying designs over the longitudinal and augmented
// row sets, its penalty, and the transform used for sum-to-zero centering.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "spajm/basis.hpp"
#include "spajm/data.hpp"
#include "spajm/model_spec.hpp"
#include "spajm/ped.hpp"

namespace spajm {

struct EffectBlock {
  std::string label;
  TermKind kind = TermKind::Linear;
  PredictorId predictor = PredictorId::Longitudinal;
  Design Z_long;            // empty for survival blocks
  Design Z_ped;             // empty for longitudinal blocks
  Eigen::MatrixXd K;        // penalty in sampling coordinates; empty when flat
  bool flat_prior = false;
  int rank_K = 0;
  double prior_a = 0.001, prior_b = 0.001;
  Eigen::MatrixXd constraint_Q;  // raw_coef x ncoef; empty = identity
  BSplineBasis basis;            // spline blocks only
  bool has_basis = false;
  double cov_min = 0.0, cov_max = 0.0;  // covariate range for summary grids

  int ncoef() const {
    return Z_long.nrows() > 0 ? Z_long.ncoef() : Z_ped.ncoef();
  }
  int raw_ncoef() const {
    return constraint_Q.size() > 0 ? static_cast<int>(constraint_Q.rows()) : ncoef();
  }
  // map sampling coordinates back to raw (uncentered) coefficients
  Eigen::VectorXd to_raw(const Eigen::VectorXd& gamma) const {
    return constraint_Q.size() > 0 ? Eigen::VectorXd(constraint_Q * gamma) : gamma;
  }
};

// centering: constrain coefficients so the fitted effect sums to zero over the
// block's own design rows; penalty and rank follow the reparameterization
EffectBlock apply_sum_to_zero(EffectBlock block);

struct JointModel {
  Eigen::VectorXd y;           // longitudinal outcome
  Eigen::VectorXd ped_offset;  // augmented rows
  Eigen::VectorXd ped_delta;
  std::vector<double> ped_time;  // hazard evaluation time per augmented row
  std::vector<EffectBlock> blocks;
  int baseline_block = -1;
  double alpha_init = -0.1;
  Hyperpriors priors;

  bool has_longitudinal() const { return y.size() > 0; }
  bool has_survival() const { return ped_delta.size() > 0; }
  bool has_shared() const;
  std::vector<int> block_indices(PredictorId p) const;
};

JointModel assemble_model(const ParsedModel& parsed,
                          const LongitudinalDataset& long_data,
                          const SurvivalDataset& surv,
                          const AugmentedDataset& ped,
                          const AdjacencyGraph* map = nullptr);

}  // namespace spajm
