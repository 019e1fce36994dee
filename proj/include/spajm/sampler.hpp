#pragma once

// MCMC for the joint model. Per sweep: Gibbs draws for Gaussian-likelihood
// blocks, IWLS-anchored Metropolis-Hastings for survival and shared blocks
// (proposal refreshed at the proposed point, so the ratio is asymmetric),
// a scalar update for the association, and conjugate variance draws.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spajm/model.hpp"
#include "spajm/rng.hpp"

namespace spajm {

struct ChainState {
  std::vector<Eigen::VectorXd> gamma;  // per block, sampling coordinates
  std::vector<double> sigma2;          // per block variance (ignored when flat)
  double alpha = 0.0;
  double sigma2_alpha = 1.0;
  double sigma2_eps = 1.0;
  // predictor caches over the two row sets
  Eigen::VectorXd eta_l;
  Eigen::VectorXd eta_ls_long;
  Eigen::VectorXd eta_ls_ped;
  Eigen::VectorXd eta_s_ped;  // includes the baseline block
};

struct SamplerOptions {
  bool sample_error_variance = true;
  bool sample_block_variances = true;
  bool sample_association = true;
  bool sample_association_variance = true;
  bool verify_caches = false;  // assert incremental caches match recomputation
  double exp_clip = 30.0;      // |log hazard| bound before exponentiation
  double weight_floor = 1e-12;
};

struct SamplerDiagnostics {
  std::int64_t exp_clips = 0;
  std::int64_t floored_weights = 0;
  std::int64_t cholesky_jitters = 0;
  std::map<std::string, std::int64_t> mh_accepted;
  std::map<std::string, std::int64_t> mh_proposed;
};

struct ChainOutput {
  std::vector<std::string> names;  // scalar parameter names, column order
  Eigen::MatrixXd draws;           // retained draws x parameters
  std::map<std::string, double> acceptance;  // MH blocks and alpha
  std::vector<double> logpost;     // one entry per iteration, burn-in included
  SamplerDiagnostics diagnostics;
  std::uint64_t seed = 0;
  double seconds = 0.0;

  Eigen::Index column(const std::string& name) const;  // throws if absent
};

class Sampler {
 public:
  explicit Sampler(const JointModel& model, SamplerOptions opt = {});

  ChainState initial_state() const;
  void refresh_caches(ChainState& s) const;
  double cache_drift(const ChainState& s) const;  // max |cached - recomputed|

  double gaussian_loglik(const ChainState& s) const;
  double poisson_loglik(const ChainState& s) const;
  double log_posterior(const ChainState& s) const;
  // clipped log mean of the augmented Poisson rows: offset + eta_s + alpha*eta_ls
  Eigen::VectorXd log_mean(const ChainState& s) const;

  // IWLS working weights and responses (floored), exposed for verification
  void survival_working(const ChainState& s, Eigen::VectorXd& w, Eigen::VectorXd& ytilde) const;
  void shared_working(const ChainState& s, Eigen::VectorXd& w_long, Eigen::VectorXd& yt_long,
                      Eigen::VectorXd& w_ped, Eigen::VectorXd& yt_ped) const;

  void update_longitudinal_block(int k, ChainState& s, Rng& rng) const;
  bool update_survival_block(int k, ChainState& s, Rng& rng) const;
  bool update_shared_block(int k, ChainState& s, Rng& rng) const;
  bool update_association(ChainState& s, Rng& rng) const;
  void update_variances(ChainState& s, Rng& rng) const;
  void sweep(ChainState& s, Rng& rng) const;

  ChainOutput run(const SamplerConfig& config) const;

  // writes one row of raw-coordinate draws in parameter_names() order
  void store_draw(const ChainState& s, Eigen::MatrixXd& out, Eigen::Index row) const;

  const SamplerDiagnostics& diagnostics() const { return diag_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  const JointModel& model() const { return m_; }

 private:
  const JointModel& m_;
  SamplerOptions opt_;
  mutable SamplerDiagnostics diag_;
  std::vector<int> long_blocks_, surv_blocks_, shared_blocks_;
  std::vector<Eigen::MatrixXd> gram_long_;  // unweighted long-row gram per block
  std::vector<std::string> names_;

  struct Proposal {
    Eigen::VectorXd mean;
    Eigen::LLT<Eigen::MatrixXd> chol;  // of the precision
    double log_det = 0.0;              // log det precision
  };
  Proposal make_proposal(const Eigen::MatrixXd& precision, const Eigen::VectorXd& b) const;
  static double log_gaussian_at(const Proposal& p, const Eigen::VectorXd& x);
  void record(const std::string& label, bool accepted) const;
  Eigen::VectorXd clip_exp(const Eigen::VectorXd& mu) const;  // exp with clip count
  void build_names();
};

// assemble + run, one chain per entry in the returned vector
std::vector<ChainOutput> run_chains(const JointModel& model, const SamplerConfig& config,
                                    SamplerOptions opt = {});

// batch-means Monte Carlo standard error
double mcse_batch_means(const Eigen::VectorXd& draws);

}  // namespace spajm
