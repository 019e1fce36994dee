#pragma once

// Piecewise-exponential data augmentation: survival records are expanded to
// one pseudo-Poisson row per subject and entered interval, with log-exposure
// offsets and covariates frozen at each interval start.

#include <Eigen/Dense>

#include <vector>

#include "spajm/data.hpp"

namespace spajm {

enum class CutStrategy { EventTimes, Quantiles };

// interval borders kappa_0 = 0 < kappa_1 < ... <= kappa_J covering max follow-up.
// `extra` points (e.g. observation times) are merged in when given.
std::vector<double> make_cuts(const SurvivalDataset& surv, CutStrategy strategy,
                              int n_intervals = 0,
                              const std::vector<double>& extra = {});

// what to do when an interval starts before a subject's first measurement
enum class LocfPolicy { BackFill, DropSubject };

struct AugmentedDataset {
  std::vector<int> id;
  std::vector<int> interval;        // 1-based interval index
  std::vector<double> kappa_lo;
  std::vector<double> kappa_hi;
  Eigen::VectorXd offset;           // log exposure time inside the interval
  std::vector<int> delta;           // 1 only on the event row of an event subject
  Table covariates;                 // frozen covariate values, one row per ped row
  std::vector<double> cuts;
  std::vector<int> dropped_subjects;  // only under LocfPolicy::DropSubject

  std::size_t nrows() const { return id.size(); }
  Table to_table() const;
  void write_csv(const std::string& path) const;
  static AugmentedDataset from_table(const Table& t);
  static AugmentedDataset read_csv(const std::string& path);
};

AugmentedDataset augment(const LongitudinalDataset& long_data,
                         const SurvivalDataset& surv,
                         const std::vector<double>& cuts,
                         LocfPolicy policy = LocfPolicy::BackFill);

// Poisson log-likelihood of the augmented rows for one log-hazard value per
// interval (no covariates): sum over rows of delta * eta - exp(eta), with
// eta = log_lambda[j] + offset
double ped_poisson_loglik(const AugmentedDataset& ped, const Eigen::VectorXd& log_lambda);
Eigen::VectorXd ped_poisson_score(const AugmentedDataset& ped, const Eigen::VectorXd& log_lambda);

// closed-form piecewise-exponential survival log-likelihood
// sum_i delta_i log lambda_{J(i)} - sum_j lambda_j * exposure_ij
double pe_loglik_oracle(const SurvivalDataset& surv, const std::vector<double>& cuts,
                        const Eigen::VectorXd& log_lambda);
Eigen::VectorXd pe_score_oracle(const SurvivalDataset& surv, const std::vector<double>& cuts,
                                const Eigen::VectorXd& log_lambda);

// the additive constant separating the two: sum_i delta_i * offset_{i,J(i)}
double ped_event_offset_sum(const AugmentedDataset& ped);

}  // namespace spajm
