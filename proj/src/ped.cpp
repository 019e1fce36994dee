#include "spajm/ped.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace spajm {

std::vector<double> make_cuts(const SurvivalDataset& surv, CutStrategy strategy,
                              int n_intervals, const std::vector<double>& extra) {
  if (surv.id.empty()) throw ConfigError("cannot build cut points without data");
  double t_max = *std::max_element(surv.time.begin(), surv.time.end());
  std::set<double> pts;
  if (strategy == CutStrategy::EventTimes) {
    for (std::size_t i = 0; i < surv.id.size(); ++i)
      if (surv.event[i] == 1) pts.insert(surv.time[i]);
  } else {
    if (n_intervals < 1) throw ConfigError("quantile cuts need n_intervals >= 1");
    std::vector<double> ev;
    for (std::size_t i = 0; i < surv.id.size(); ++i)
      if (surv.event[i] == 1) ev.push_back(surv.time[i]);
    if (ev.empty()) ev = surv.time;  // all censored: fall back to follow-up times
    std::sort(ev.begin(), ev.end());
    for (int q = 1; q <= n_intervals; ++q) {
      // type-7 quantile at q / n_intervals
      double h = (ev.size() - 1) * static_cast<double>(q) / n_intervals;
      std::size_t lo = static_cast<std::size_t>(std::floor(h));
      std::size_t hi = std::min(lo + 1, ev.size() - 1);
      pts.insert(ev[lo] + (h - lo) * (ev[hi] - ev[lo]));
    }
  }
  for (double e : extra)
    if (e > 0.0 && e <= t_max) pts.insert(e);
  pts.insert(t_max);  // last interval must reach the longest follow-up
  pts.erase(0.0);
  std::vector<double> cuts{0.0};
  cuts.insert(cuts.end(), pts.begin(), pts.end());
  return cuts;
}

namespace {

struct SubjectSeries {
  std::vector<double> time;                 // sorted observation times
  std::vector<std::size_t> row;             // matching long-data row index
};

}  // namespace

AugmentedDataset augment(const LongitudinalDataset& long_data,
                         const SurvivalDataset& surv,
                         const std::vector<double>& cuts,
                         LocfPolicy policy) {
  if (cuts.size() < 2 || cuts.front() != 0.0)
    throw ConfigError("cut points must start at 0 and contain at least one interval");
  for (std::size_t j = 1; j < cuts.size(); ++j)
    if (!(cuts[j] > cuts[j - 1]))
      throw ConfigError("cut points must be strictly increasing");
  double t_max = *std::max_element(surv.time.begin(), surv.time.end());
  if (cuts.back() < t_max)
    throw ConfigError("last cut point must reach the longest follow-up time");

  // per-subject observation series, time sorted
  std::map<int, SubjectSeries> series;
  for (std::size_t r = 0; r < long_data.id.size(); ++r) {
    auto& s = series[long_data.id[r]];
    s.time.push_back(long_data.time[r]);
    s.row.push_back(r);
  }
  for (auto& [sid, s] : series) {
    std::vector<std::size_t> order(s.time.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.time[a] < s.time[b]; });
    SubjectSeries sorted;
    for (auto k : order) {
      sorted.time.push_back(s.time[k]);
      sorted.row.push_back(s.row[k]);
    }
    s = std::move(sorted);
  }

  const auto& long_cov = long_data.covariates;
  bool need_series = long_cov.ncols() > 0;

  AugmentedDataset ped;
  ped.cuts = cuts;
  std::vector<std::size_t> src_long_row;  // long-data row supplying covariates
  std::vector<std::size_t> src_surv_row;

  for (std::size_t i = 0; i < surv.id.size(); ++i) {
    int sid = surv.id[i];
    double T = surv.time[i];
    auto it = series.find(sid);
    if (need_series && it == series.end()) {
      if (policy == LocfPolicy::DropSubject) {
        ped.dropped_subjects.push_back(sid);
        continue;
      }
      throw ConfigError("subject " + std::to_string(sid) +
                        " has survival data but no measurements to carry forward");
    }
    bool dropped = false;
    std::vector<std::size_t> rows_buf;
    for (std::size_t j = 1; j < cuts.size(); ++j) {
      double lo = cuts[j - 1], hi = cuts[j];
      if (!(lo < T)) break;  // subject never enters this interval
      if (need_series) {
        // last observation at or before the interval start
        const auto& st = it->second.time;
        auto up = std::upper_bound(st.begin(), st.end(), lo);
        if (up == st.begin()) {
          if (policy == LocfPolicy::DropSubject) {
            dropped = true;
            break;
          }
          src_long_row.push_back(it->second.row.front());  // backfill
        } else {
          src_long_row.push_back(it->second.row[(up - st.begin()) - 1]);
        }
      }
      rows_buf.push_back(j);
      src_surv_row.push_back(i);
      ped.id.push_back(sid);
      ped.interval.push_back(static_cast<int>(j));
      ped.kappa_lo.push_back(lo);
      ped.kappa_hi.push_back(hi);
      ped.delta.push_back(0);
    }
    if (dropped) {
      // roll back anything emitted for this subject
      std::size_t emitted = rows_buf.size();
      for (std::size_t k = 0; k < emitted; ++k) {
        ped.id.pop_back();
        ped.interval.pop_back();
        ped.kappa_lo.pop_back();
        ped.kappa_hi.pop_back();
        ped.delta.pop_back();
        src_surv_row.pop_back();
        if (need_series && !src_long_row.empty()) src_long_row.pop_back();
      }
      ped.dropped_subjects.push_back(sid);
      continue;
    }
    if (!rows_buf.empty() && surv.event[i] == 1) ped.delta.back() = 1;
  }

  ped.offset.resize(ped.id.size());
  for (std::size_t r = 0; r < ped.id.size(); ++r) {
    double T = surv.time[src_surv_row[r]];
    double exposure = std::min(T, ped.kappa_hi[r]) - ped.kappa_lo[r];
    if (!(exposure > 0.0)) throw NumericError("non-positive exposure in augmentation");
    ped.offset[r] = std::log(exposure);
  }

  // frozen longitudinal covariates, then survival covariates not shadowed
  if (need_series) ped.covariates = long_cov.select_rows(src_long_row);
  for (const auto& name : surv.covariates.names()) {
    if (ped.covariates.has(name)) continue;
    if (surv.covariates.is_numeric(name)) {
      const auto& src = surv.covariates.num(name);
      std::vector<double> v;
      v.reserve(src_surv_row.size());
      for (auto r : src_surv_row) v.push_back(src[r]);
      ped.covariates.add_num(name, std::move(v));
    } else {
      const auto& src = surv.covariates.str(name);
      std::vector<std::string> v;
      v.reserve(src_surv_row.size());
      for (auto r : src_surv_row) v.push_back(src[r]);
      ped.covariates.add_str(name, std::move(v));
    }
  }
  return ped;
}

Table AugmentedDataset::to_table() const {
  Table t;
  std::vector<double> idd(id.begin(), id.end());
  std::vector<double> jj(interval.begin(), interval.end());
  std::vector<double> dd(delta.begin(), delta.end());
  t.add_num("id", idd);
  t.add_num("j", jj);
  t.add_num("kappa_lo", kappa_lo);
  t.add_num("kappa_hi", kappa_hi);
  t.add_num("offset", std::vector<double>(offset.data(), offset.data() + offset.size()));
  t.add_num("delta", dd);
  for (const auto& name : covariates.names()) {
    if (covariates.is_numeric(name))
      t.add_num(name, covariates.num(name));
    else
      t.add_str(name, covariates.str(name));
  }
  return t;
}

void AugmentedDataset::write_csv(const std::string& path) const {
  to_table().write_csv(path);
}

AugmentedDataset AugmentedDataset::from_table(const Table& t) {
  AugmentedDataset ped;
  for (const char* col : {"id", "j", "kappa_lo", "kappa_hi", "offset", "delta"})
    if (!t.has(col) || !t.is_numeric(col))
      throw IoError(std::string("augmented data needs numeric column '") + col + "'");
  for (double v : t.num("id")) ped.id.push_back(static_cast<int>(v));
  for (double v : t.num("j")) ped.interval.push_back(static_cast<int>(v));
  ped.kappa_lo = t.num("kappa_lo");
  ped.kappa_hi = t.num("kappa_hi");
  const auto& off = t.num("offset");
  ped.offset = Eigen::Map<const Eigen::VectorXd>(off.data(), off.size());
  for (double v : t.num("delta")) ped.delta.push_back(static_cast<int>(v));
  std::vector<std::string> skip{"id", "j", "kappa_lo", "kappa_hi", "offset", "delta"};
  for (const auto& name : t.names()) {
    if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
    if (t.is_numeric(name))
      ped.covariates.add_num(name, t.num(name));
    else
      ped.covariates.add_str(name, t.str(name));
  }
  // recover the cut grid from the interval borders
  std::set<double> cs{0.0};
  for (double v : ped.kappa_lo) cs.insert(v);
  for (double v : ped.kappa_hi) cs.insert(v);
  ped.cuts.assign(cs.begin(), cs.end());
  return ped;
}

AugmentedDataset AugmentedDataset::read_csv(const std::string& path) {
  return from_table(Table::read_csv(path));
}

double ped_poisson_loglik(const AugmentedDataset& ped, const Eigen::VectorXd& log_lambda) {
  double ll = 0.0;
  for (std::size_t r = 0; r < ped.nrows(); ++r) {
    double eta = log_lambda[ped.interval[r] - 1] + ped.offset[r];
    ll += ped.delta[r] * eta - std::exp(eta);
  }
  return ll;
}

Eigen::VectorXd ped_poisson_score(const AugmentedDataset& ped,
                                  const Eigen::VectorXd& log_lambda) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(log_lambda.size());
  for (std::size_t r = 0; r < ped.nrows(); ++r) {
    double eta = log_lambda[ped.interval[r] - 1] + ped.offset[r];
    g[ped.interval[r] - 1] += ped.delta[r] - std::exp(eta);
  }
  return g;
}

namespace {

// exposure of follow-up T inside interval j (1-based) of the cut grid
double exposure_in(double T, const std::vector<double>& cuts, std::size_t j) {
  double lo = cuts[j - 1], hi = cuts[j];
  if (!(lo < T)) return 0.0;
  return std::min(T, hi) - lo;
}

std::size_t last_interval(double T, const std::vector<double>& cuts) {
  std::size_t j = 1;
  for (std::size_t k = 1; k < cuts.size(); ++k)
    if (cuts[k - 1] < T) j = k;
  return j;
}

}  // namespace

double pe_loglik_oracle(const SurvivalDataset& surv, const std::vector<double>& cuts,
                        const Eigen::VectorXd& log_lambda) {
  if (log_lambda.size() != static_cast<Eigen::Index>(cuts.size()) - 1)
    throw NumericError("log_lambda must have one entry per interval");
  double ll = 0.0;
  for (std::size_t i = 0; i < surv.id.size(); ++i) {
    double T = surv.time[i];
    if (surv.event[i] == 1) ll += log_lambda[last_interval(T, cuts) - 1];
    for (std::size_t j = 1; j < cuts.size(); ++j) {
      double e = exposure_in(T, cuts, j);
      if (e > 0.0) ll -= std::exp(log_lambda[j - 1]) * e;
    }
  }
  return ll;
}

Eigen::VectorXd pe_score_oracle(const SurvivalDataset& surv, const std::vector<double>& cuts,
                                const Eigen::VectorXd& log_lambda) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(log_lambda.size());
  for (std::size_t i = 0; i < surv.id.size(); ++i) {
    double T = surv.time[i];
    if (surv.event[i] == 1) g[last_interval(T, cuts) - 1] += 1.0;
    for (std::size_t j = 1; j < cuts.size(); ++j) {
      double e = exposure_in(T, cuts, j);
      if (e > 0.0) g[j - 1] -= std::exp(log_lambda[j - 1]) * e;
    }
  }
  return g;
}

double ped_event_offset_sum(const AugmentedDataset& ped) {
  double s = 0.0;
  for (std::size_t r = 0; r < ped.nrows(); ++r)
    if (ped.delta[r] == 1) s += ped.offset[r];
  return s;
}

}  // namespace spajm
