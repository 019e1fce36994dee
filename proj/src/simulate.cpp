#include "spajm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace spajm {

namespace {

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / 2.5066282746310005024;
}

}  // namespace

double f_bump(double x) {
  return 0.5 * x + 15.0 * normal_pdf(2.0 * (x - 0.2)) - normal_pdf(x + 0.4);
}

double f_sine(double x) { return std::sin(x); }

double f_geo(double cx, double cy) { return std::sin(cx) * std::cos(0.5 * cy); }

LatticeMap make_lattice_map(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ConfigError("lattice needs at least one cell");
  LatticeMap m;
  int S = rows * cols;
  m.graph.labels.resize(S);
  m.graph.neighbors.resize(S);
  m.cx.resize(S);
  m.cy.resize(S);
  auto coord = [](int i, int k) {
    return k == 1 ? 0.0 : -3.0 + 6.0 * static_cast<double>(i) / (k - 1);
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int s = r * cols + c;
      m.graph.labels[s] = std::to_string(s + 1);
      m.cx[s] = coord(c, cols);
      m.cy[s] = coord(r, rows);
      auto& nb = m.graph.neighbors[s];
      if (r > 0) nb.push_back(s - cols);
      if (c > 0) nb.push_back(s - 1);
      if (c + 1 < cols) nb.push_back(s + 1);
      if (r + 1 < rows) nb.push_back(s + cols);
      std::sort(nb.begin(), nb.end());
    }
  }
  return m;
}

double CovariatePath::at(double t) const {
  if (time.empty()) return 0.0;
  // last knot with time <= t; values are carried backwards before the first
  auto it = std::upper_bound(time.begin(), time.end(), t);
  if (it == time.begin()) return value.front();
  return value[(it - time.begin()) - 1];
}

double HazardSpec::eta_ls(double t) const {
  return ls_const + ls_slope * t + ls_step.at(t);
}

double HazardSpec::log_hazard(double t) const {
  return std::log(scale * shape) + (shape - 1.0) * std::log(t) + log_shift +
         alpha * eta_ls(t);
}

namespace {

double hazard_at(const HazardSpec& h, double t) {
  if (t <= 0.0) return h.shape > 1.0 ? 0.0 : h.scale * h.shape * std::exp(h.log_shift + h.alpha * h.eta_ls(0.0));
  return std::exp(h.log_hazard(t));
}

double simpson_rule(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const HazardSpec& h, double a, double b, double fa,
                        double fm, double fb, double whole, double eps, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = hazard_at(h, lm), frm = hazard_at(h, rm);
  double left = simpson_rule(a, m, fa, flm, fm);
  double right = simpson_rule(m, b, fm, frm, fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps)
    return left + right + delta / 15.0;
  return adaptive_simpson(h, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson(h, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double integrate_segment(const HazardSpec& h, double a, double b, double eps) {
  if (!(b > a)) return 0.0;
  double fa = hazard_at(h, a), fb = hazard_at(h, b);
  double fm = hazard_at(h, 0.5 * (a + b));
  double whole = simpson_rule(a, b, fa, fm, fb);
  return adaptive_simpson(h, a, b, fa, fm, fb, whole, eps, 40);
}

// breakpoints of the integrand inside (0, t): covariate path changes
std::vector<double> segment_ends(const HazardSpec& h, double t) {
  std::vector<double> ends;
  for (double bp : h.ls_step.time)
    if (bp > 0.0 && bp < t) ends.push_back(bp);
  ends.push_back(t);
  return ends;
}

}  // namespace

double cumulative_hazard(const HazardSpec& h, double t, double tol) {
  if (!(t > 0.0)) return 0.0;
  if (h.shape < 1.0) throw NumericError("hazard inversion needs shape >= 1");
  double acc = 0.0, a = 0.0;
  for (double b : segment_ends(h, t)) {
    acc += integrate_segment(h, a, b, tol);
    a = b;
  }
  return acc;
}

double invert_cumulative_hazard(const HazardSpec& h, double target, double t_max,
                                double tol) {
  if (!(target > 0.0)) return 0.0;
  if (h.shape < 1.0) throw NumericError("hazard inversion needs shape >= 1");
  double quad_tol = 1e-8;
  double acc = 0.0, a = 0.0;
  for (double b : segment_ends(h, t_max)) {
    double seg = integrate_segment(h, a, b, quad_tol);
    if (acc + seg < target) {
      acc += seg;
      a = b;
      continue;
    }
    // root in (a, b]: g(x) = acc + int_a^x - target, g(a) <= 0 < g(b)
    double lo = a, hi = b;
    double glo = acc - target;
    double ghi = acc + seg - target;
    for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
      double x;
      // secant guess, safeguarded by bisection
      if (ghi > glo) {
        x = lo - glo * (hi - lo) / (ghi - glo);
        double margin = 0.01 * (hi - lo);
        if (!(x > lo + margin && x < hi - margin)) x = 0.5 * (lo + hi);
      } else {
        x = 0.5 * (lo + hi);
      }
      double gx = acc + integrate_segment(h, a, x, quad_tol) - target;
      if (gx < 0.0) {
        lo = x;
        glo = gx;
      } else {
        hi = x;
        ghi = gx;
      }
    }
    return 0.5 * (lo + hi);
  }
  return std::numeric_limits<double>::infinity();
}

namespace {

struct Subject {
  std::vector<double> t, x_l1, x_l2, x_ls3, y;
  double x_ls1 = 0, x_ls2 = 0, x_s1 = 0, x_s2 = 0;
  int region = 0;
  double b0 = 0, b1 = 0;
  double T = 0;
  int event = 0;
};

}  // namespace

SimulatedStudy simulate_study(const SimulationConfig& cfg) {
  if (cfg.n < 1 || cfg.ni < 1) throw ConfigError("need n >= 1 subjects and ni >= 1 times");
  if (cfg.setting < 1 || cfg.setting > 3)
    throw ConfigError("setting must be 1, 2, or 3");
  SimulatedStudy out;
  out.map = make_lattice_map(cfg.map_rows, cfg.map_cols);
  int S = cfg.map_rows * cfg.map_cols;

  std::vector<Subject> subj(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    Rng rng(derive_seed(cfg.seed, (1ULL << 32) + static_cast<std::uint64_t>(i + 1)));
    Subject& s = subj[i];
    for (;;) {
      s.t.assign(cfg.ni, 0.0);
      for (auto& v : s.t) v = rng.uniform();
      std::sort(s.t.begin(), s.t.end());
      s.x_l1.resize(cfg.ni);
      s.x_l2.resize(cfg.ni);
      s.x_ls3.resize(cfg.ni);
      for (int r = 0; r < cfg.ni; ++r) {
        s.x_l1[r] = rng.uniform(-1.0, 1.0);
        s.x_l2[r] = rng.uniform(-1.0, 1.0);
        s.x_ls3[r] = rng.uniform(-1.0, 1.0);
      }
      s.x_ls1 = rng.uniform(-1.0, 1.0);
      s.x_ls2 = rng.uniform(-1.0, 1.0);
      s.x_s1 = rng.uniform(-1.0, 1.0);
      s.x_s2 = rng.uniform(-1.0, 1.0);
      s.region = static_cast<int>(rng.below(static_cast<std::uint64_t>(S)));
      s.b0 = rng.normal(0.0, std::sqrt(cfg.sigma2_b0));
      s.b1 = rng.normal(0.0, std::sqrt(cfg.sigma2_b1));
      double E = rng.exponential();

      double geo = f_geo(out.map.cx[s.region], out.map.cy[s.region]);
      HazardSpec h;
      h.scale = cfg.weibull_scale;
      h.shape = cfg.weibull_shape;
      h.alpha = cfg.alpha;
      h.log_shift = 0.1 * s.x_s1 + 0.5 * f_sine(s.x_s2) + (cfg.setting == 2 ? geo : 0.0);
      h.ls_const = 0.9 * s.x_ls1 - 0.5 * f_sine(s.x_ls2) + s.b0 +
                   (cfg.setting == 1 ? geo : 0.0);
      h.ls_slope = 0.4 + s.b1;
      h.ls_step.time = s.t;
      h.ls_step.value.resize(cfg.ni);
      for (int r = 0; r < cfg.ni; ++r) h.ls_step.value[r] = -0.5 * s.x_ls3[r];

      double tstar = invert_cumulative_hazard(h, E, cfg.horizon);
      if (tstar <= cfg.horizon) {
        s.T = tstar;
        s.event = 1;
      } else {
        s.T = cfg.horizon;
        s.event = 0;
      }
      // measurement noise drawn for the full schedule to keep streams aligned
      s.y.resize(cfg.ni);
      for (int r = 0; r < cfg.ni; ++r) {
        double geo_l = cfg.setting == 3 ? geo : 0.0;
        double eta_l = 0.5 * s.x_l1[r] + f_bump(s.x_l2[r]) + geo_l;
        double eta_ls = h.eta_ls(s.t[r]);
        s.y[r] = eta_l + eta_ls + rng.normal(0.0, std::sqrt(cfg.sigma2_eps));
      }
      if (s.T >= s.t.front()) break;  // at least one measurement survives
      ++out.redrawn_subjects;
    }
  }

  // additional uniform censoring for a share of the administratively censored
  Rng g(derive_seed(cfg.seed, 1ULL << 32));
  std::vector<int> censored;
  for (int i = 0; i < cfg.n; ++i)
    if (subj[i].event == 0) censored.push_back(i);
  int m = static_cast<int>(std::floor(cfg.extra_censor_frac * censored.size()));
  for (int k = 0; k < m; ++k) {
    std::uint64_t j = k + g.below(censored.size() - k);
    std::swap(censored[k], censored[j]);
  }
  int extra_censored = 0;
  for (int k = 0; k < m; ++k) {
    Subject& s = subj[censored[k]];
    double C;
    for (;;) {
      C = g.uniform();
      if (C >= s.t.front()) break;
      ++out.redrawn_censor_times;
    }
    if (C < s.T) {
      s.T = C;
      ++extra_censored;
    }
  }

  // assemble tables, truncating schedules at the follow-up time
  std::vector<double> lid, lt, ly, lx1, lx2, lxs1, lxs2, lxs3;
  std::vector<std::string> lregion;
  std::vector<double> sid, sT, sdelta, sx1, sx2, sgeo;
  std::vector<std::string> sregion;
  int events = 0;
  for (int i = 0; i < cfg.n; ++i) {
    const Subject& s = subj[i];
    for (int r = 0; r < cfg.ni; ++r) {
      if (s.t[r] > s.T) break;
      lid.push_back(i + 1);
      lt.push_back(s.t[r]);
      ly.push_back(s.y[r]);
      lx1.push_back(s.x_l1[r]);
      lx2.push_back(s.x_l2[r]);
      lxs1.push_back(s.x_ls1);
      lxs2.push_back(s.x_ls2);
      lxs3.push_back(s.x_ls3[r]);
      lregion.push_back(out.map.graph.labels[s.region]);
    }
    sid.push_back(i + 1);
    sT.push_back(s.T);
    sdelta.push_back(s.event);
    sx1.push_back(s.x_s1);
    sx2.push_back(s.x_s2);
    sregion.push_back(out.map.graph.labels[s.region]);
    sgeo.push_back(f_geo(out.map.cx[s.region], out.map.cy[s.region]));
    events += s.event;
  }

  Table lt_tab;
  lt_tab.add_num("id", lid);
  lt_tab.add_num("time", lt);
  lt_tab.add_num("y", ly);
  lt_tab.add_num("x_l1", lx1);
  lt_tab.add_num("x_l2", lx2);
  lt_tab.add_num("x_ls1", lxs1);
  lt_tab.add_num("x_ls2", lxs2);
  lt_tab.add_num("x_ls3", lxs3);
  lt_tab.add_str("region", lregion);
  if (cfg.setting == 1 || cfg.setting == 3) {
    std::vector<double> lg;
    for (std::size_t r = 0; r < lid.size(); ++r) {
      int i = static_cast<int>(lid[r]) - 1;
      lg.push_back(f_geo(out.map.cx[subj[i].region], out.map.cy[subj[i].region]));
    }
    lt_tab.add_num("f_geo", lg);
  }
  Table sv_tab;
  sv_tab.add_num("id", sid);
  sv_tab.add_num("T", sT);
  sv_tab.add_num("delta", sdelta);
  sv_tab.add_num("x_s1", sx1);
  sv_tab.add_num("x_s2", sx2);
  sv_tab.add_str("region", sregion);
  if (cfg.setting == 1 || cfg.setting == 2) sv_tab.add_num("f_geo", sgeo);

  out.long_data = LongitudinalDataset::from_table(lt_tab);
  out.surv_data = SurvivalDataset::from_table(sv_tab);

  // truth record for scoring
  nlohmann::ordered_json truth;
  truth["setting"] = cfg.setting;
  truth["geo_placement"] =
      cfg.setting == 1 ? "eta_ls" : cfg.setting == 2 ? "eta_s" : "eta_l";
  truth["coefficients"] = {
      {"l.linear.x_l1", 0.5},   {"ls.linear.x_ls1", 0.9},
      {"ls.linear.x_ls3", -0.5}, {"ls.linear.t", 0.4},
      {"s.linear.x_s1", 0.1},   {"alpha", cfg.alpha},
      {"sigma2.eps", cfg.sigma2_eps}};
  truth["variances"] = {{"sigma2.ls.rint", cfg.sigma2_b0},
                        {"sigma2.ls.rslope.t", cfg.sigma2_b1}};
  nlohmann::ordered_json re;
  for (int i = 0; i < cfg.n; ++i) re["b0"].push_back(subj[i].b0);
  for (int i = 0; i < cfg.n; ++i) re["b1"].push_back(subj[i].b1);
  truth["random_effects"] = re;
  nlohmann::ordered_json smooths;
  smooths["l.pspline.x_l2"] = {{"fn", "bump"}, {"scale", 1.0}, {"obs_values", lx2}};
  smooths["ls.pspline.x_ls2"] = {{"fn", "sine"}, {"scale", -0.5}, {"obs_values", lxs2}};
  smooths["s.pspline.x_s2"] = {{"fn", "sine"}, {"scale", 0.5},
                               {"obs_values", std::vector<double>(sx2)}};
  truth["smooths"] = smooths;
  nlohmann::ordered_json geo;
  geo["labels"] = out.map.graph.labels;
  std::vector<double> geo_vals(S);
  for (int s = 0; s < S; ++s) geo_vals[s] = f_geo(out.map.cx[s], out.map.cy[s]);
  geo["values"] = geo_vals;
  std::vector<std::string> subj_region(cfg.n);
  for (int i = 0; i < cfg.n; ++i) subj_region[i] = out.map.graph.labels[subj[i].region];
  geo["region_of_subject"] = subj_region;
  std::string geo_prefix =
      cfg.setting == 1 ? "ls" : cfg.setting == 2 ? "s" : "l";
  truth["mrf_target"] = geo_prefix + ".mrf.region";
  truth["geo"] = geo;
  truth["censoring"] = {{"events", events},
                        {"censored", cfg.n - events},
                        {"extra_censored", extra_censored}};
  truth["redraws"] = {{"subjects", out.redrawn_subjects},
                      {"censor_times", out.redrawn_censor_times}};
  out.truth_json = truth.dump(2);
  return out;
}

}  // namespace spajm
