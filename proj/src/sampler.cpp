#include "spajm/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

namespace spajm {

namespace {

constexpr double k_two_pi = 6.283185307179586477;

bool is_subject_block(const EffectBlock& b) {
  return b.kind == TermKind::RandomIntercept || b.kind == TermKind::RandomSlope;
}

// proposal / full-conditional N(mean, P^{-1}) with P dense or diagonal
struct Prop {
  Eigen::VectorXd mean;
  bool diag = false;
  Eigen::VectorXd pdiag;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double logdet = 0.0;

  Eigen::VectorXd sample(Rng& rng) const {
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    if (diag) return mean + (z.array() / pdiag.array().sqrt()).matrix();
    return mean + llt.matrixU().solve(z);
  }

  // log density up to the dimension constant
  double logpdf(const Eigen::VectorXd& x) const {
    Eigen::VectorXd d = x - mean;
    double quad = diag ? (pdiag.array() * d.array().square()).sum()
                       : (llt.matrixL().transpose() * d).squaredNorm();
    return 0.5 * logdet - 0.5 * quad;
  }
};

}  // namespace

Eigen::Index ChainOutput::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Eigen::Index>(i);
  throw NumericError("no parameter named '" + name + "' in the draws");
}

Sampler::Sampler(const JointModel& model, SamplerOptions opt) : m_(model), opt_(opt) {
  for (std::size_t k = 0; k < m_.blocks.size(); ++k) {
    switch (m_.blocks[k].predictor) {
      case PredictorId::Longitudinal: long_blocks_.push_back(static_cast<int>(k)); break;
      case PredictorId::Survival: surv_blocks_.push_back(static_cast<int>(k)); break;
      case PredictorId::Shared: shared_blocks_.push_back(static_cast<int>(k)); break;
    }
  }
  gram_long_.resize(m_.blocks.size());
  for (std::size_t k = 0; k < m_.blocks.size(); ++k) {
    const auto& B = m_.blocks[k];
    if (B.Z_long.nrows() == 0) continue;
    if (is_subject_block(B)) {
      // diagonal gram, stored as a single column
      Eigen::VectorXd d = Eigen::VectorXd::Zero(B.Z_long.raw_cols);
      for (std::size_t r = 0; r < B.Z_long.col.size(); ++r)
        d[B.Z_long.col[r]] += B.Z_long.value[r] * B.Z_long.value[r];
      gram_long_[k] = d;
    } else {
      gram_long_[k] = B.Z_long.gram(Eigen::VectorXd::Ones(B.Z_long.nrows()));
    }
  }
  build_names();
}

void Sampler::build_names() {
  bool alpha_active = m_.has_survival() && m_.has_shared();
  for (const auto& B : m_.blocks) {
    int raw = B.raw_ncoef();
    if (raw == 1 && B.kind == TermKind::Linear) {
      names_.push_back(B.label);
    } else {
      for (int i = 1; i <= raw; ++i)
        names_.push_back(B.label + "." + std::to_string(i));
    }
  }
  if (alpha_active) names_.push_back("alpha");
  for (const auto& B : m_.blocks)
    if (!B.flat_prior) names_.push_back("sigma2." + B.label);
  if (alpha_active) names_.push_back("sigma2.alpha");
  if (m_.has_longitudinal()) names_.push_back("sigma2.eps");
}

ChainState Sampler::initial_state() const {
  ChainState s;
  s.gamma.resize(m_.blocks.size());
  s.sigma2.assign(m_.blocks.size(), 1.0);
  for (std::size_t k = 0; k < m_.blocks.size(); ++k)
    s.gamma[k] = Eigen::VectorXd::Zero(m_.blocks[k].ncoef());
  s.alpha = m_.alpha_init;
  refresh_caches(s);
  return s;
}

void Sampler::refresh_caches(ChainState& s) const {
  Eigen::Index N = m_.y.size();
  Eigen::Index A = m_.ped_delta.size();
  s.eta_l = Eigen::VectorXd::Zero(N);
  s.eta_ls_long = Eigen::VectorXd::Zero(N);
  s.eta_ls_ped = Eigen::VectorXd::Zero(A);
  s.eta_s_ped = Eigen::VectorXd::Zero(A);
  for (std::size_t k = 0; k < m_.blocks.size(); ++k) {
    const auto& B = m_.blocks[k];
    switch (B.predictor) {
      case PredictorId::Longitudinal:
        if (B.Z_long.nrows() > 0) s.eta_l += B.Z_long.mul(s.gamma[k]);
        break;
      case PredictorId::Shared:
        if (B.Z_long.nrows() > 0) s.eta_ls_long += B.Z_long.mul(s.gamma[k]);
        if (B.Z_ped.nrows() > 0) s.eta_ls_ped += B.Z_ped.mul(s.gamma[k]);
        break;
      case PredictorId::Survival:
        if (B.Z_ped.nrows() > 0) s.eta_s_ped += B.Z_ped.mul(s.gamma[k]);
        break;
    }
  }
}

double Sampler::cache_drift(const ChainState& s) const {
  ChainState fresh = s;
  refresh_caches(fresh);
  double d = 0.0;
  auto upd = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size()) d = std::max(d, (a - b).cwiseAbs().maxCoeff());
  };
  upd(s.eta_l, fresh.eta_l);
  upd(s.eta_ls_long, fresh.eta_ls_long);
  upd(s.eta_ls_ped, fresh.eta_ls_ped);
  upd(s.eta_s_ped, fresh.eta_s_ped);
  return d;
}

Eigen::VectorXd Sampler::clip_exp(const Eigen::VectorXd& mu) const {
  double c = opt_.exp_clip;
  diag_.exp_clips += (mu.array().abs() > c).count();
  return mu.array().min(c).max(-c).exp();
}

Eigen::VectorXd Sampler::log_mean(const ChainState& s) const {
  Eigen::VectorXd mu = m_.ped_offset + s.eta_s_ped;
  if (s.eta_ls_ped.size()) mu += s.alpha * s.eta_ls_ped;
  double c = opt_.exp_clip;
  diag_.exp_clips += (mu.array().abs() > c).count();
  return mu.array().min(c).max(-c);
}

double Sampler::gaussian_loglik(const ChainState& s) const {
  if (!m_.has_longitudinal()) return 0.0;
  Eigen::VectorXd r = m_.y - s.eta_l - s.eta_ls_long;
  double N = static_cast<double>(m_.y.size());
  return -0.5 * N * std::log(k_two_pi * s.sigma2_eps) -
         0.5 * r.squaredNorm() / s.sigma2_eps;
}

double Sampler::poisson_loglik(const ChainState& s) const {
  if (!m_.has_survival()) return 0.0;
  Eigen::VectorXd mu = log_mean(s);
  return m_.ped_delta.dot(mu) - mu.array().exp().sum();
}

double Sampler::log_posterior(const ChainState& s) const {
  double lp = gaussian_loglik(s) + poisson_loglik(s);
  for (std::size_t k = 0; k < m_.blocks.size(); ++k) {
    const auto& B = m_.blocks[k];
    if (B.flat_prior) continue;
    double quad = is_subject_block(B) ? s.gamma[k].squaredNorm()
                                      : s.gamma[k].dot(B.K * s.gamma[k]);
    lp += -0.5 * B.rank_K * std::log(s.sigma2[k]) - 0.5 * quad / s.sigma2[k];
    lp += -(B.prior_a + 1.0) * std::log(s.sigma2[k]) - B.prior_b / s.sigma2[k];
  }
  if (m_.has_survival() && m_.has_shared()) {
    lp += -0.5 * std::log(s.sigma2_alpha) - 0.5 * s.alpha * s.alpha / s.sigma2_alpha;
    lp += -(m_.priors.a_alpha + 1.0) * std::log(s.sigma2_alpha) -
          m_.priors.b_alpha / s.sigma2_alpha;
  }
  if (m_.has_longitudinal())
    lp += -(m_.priors.a0 + 1.0) * std::log(s.sigma2_eps) - m_.priors.b0 / s.sigma2_eps;
  return lp;
}

void Sampler::survival_working(const ChainState& s, Eigen::VectorXd& w,
                               Eigen::VectorXd& ytilde) const {
  Eigen::VectorXd mu = log_mean(s);
  Eigen::VectorXd e = mu.array().exp();
  w = e;
  for (Eigen::Index r = 0; r < w.size(); ++r)
    if (w[r] < opt_.weight_floor) {
      w[r] = opt_.weight_floor;
      ++diag_.floored_weights;
    }
  Eigen::VectorXd v = m_.ped_delta - e;
  ytilde = s.eta_s_ped + (v.array() / w.array()).matrix();
}

void Sampler::shared_working(const ChainState& s, Eigen::VectorXd& w_long,
                             Eigen::VectorXd& yt_long, Eigen::VectorXd& w_ped,
                             Eigen::VectorXd& yt_ped) const {
  Eigen::Index N = m_.y.size();
  w_long = Eigen::VectorXd::Constant(N, 1.0 / s.sigma2_eps);
  yt_long = m_.y - s.eta_l;  // target for the shared predictor on these rows
  Eigen::VectorXd mu = log_mean(s);
  Eigen::VectorXd e = mu.array().exp();
  Eigen::VectorXd v = s.alpha * (m_.ped_delta - e);
  w_ped = s.alpha * s.alpha * e;
  for (Eigen::Index r = 0; r < w_ped.size(); ++r)
    if (w_ped[r] < opt_.weight_floor) {
      w_ped[r] = opt_.weight_floor;
      ++diag_.floored_weights;
    }
  yt_ped = s.eta_ls_ped + (v.array() / w_ped.array()).matrix();
}

Sampler::Proposal Sampler::make_proposal(const Eigen::MatrixXd& precision,
                                         const Eigen::VectorXd& b) const {
  Proposal p;
  p.chol.compute(precision);
  if (p.chol.info() != Eigen::Success) {
    double scale = std::max(1.0, precision.diagonal().cwiseAbs().maxCoeff());
    Eigen::MatrixXd P2 =
        precision + 1e-10 * scale * Eigen::MatrixXd::Identity(precision.rows(),
                                                              precision.cols());
    ++diag_.cholesky_jitters;
    p.chol.compute(P2);
    if (p.chol.info() != Eigen::Success)
      throw NumericError("precision matrix is not positive definite");
  }
  p.log_det = 2.0 * p.chol.matrixL().toDenseMatrix().diagonal().array().log().sum();
  p.mean = p.chol.solve(b);
  return p;
}

double Sampler::log_gaussian_at(const Proposal& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd d = x - p.mean;
  double quad = (p.chol.matrixL().transpose() * d).squaredNorm();
  return 0.5 * p.log_det - 0.5 * quad;
}

void Sampler::record(const std::string& label, bool accepted) const {
  ++diag_.mh_proposed[label];
  if (accepted) ++diag_.mh_accepted[label];
}

void Sampler::update_longitudinal_block(int k, ChainState& s, Rng& rng) const {
  const EffectBlock& B = m_.blocks[k];
  Eigen::VectorXd eta_k = B.Z_long.mul(s.gamma[k]);
  Eigen::VectorXd partial = (m_.y - s.eta_l - s.eta_ls_long) + eta_k;
  Eigen::VectorXd b = B.Z_long.tmul(partial) / s.sigma2_eps;
  Eigen::MatrixXd P = gram_long_[k] / s.sigma2_eps;
  if (!B.flat_prior) P += B.K / s.sigma2[k];
  Proposal full = make_proposal(P, b);
  Eigen::VectorXd z(b.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  Eigen::VectorXd draw = full.mean + full.chol.matrixU().solve(z);
  s.eta_l += B.Z_long.mul(draw - s.gamma[k]);
  s.gamma[k] = draw;
}

bool Sampler::update_survival_block(int k, ChainState& s, Rng& rng) const {
  const EffectBlock& B = m_.blocks[k];
  const Design& Z = B.Z_ped;
  const Eigen::VectorXd& gamma = s.gamma[k];
  double c = opt_.exp_clip;

  Eigen::VectorXd mu = log_mean(s);
  Eigen::VectorXd e = mu.array().exp();
  double ll_cur = m_.ped_delta.dot(mu) - e.sum();
  Eigen::VectorXd w = e.cwiseMax(opt_.weight_floor);
  Eigen::VectorXd eta_k = Z.mul(gamma);
  Eigen::VectorXd b = Z.tmul((w.array() * eta_k.array()).matrix() + (m_.ped_delta - e));
  Eigen::MatrixXd P = Z.gram(w);
  if (!B.flat_prior) P += B.K / s.sigma2[k];
  Proposal fwd = make_proposal(P, b);
  Eigen::VectorXd z(b.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  Eigen::VectorXd prop = fwd.mean + fwd.chol.matrixU().solve(z);
  double lq_fwd = log_gaussian_at(fwd, prop);

  Eigen::VectorXd d_eta = Z.mul(prop - gamma);
  Eigen::VectorXd mu_raw = m_.ped_offset + s.eta_s_ped + d_eta;
  if (s.eta_ls_ped.size()) mu_raw += s.alpha * s.eta_ls_ped;
  diag_.exp_clips += (mu_raw.array().abs() > c).count();
  Eigen::VectorXd mu_s = mu_raw.array().min(c).max(-c);
  Eigen::VectorXd e_s = mu_s.array().exp();
  double ll_prop = m_.ped_delta.dot(mu_s) - e_s.sum();
  Eigen::VectorXd w_s = e_s.cwiseMax(opt_.weight_floor);
  Eigen::VectorXd eta_k_s = eta_k + d_eta;
  Eigen::VectorXd b_s =
      Z.tmul((w_s.array() * eta_k_s.array()).matrix() + (m_.ped_delta - e_s));
  Eigen::MatrixXd P_s = Z.gram(w_s);
  if (!B.flat_prior) P_s += B.K / s.sigma2[k];
  Proposal rev = make_proposal(P_s, b_s);
  double lq_rev = log_gaussian_at(rev, gamma);

  double lprior = 0.0;
  if (!B.flat_prior)
    lprior = -0.5 * (prop.dot(B.K * prop) - gamma.dot(B.K * gamma)) / s.sigma2[k];
  double log_acc = (ll_prop - ll_cur) + lprior + lq_rev - lq_fwd;
  bool accept = std::log(rng.uniform_pos()) < log_acc;
  if (accept) {
    s.eta_s_ped += d_eta;
    s.gamma[k] = prop;
  }
  record(B.label, accept);
  return accept;
}

bool Sampler::update_shared_block(int k, ChainState& s, Rng& rng) const {
  const EffectBlock& B = m_.blocks[k];
  const Eigen::VectorXd& gamma = s.gamma[k];
  bool has_long = B.Z_long.nrows() > 0 && m_.has_longitudinal();
  bool has_ped = B.Z_ped.nrows() > 0 && m_.has_survival();
  bool diag_path = is_subject_block(B);
  double c = opt_.exp_clip;
  int ncoef = B.ncoef();

  double ll_cur = 0.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ncoef);
  Eigen::VectorXd r, eta_k_long;
  if (has_long) {
    r = m_.y - s.eta_l - s.eta_ls_long;
    eta_k_long = B.Z_long.mul(gamma);
    b += B.Z_long.tmul(r + eta_k_long) / s.sigma2_eps;
    ll_cur += -0.5 * r.squaredNorm() / s.sigma2_eps;
  }
  Eigen::VectorXd mu, e, eta_k_ped;
  if (has_ped) {
    mu = log_mean(s);
    e = mu.array().exp();
    ll_cur += m_.ped_delta.dot(mu) - e.sum();
    eta_k_ped = B.Z_ped.mul(gamma);
    Eigen::VectorXd w_ped =
        (s.alpha * s.alpha * e.array()).cwiseMax(opt_.weight_floor);
    Eigen::VectorXd v_ped = s.alpha * (m_.ped_delta - e);
    b += B.Z_ped.tmul((w_ped.array() * eta_k_ped.array()).matrix() + v_ped);
  }

  auto build_prop = [&](const Eigen::VectorXd* e_at, const Eigen::VectorXd& rhs) {
    Prop out;
    if (diag_path) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(ncoef);
      if (has_long) p += gram_long_[k].col(0) / s.sigma2_eps;
      if (has_ped) {
        const Eigen::VectorXd& ee = *e_at;
        for (std::size_t rr = 0; rr < B.Z_ped.col.size(); ++rr)
          p[B.Z_ped.col[rr]] +=
              std::max(s.alpha * s.alpha * ee[rr], opt_.weight_floor) *
              B.Z_ped.value[rr] * B.Z_ped.value[rr];
      }
      p.array() += 1.0 / s.sigma2[k];  // K = I for subject blocks
      out.diag = true;
      out.pdiag = p;
      out.logdet = p.array().log().sum();
      out.mean = (rhs.array() / p.array()).matrix();
      return out;
    }
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(ncoef, ncoef);
    if (has_long) P += gram_long_[k] / s.sigma2_eps;
    if (has_ped) {
      Eigen::VectorXd w_ped =
          (s.alpha * s.alpha * e_at->array()).cwiseMax(opt_.weight_floor);
      P += B.Z_ped.gram(w_ped);
    }
    if (!B.flat_prior) P += B.K / s.sigma2[k];
    Proposal p = make_proposal(P, rhs);
    out.mean = p.mean;
    out.llt = p.chol;
    out.logdet = p.log_det;
    return out;
  };

  Prop fwd = build_prop(has_ped ? &e : nullptr, b);
  Eigen::VectorXd prop = fwd.sample(rng);
  double lq_fwd = fwd.logpdf(prop);

  double ll_prop = 0.0;
  Eigen::VectorXd b_s = Eigen::VectorXd::Zero(ncoef);
  Eigen::VectorXd d_long, d_ped, e_s;
  if (has_long) {
    d_long = B.Z_long.mul(prop - gamma);
    Eigen::VectorXd r_s = r - d_long;
    ll_prop += -0.5 * r_s.squaredNorm() / s.sigma2_eps;
    b_s += B.Z_long.tmul(r_s + eta_k_long + d_long) / s.sigma2_eps;
  }
  if (has_ped) {
    d_ped = B.Z_ped.mul(prop - gamma);
    Eigen::VectorXd mu_raw = mu + s.alpha * d_ped;
    diag_.exp_clips += (mu_raw.array().abs() > c).count();
    Eigen::VectorXd mu_s = mu_raw.array().min(c).max(-c);
    e_s = mu_s.array().exp();
    ll_prop += m_.ped_delta.dot(mu_s) - e_s.sum();
    Eigen::VectorXd w_ped =
        (s.alpha * s.alpha * e_s.array()).cwiseMax(opt_.weight_floor);
    Eigen::VectorXd v_ped = s.alpha * (m_.ped_delta - e_s);
    b_s += B.Z_ped.tmul((w_ped.array() * (eta_k_ped + d_ped).array()).matrix() + v_ped);
  }
  Prop rev = build_prop(has_ped ? &e_s : nullptr, b_s);
  double lq_rev = rev.logpdf(gamma);

  double lprior = 0.0;
  if (!B.flat_prior) {
    double qp = diag_path ? prop.squaredNorm() : prop.dot(B.K * prop);
    double qc = diag_path ? gamma.squaredNorm() : gamma.dot(B.K * gamma);
    lprior = -0.5 * (qp - qc) / s.sigma2[k];
  }
  double log_acc = (ll_prop - ll_cur) + lprior + lq_rev - lq_fwd;
  bool accept = std::log(rng.uniform_pos()) < log_acc;
  if (accept) {
    if (has_long) s.eta_ls_long += d_long;
    if (has_ped) s.eta_ls_ped += d_ped;
    s.gamma[k] = prop;
  }
  record(B.label, accept);
  return accept;
}

bool Sampler::update_association(ChainState& s, Rng& rng) const {
  const Eigen::VectorXd& z = s.eta_ls_ped;
  Eigen::VectorXd mu = log_mean(s);
  Eigen::VectorXd e = mu.array().exp();
  double ll_cur = m_.ped_delta.dot(mu) - e.sum();
  Eigen::VectorXd w = e.cwiseMax(opt_.weight_floor);
  double b = (w.array() * (s.alpha * z.array()) * z.array() +
              (m_.ped_delta - e).array() * z.array())
                 .sum();
  double P = (w.array() * z.array().square()).sum() + 1.0 / s.sigma2_alpha;
  double mean = b / P;
  double prop = mean + rng.normal() / std::sqrt(P);
  double lq_fwd = 0.5 * std::log(P) - 0.5 * P * (prop - mean) * (prop - mean);

  double c = opt_.exp_clip;
  Eigen::VectorXd mu_raw = m_.ped_offset + s.eta_s_ped + prop * z;
  diag_.exp_clips += (mu_raw.array().abs() > c).count();
  Eigen::VectorXd mu_s = mu_raw.array().min(c).max(-c);
  Eigen::VectorXd e_s = mu_s.array().exp();
  double ll_prop = m_.ped_delta.dot(mu_s) - e_s.sum();
  Eigen::VectorXd w_s = e_s.cwiseMax(opt_.weight_floor);
  double b_s = (w_s.array() * (prop * z.array()) * z.array() +
                (m_.ped_delta - e_s).array() * z.array())
                   .sum();
  double P_s = (w_s.array() * z.array().square()).sum() + 1.0 / s.sigma2_alpha;
  double mean_s = b_s / P_s;
  double lq_rev =
      0.5 * std::log(P_s) - 0.5 * P_s * (s.alpha - mean_s) * (s.alpha - mean_s);

  double lprior = -0.5 * (prop * prop - s.alpha * s.alpha) / s.sigma2_alpha;
  double log_acc = (ll_prop - ll_cur) + lprior + lq_rev - lq_fwd;
  bool accept = std::log(rng.uniform_pos()) < log_acc;
  if (accept) s.alpha = prop;
  record("alpha", accept);
  return accept;
}

void Sampler::update_variances(ChainState& s, Rng& rng) const {
  if (m_.has_longitudinal() && opt_.sample_error_variance) {
    Eigen::VectorXd r = m_.y - s.eta_l - s.eta_ls_long;
    double shape = m_.priors.a0 + 0.5 * static_cast<double>(m_.y.size());
    double rate = m_.priors.b0 + 0.5 * r.squaredNorm();
    s.sigma2_eps = rng.inverse_gamma(shape, rate);
  }
  if (opt_.sample_block_variances) {
    for (std::size_t k = 0; k < m_.blocks.size(); ++k) {
      const auto& B = m_.blocks[k];
      if (B.flat_prior) continue;
      double quad = is_subject_block(B) ? s.gamma[k].squaredNorm()
                                        : s.gamma[k].dot(B.K * s.gamma[k]);
      s.sigma2[k] = rng.inverse_gamma(B.prior_a + 0.5 * B.rank_K,
                                      B.prior_b + 0.5 * quad);
    }
  }
  if (m_.has_survival() && m_.has_shared() && opt_.sample_association_variance) {
    s.sigma2_alpha = rng.inverse_gamma(m_.priors.a_alpha + 0.5,
                                       m_.priors.b_alpha + 0.5 * s.alpha * s.alpha);
  }
}

void Sampler::sweep(ChainState& s, Rng& rng) const {
  for (int k : long_blocks_) update_longitudinal_block(k, s, rng);
  for (int k : surv_blocks_) update_survival_block(k, s, rng);
  for (int k : shared_blocks_) update_shared_block(k, s, rng);
  if (m_.has_survival() && m_.has_shared() && opt_.sample_association)
    update_association(s, rng);
  update_variances(s, rng);
  if (opt_.verify_caches) {
    double d = cache_drift(s);
    if (d > 1e-10)
      throw NumericError("predictor caches drifted by " + format_double(d));
  }
  refresh_caches(s);  // keep long chains free of accumulated rounding drift
}

void Sampler::store_draw(const ChainState& s, Eigen::MatrixXd& out, Eigen::Index row) const {
  Eigen::Index c = 0;
  for (std::size_t k = 0; k < m_.blocks.size(); ++k) {
    Eigen::VectorXd raw = m_.blocks[k].to_raw(s.gamma[k]);
    for (Eigen::Index i = 0; i < raw.size(); ++i) out(row, c++) = raw[i];
  }
  if (m_.has_survival() && m_.has_shared()) out(row, c++) = s.alpha;
  for (std::size_t k = 0; k < m_.blocks.size(); ++k)
    if (!m_.blocks[k].flat_prior) out(row, c++) = s.sigma2[k];
  if (m_.has_survival() && m_.has_shared()) out(row, c++) = s.sigma2_alpha;
  if (m_.has_longitudinal()) out(row, c++) = s.sigma2_eps;
  if (c != static_cast<Eigen::Index>(names_.size()))
    throw NumericError("draw layout does not match parameter names");
}

ChainOutput Sampler::run(const SamplerConfig& config) const {
  SamplerConfig one = config;
  one.chains = 1;
  return run_chains(m_, one, opt_).front();
}

std::vector<ChainOutput> run_chains(const JointModel& model, const SamplerConfig& config,
                                    SamplerOptions opt) {
  if (config.iterations <= 0 || config.burn_in < 0 ||
      config.burn_in >= config.iterations)
    throw ConfigError("sampler needs 0 <= burnin < iterations");
  if (config.thinning < 1) throw ConfigError("thinning must be >= 1");
  std::vector<ChainOutput> chains;
  for (int c = 0; c < config.chains; ++c) {
    Sampler sampler(model, opt);
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(derive_seed(config.seed, (2ULL << 32) + static_cast<std::uint64_t>(c)));
    ChainState s = sampler.initial_state();
    long retained = config.retained();
    ChainOutput out;
    out.names = sampler.parameter_names();
    out.draws.resize(retained, static_cast<Eigen::Index>(out.names.size()));
    out.logpost.reserve(config.iterations);
    out.seed = config.seed;
    Eigen::Index row = 0;
    for (long t = 1; t <= config.iterations; ++t) {
      sampler.sweep(s, rng);
      out.logpost.push_back(sampler.log_posterior(s));
      if (t > config.burn_in && (t - config.burn_in) % config.thinning == 0 &&
          row < retained)
        sampler.store_draw(s, out.draws, row++);
    }
    for (const auto& [label, n] : sampler.diagnostics().mh_proposed) {
      auto it = sampler.diagnostics().mh_accepted.find(label);
      double acc = it == sampler.diagnostics().mh_accepted.end()
                       ? 0.0
                       : static_cast<double>(it->second);
      out.acceptance[label] = n > 0 ? acc / static_cast<double>(n) : 0.0;
    }
    out.diagnostics = sampler.diagnostics();
    out.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    chains.push_back(std::move(out));
  }
  return chains;
}

double mcse_batch_means(const Eigen::VectorXd& draws) {
  Eigen::Index n = draws.size();
  if (n < 4) throw NumericError("too few draws for a batch-means standard error");
  Eigen::Index m =
      static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(n))));
  Eigen::Index nb = n / m;
  double mean = draws.head(nb * m).mean();
  double ss = 0.0;
  for (Eigen::Index b = 0; b < nb; ++b) {
    double bm = draws.segment(b * m, m).mean();
    ss += (bm - mean) * (bm - mean);
  }
  double var = static_cast<double>(m) * ss / static_cast<double>(nb - 1);
  return std::sqrt(var / static_cast<double>(nb * m));
}

}  // namespace spajm
