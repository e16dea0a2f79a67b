#include "enarkit/estimate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "enarkit/error.hpp"

namespace enarkit::estimate {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

std::string model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::NAR: return "nar";
    case ModelKind::ENAR: return "enar";
    case ModelKind::AMNAR: return "amnar";
    case ModelKind::ENR: return "enr";
  }
  return "unknown";
}

ModelKind parse_model(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "nar") return ModelKind::NAR;
  if (lower == "enar") return ModelKind::ENAR;
  if (lower == "amnar") return ModelKind::AMNAR;
  if (lower == "enr") return ModelKind::ENR;
  fail(ErrorCode::InvalidArgument, "unknown model '" + name + "' (expected nar, enar, amnar or enr)");
}

Index DesignSpec::latent_columns() const {
  switch (model) {
    case ModelKind::NAR: return 0;
    case ModelKind::AMNAR: return k + 1;
    default: return k;
  }
}

void DesignSpec::validate() const {
  if (model != ModelKind::NAR && k < 1) {
    fail(ErrorCode::InvalidArgument, model_name(model) + " needs a latent dimension k >= 1");
  }
  if (model == ModelKind::AMNAR && !(s > 0.0 && s < 0.5)) {
    fail(ErrorCode::InvalidArgument, "AMNAR rate exponent s must lie in (0, 1/2)");
  }
}

std::vector<std::string> DesignSpec::coefficient_names(Index p) const {
  std::vector<std::string> names;
  for (Index j = 0; j < latent_columns(); ++j) names.push_back("beta_" + std::to_string(j + 1));
  if (has_lags()) {
    names.emplace_back("alpha");
    names.emplace_back("theta");
  } else if (enr_intercept) {
    names.emplace_back("intercept");
  }
  for (Index j = 0; j < p; ++j) names.push_back("gamma_" + std::to_string(j + 1));
  return names;
}

namespace {

Index column_count(const DesignSpec& spec, Index p) {
  return spec.latent_columns() + (spec.has_lags() ? 2 : (spec.enr_intercept ? 1 : 0)) + p;
}

double latent_scale(const DesignSpec& spec, Index n, Index t_len) {
  return spec.model == ModelKind::AMNAR ? process::amnar_multiplier(n, t_len, spec.s) : 1.0;
}

void fill_rows(Eigen::Ref<MatrixXd> rows, const MatrixXd& scaled_latent, const VectorXd& y_t,
               const SparseMatrix& laplacian, const MatrixXd& z_t, const DesignSpec& spec) {
  const Index lat = scaled_latent.cols();
  Index col = 0;
  if (lat > 0) rows.leftCols(lat) = scaled_latent;
  col += lat;
  if (spec.has_lags()) {
    rows.col(col++) = y_t;
    rows.col(col++) = laplacian * y_t;
  } else if (spec.enr_intercept) {
    rows.col(col++).setOnes();
  }
  if (z_t.cols() > 0) rows.rightCols(z_t.cols()) = z_t;
}

}  // namespace

Design build_design(const process::Panel& panel, const SparseMatrix& laplacian, const MatrixXd& latent,
                    const DesignSpec& spec) {
  spec.validate();
  panel.validate();
  const Index n = panel.n(), t_len = panel.t_len(), p = panel.p();
  if (laplacian.rows() != n || laplacian.cols() != n) {
    fail(ErrorCode::DimensionMismatch, "Laplacian size differs from panel node count");
  }
  if (latent.rows() != n || latent.cols() != spec.latent_columns()) {
    fail(ErrorCode::DimensionMismatch, "latent regressors must be N x " + std::to_string(spec.latent_columns()));
  }
  if (t_len < 1) fail(ErrorCode::DimensionMismatch, "panel has no transitions");
  const MatrixXd scaled = latent * latent_scale(spec, n, t_len);
  Design d;
  d.w.resize(n * t_len, column_count(spec, p));
  d.y.resize(n * t_len);
  for (Index t = 0; t < t_len; ++t) {
    fill_rows(d.w.middleRows(t * n, n), scaled, panel.y.col(t), laplacian, panel.z[static_cast<std::size_t>(t)],
              spec);
    d.y.segment(t * n, n) = panel.y.col(t + 1);
  }
  return d;
}

MatrixXd design_rows(const MatrixXd& latent, const VectorXd& y_t, const SparseMatrix& laplacian, const MatrixXd& z_t,
                     const DesignSpec& spec, Index t_len) {
  const Index n = y_t.size();
  if (latent.rows() != n || latent.cols() != spec.latent_columns() || z_t.rows() != n || laplacian.rows() != n) {
    fail(ErrorCode::DimensionMismatch, "forecast inputs do not match the fitted design");
  }
  MatrixXd rows(n, column_count(spec, z_t.cols()));
  fill_rows(rows, latent * latent_scale(spec, n, t_len), y_t, laplacian, z_t, spec);
  return rows;
}

double FitResult::coefficient(const std::string& name) const { return mu_hat(index_of(name)); }

Index FitResult::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorCode::InvalidArgument, "no coefficient named '" + name + "'");
  return static_cast<Index>(it - names.begin());
}

FitResult fit_ls(const MatrixXd& w, const VectorXd& y) {
  if (w.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "design rows differ from response length");
  const Index n = w.rows(), d = w.cols();
  FitResult fit;
  fit.n_obs = n;
  fit.n_params = d;

  if (d > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(w);
    qr.setThreshold(1e-10);
    if (qr.rank() < d || n < d) {
      std::string cols;
      for (Index j = qr.rank(); j < d; ++j) {
        if (!cols.empty()) cols += ",";
        cols += std::to_string(qr.colsPermutation().indices()(j));
      }
      fail(ErrorCode::RankDeficient, "design is rank deficient; dependent columns: " + cols);
    }
    fit.mu_hat = qr.solve(y);
    MatrixXd r = qr.matrixR().topLeftCorner(d, d).triangularView<Eigen::Upper>();
    MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(d, d));
    MatrixXd inv_perm = r_inv * r_inv.transpose();
    MatrixXd inv = qr.colsPermutation() * inv_perm * qr.colsPermutation().transpose();
    Eigen::JacobiSVD<MatrixXd> svd(r);
    const auto& sv = svd.singularValues();
    fit.diagnostics.condition_number = std::pow(sv(0) / sv(d - 1), 2);
    fit.cov_hat = inv;
  } else {
    fit.mu_hat.resize(0);
    fit.cov_hat.resize(0, 0);
  }

  VectorXd resid = d > 0 ? VectorXd(y - w * fit.mu_hat) : y;
  fit.rss = resid.squaredNorm();
  fit.sigma2_hat = n > d ? fit.rss / static_cast<double>(n - d) : std::nan("");
  fit.cov_hat = fit.sigma2_hat * fit.cov_hat;
  fit.cov_hat = 0.5 * (fit.cov_hat + fit.cov_hat.transpose()).eval();
  fit.se = fit.cov_hat.diagonal().cwiseMax(0.0).cwiseSqrt();

  const double nd = static_cast<double>(n);
  if (fit.rss > 0.0) {
    fit.loglik = -0.5 * nd * (std::log(2.0 * M_PI * fit.rss / nd) + 1.0);
  } else {
    fit.loglik = std::numeric_limits<double>::infinity();
  }
  fit.aic = -2.0 * fit.loglik + 2.0 * static_cast<double>(d + 1);
  fit.bic = -2.0 * fit.loglik + static_cast<double>(d + 1) * std::log(nd);
  return fit;
}

FitResult fit_with_latent(const process::Panel& panel, const SparseMatrix& laplacian, const MatrixXd& latent,
                          const DesignSpec& spec) {
  Design d = build_design(panel, laplacian, latent, spec);
  FitResult fit = fit_ls(d.w, d.y);
  fit.spec = spec;
  fit.names = spec.coefficient_names(panel.p());
  fit.n_nodes = panel.n();
  fit.t_len = panel.t_len();
  fit.beta_rotation_ambiguous = spec.latent_columns() > 0;
  return fit;
}

Diagnostics embedding_diagnostics(const network::Graph& graph, Index k) {
  Diagnostics diag;
  const Index n = graph.n();
  if (k < 1 || k >= n) return diag;
  network::Embedding e = network::spectral_embed(graph, k + 1);
  diag.eigengap = std::max(std::abs(e.eigenvalues(k - 1)) - std::abs(e.eigenvalues(k)), 0.0);
  double rho = graph.edge_density();
  if (diag.eigengap > 0.0) {
    diag.kappa = std::sqrt(static_cast<double>(k) * static_cast<double>(n) * rho) / diag.eigengap;
  }
  return diag;
}

namespace {

void merge_embedding_diagnostics(FitResult& fit, const Diagnostics& d) {
  fit.diagnostics.eigengap = d.eigengap;
  fit.diagnostics.kappa = d.kappa;
}

}  // namespace

FitResult fit_nar(const process::Panel& panel, const network::Graph& graph, const FitOptions& options) {
  SparseMatrix l = network::normalized_laplacian(graph, options.allow_isolated);
  DesignSpec spec{ModelKind::NAR, 0};
  return fit_with_latent(panel, l, MatrixXd(panel.n(), 0), spec);
}

EnarFit fit_enar(const process::Panel& panel, const network::Graph& graph, Index k, const FitOptions& options) {
  SparseMatrix l = network::normalized_laplacian(graph, options.allow_isolated);
  DesignSpec spec{ModelKind::ENAR, k};
  spec.validate();
  EnarFit out;
  out.embedding = network::spectral_embed(graph, k);
  out.fit = fit_with_latent(panel, l, out.embedding.vectors, spec);
  merge_embedding_diagnostics(out.fit, embedding_diagnostics(graph, k));
  return out;
}

EnarFit fit_enr(const process::Panel& panel, const network::Graph& graph, Index k, const FitOptions& options) {
  SparseMatrix l = network::normalized_laplacian(graph, true);
  DesignSpec spec{ModelKind::ENR, k};
  spec.enr_intercept = options.enr_intercept;
  spec.validate();
  EnarFit out;
  out.embedding = network::spectral_embed(graph, k);
  out.fit = fit_with_latent(panel, l, out.embedding.vectors, spec);
  merge_embedding_diagnostics(out.fit, embedding_diagnostics(graph, k));
  return out;
}

AmnarFit fit_amnar(const process::Panel& panel, const network::Graph& graph, Index k, double s,
                   const lsm::LsmConfig& config, const FitOptions& options) {
  SparseMatrix l = network::normalized_laplacian(graph, options.allow_isolated);
  DesignSpec spec{ModelKind::AMNAR, k, s};
  spec.validate();
  AmnarFit out;
  out.latent = lsm::fit_lsm(graph, k, config);
  out.latent_estimate = out.latent.state.stacked();
  out.fit = fit_with_latent(panel, l, out.latent_estimate, spec);
  auto resid = lsm::constraint_residuals(out.latent.state);
  out.fit.diagnostics.lsm_loglik = out.latent.loglik_trace.back();
  out.fit.diagnostics.lsm_centering_residual = resid.centering;
  out.fit.diagnostics.lsm_diagonal_residual = resid.off_diagonal;
  out.fit.diagnostics.lsm_stalled = out.latent.stalled;
  return out;
}

VectorXd predict_one_step(const FitResult& fit, const SparseMatrix& laplacian, const VectorXd& y_t,
                          const MatrixXd& z_t, const MatrixXd& latent) {
  MatrixXd rows = design_rows(latent, y_t, laplacian, z_t, fit.spec, fit.t_len);
  if (rows.cols() != fit.mu_hat.size()) fail(ErrorCode::DimensionMismatch, "forecast design width differs from fit");
  return rows * fit.mu_hat;
}

namespace {

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  if (m.cols() == 1 || m.rows() == 1) return m.norm();
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

double rmse_rel(const MatrixXd& b_true, const MatrixXd& b_hat) {
  if (b_true.rows() != b_hat.rows() || b_true.cols() != b_hat.cols()) {
    fail(ErrorCode::DimensionMismatch, "rmse inputs differ in shape");
  }
  double denom = spectral_norm(b_true);
  if (denom == 0.0) fail(ErrorCode::ZeroDenominator, "true value has zero norm");
  return spectral_norm(b_true - b_hat) / denom;
}

double rmsp(const MatrixXd& w_t, const VectorXd& mu_hat, const VectorXd& mu_true) {
  if (w_t.cols() != mu_hat.size() || mu_hat.size() != mu_true.size()) {
    fail(ErrorCode::DimensionMismatch, "rmsp inputs differ in shape");
  }
  return rmsp_forecast(w_t * mu_hat, w_t * mu_true);
}

double rmsp_forecast(const VectorXd& y_hat, const VectorXd& true_mean) {
  if (y_hat.size() != true_mean.size()) fail(ErrorCode::DimensionMismatch, "forecast length differs");
  double denom = true_mean.norm();
  if (denom == 0.0) fail(ErrorCode::ZeroDenominator, "true conditional mean is zero");
  return (y_hat - true_mean).norm() / denom;
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    if (prob == 0.0) return -std::numeric_limits<double>::infinity();
    if (prob == 1.0) return std::numeric_limits<double>::infinity();
    fail(ErrorCode::InvalidArgument, "probability must lie in [0, 1]");
  }
  // Acklam's rational approximation, then one Halley step on erfc.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x = 0.0;
  if (prob < low) {
    double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - low) {
    double q = prob - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log1p(-prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - prob;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

std::pair<double, double> confint(const FitResult& fit, Index index, double level) {
  if (!(level > 0.0 && level < 1.0)) fail(ErrorCode::InvalidArgument, "confidence level must lie in (0, 1)");
  if (index < 0 || index >= fit.mu_hat.size()) fail(ErrorCode::InvalidArgument, "coefficient index out of range");
  double z = normal_quantile(0.5 + 0.5 * level);
  double half = z * fit.se(index);
  return {fit.mu_hat(index) - half, fit.mu_hat(index) + half};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double read_number(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

}  // namespace

json fit_to_json(const FitResult& fit) {
  json mu = json::object(), se = json::object();
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    mu[fit.names[j]] = number(fit.mu_hat(static_cast<Index>(j)));
    se[fit.names[j]] = number(fit.se(static_cast<Index>(j)));
  }
  json cov = json::array();
  for (Index i = 0; i < fit.cov_hat.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < fit.cov_hat.cols(); ++j) row.push_back(number(fit.cov_hat(i, j)));
    cov.push_back(row);
  }
  const auto& d = fit.diagnostics;
  json diag = {{"eigengap", number(d.eigengap)},
               {"kappa", number(d.kappa)},
               {"condition_number", number(d.condition_number)}};
  if (fit.spec.model == ModelKind::AMNAR) {
    diag["lsm_loglik"] = number(d.lsm_loglik);
    diag["lsm_centering_residual"] = number(d.lsm_centering_residual);
    diag["lsm_diagonal_residual"] = number(d.lsm_diagonal_residual);
    diag["lsm_stalled"] = d.lsm_stalled;
  }
  json out = {{"model", model_name(fit.spec.model)},
              {"k", fit.spec.k},
              {"coefficients", fit.names},
              {"mu_hat", mu},
              {"se", se},
              {"cov_hat", cov},
              {"sigma2_hat", number(fit.sigma2_hat)},
              {"rss", number(fit.rss)},
              {"loglik", number(fit.loglik)},
              {"aic", number(fit.aic)},
              {"bic", number(fit.bic)},
              {"n_obs", fit.n_obs},
              {"n_params", fit.n_params},
              {"n_nodes", fit.n_nodes},
              {"t_len", fit.t_len},
              {"beta_rotation_ambiguous", fit.beta_rotation_ambiguous},
              {"diagnostics", diag}};
  if (fit.spec.model == ModelKind::AMNAR) out["s"] = fit.spec.s;
  if (fit.spec.model == ModelKind::ENR) out["intercept"] = fit.spec.enr_intercept;
  return out;
}

FitResult fit_from_json(const json& j) {
  try {
    FitResult fit;
    fit.spec.model = parse_model(j.at("model").get<std::string>());
    fit.spec.k = j.at("k").get<Index>();
    if (j.contains("s")) fit.spec.s = j.at("s").get<double>();
    if (j.contains("intercept")) fit.spec.enr_intercept = j.at("intercept").get<bool>();
    fit.names = j.at("coefficients").get<std::vector<std::string>>();
    const Index d = static_cast<Index>(fit.names.size());
    fit.mu_hat.resize(d);
    fit.se.resize(d);
    for (Index i = 0; i < d; ++i) {
      fit.mu_hat(i) = read_number(j.at("mu_hat").at(fit.names[static_cast<std::size_t>(i)]));
      fit.se(i) = read_number(j.at("se").at(fit.names[static_cast<std::size_t>(i)]));
    }
    const auto& cov = j.at("cov_hat");
    fit.cov_hat.resize(d, d);
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < d; ++c) fit.cov_hat(r, c) = read_number(cov.at(r).at(c));
    }
    fit.sigma2_hat = read_number(j.at("sigma2_hat"));
    fit.rss = read_number(j.at("rss"));
    fit.loglik = read_number(j.at("loglik"));
    fit.aic = read_number(j.at("aic"));
    fit.bic = read_number(j.at("bic"));
    fit.n_obs = j.at("n_obs").get<Index>();
    fit.n_params = j.at("n_params").get<Index>();
    fit.n_nodes = j.at("n_nodes").get<Index>();
    fit.t_len = j.at("t_len").get<Index>();
    fit.beta_rotation_ambiguous = j.at("beta_rotation_ambiguous").get<bool>();
    const auto& diag = j.at("diagnostics");
    fit.diagnostics.eigengap = read_number(diag.at("eigengap"));
    fit.diagnostics.kappa = read_number(diag.at("kappa"));
    fit.diagnostics.condition_number = read_number(diag.at("condition_number"));
    if (fit.spec.coefficient_names(d - fit.spec.latent_columns() - (fit.spec.has_lags() ? 2 : (fit.spec.enr_intercept ? 1 : 0))) !=
        fit.names) {
      fail(ErrorCode::ParseError, "coefficient names do not match the model");
    }
    return fit;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed fit JSON: ") + e.what());
  }
}

}  // namespace enarkit::estimate
