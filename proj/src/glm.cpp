#include "decomp/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "decomp/errors.hpp"
#include "decomp/random.hpp"

namespace decomp {

double FittedModel::coef(const std::string& term_label) const {
  for (std::size_t k = 0; k < formula.terms.size(); ++k)
    if (formula.terms[k].label() == term_label) return beta[k + 1];
  throw DataError("model has no term '" + term_label + "'");
}

namespace {

constexpr double kPivotRatio = 1e-10;
constexpr double kIrlsTol = 1e-8;
constexpr int kIrlsMaxIter = 100;
constexpr double kSeparationBound = 15.0;
constexpr double kProbClamp = 1e-12;  // weight clamp inside IRLS only

// Design matrix, row major, leading column of ones.
struct Design {
  std::size_t n = 0, p = 0;
  std::vector<double> x;  // n * p
  std::vector<std::string> labels;

  double at(std::size_t i, std::size_t j) const { return x[i * p + j]; }
};

Design build_design(const Dataset& data, const ModelFormula& formula) {
  Design d;
  d.n = data.n_rows();
  d.p = formula.terms.size() + 1;
  d.labels.reserve(d.p);
  d.labels.push_back("(intercept)");
  for (const auto& t : formula.terms) d.labels.push_back(t.label());

  d.x.resize(d.n * d.p);
  for (std::size_t i = 0; i < d.n; ++i) d.x[i * d.p] = 1.0;
  for (std::size_t k = 0; k < formula.terms.size(); ++k) {
    const Term& t = formula.terms[k];
    const auto& a = data.column(t.a);
    if (t.interaction()) {
      const auto& b = data.column(t.b);
      for (std::size_t i = 0; i < d.n; ++i) d.x[i * d.p + k + 1] = a[i] * b[i];
    } else {
      for (std::size_t i = 0; i < d.n; ++i) d.x[i * d.p + k + 1] = a[i];
    }
  }
  return d;
}

// Solves (X'WX) beta = X'Wz in place; throws SingularDesignError with the
// first term whose pivot collapses.
std::vector<double> solve_normal_equations(const Design& d, const std::vector<double>& w,
                                           const std::vector<double>& z) {
  const std::size_t p = d.p;
  std::vector<double> xtwx(p * p, 0.0), xtwz(p, 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double wi = w[i];
    if (wi == 0.0) continue;
    const double* row = &d.x[i * p];
    const double wz = wi * z[i];
    for (std::size_t j = 0; j < p; ++j) {
      xtwz[j] += row[j] * wz;
      const double wr = wi * row[j];
      for (std::size_t k = j; k < p; ++k) xtwx[j * p + k] += wr * row[k];
    }
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < j; ++k) xtwx[j * p + k] = xtwx[k * p + j];

  double max_diag = 0.0;
  for (std::size_t j = 0; j < p; ++j) max_diag = std::max(max_diag, xtwx[j * p + j]);
  const double threshold = kPivotRatio * max_diag;

  // Cholesky, lower triangle stored in place.
  std::vector<double> chol(xtwx);
  for (std::size_t j = 0; j < p; ++j) {
    double diag = chol[j * p + j];
    for (std::size_t k = 0; k < j; ++k) diag -= chol[j * p + k] * chol[j * p + k];
    if (!(diag > threshold))
      throw SingularDesignError("singular design: term '" + d.labels[j] +
                                "' is collinear with the preceding terms");
    const double root = std::sqrt(diag);
    chol[j * p + j] = root;
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = chol[i * p + j];
      for (std::size_t k = 0; k < j; ++k) v -= chol[i * p + k] * chol[j * p + k];
      chol[i * p + j] = v / root;
    }
  }

  std::vector<double> beta(p);
  for (std::size_t i = 0; i < p; ++i) {
    double v = xtwz[i];
    for (std::size_t k = 0; k < i; ++k) v -= chol[i * p + k] * beta[k];
    beta[i] = v / chol[i * p + i];
  }
  for (std::size_t ii = p; ii-- > 0;) {
    double v = beta[ii];
    for (std::size_t k = ii + 1; k < p; ++k) v -= chol[k * p + ii] * beta[k];
    beta[ii] = v / chol[ii * p + ii];
  }
  return beta;
}

}  // namespace

FittedModel fit_linear(const Dataset& data, const ModelFormula& formula, const std::vector<double>& weights) {
  if (data.n_rows() == 0) throw DataError("cannot fit on empty data");
  if (weights.size() != data.n_rows()) throw DataError("weight vector length does not match row count");
  std::size_t n_used = 0;
  double weight_sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw DataError("negative weight supplied to fit_linear");
    if (w > 0.0) ++n_used;
    weight_sum += w;
  }
  if (weight_sum == 0.0) throw DataError("all weights are zero");

  const Design d = build_design(data, formula);
  const auto& y = data.column(formula.response);

  FittedModel model;
  model.family = Family::linear;
  model.formula = formula;
  model.n_used = n_used;
  model.beta = solve_normal_equations(d, weights, y);

  double ssr = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    if (weights[i] == 0.0) continue;
    double fit = 0.0;
    for (std::size_t j = 0; j < d.p; ++j) fit += d.at(i, j) * model.beta[j];
    const double r = y[i] - fit;
    ssr += weights[i] * r * r;
  }
  model.residual_variance = n_used > d.p ? ssr / static_cast<double>(n_used - d.p) : 0.0;
  return model;
}

FittedModel fit_linear(const Dataset& data, const ModelFormula& formula) {
  return fit_linear(data, formula, std::vector<double>(data.n_rows(), 1.0));
}

FittedModel fit_logistic(const Dataset& data, const ModelFormula& formula) {
  if (data.n_rows() == 0) throw DataError("cannot fit on empty data");
  const auto& y = data.column(formula.response);
  for (double v : y)
    if (v != 0.0 && v != 1.0) throw DataError("logistic response '" + formula.response + "' must be coded 0/1");

  const Design d = build_design(data, formula);
  const std::size_t n = d.n, p = d.p;
  std::vector<double> beta(p, 0.0), eta(n, 0.0), w(n), z(n);

  FittedModel model;
  model.family = Family::logistic;
  model.formula = formula;
  model.n_used = n;

  for (int iter = 1; iter <= kIrlsMaxIter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double e = 0.0;
      const double* row = &d.x[i * p];
      for (std::size_t j = 0; j < p; ++j) e += row[j] * beta[j];
      eta[i] = e;
      double mu = expit(e);
      mu = std::min(1.0 - kProbClamp, std::max(kProbClamp, mu));
      const double wi = mu * (1.0 - mu);
      w[i] = wi;
      z[i] = e + (y[i] - mu) / wi;
    }
    std::vector<double> next = solve_normal_equations(d, w, z);
    double delta = 0.0;
    for (std::size_t j = 0; j < p; ++j) delta = std::max(delta, std::fabs(next[j] - beta[j]));
    beta = std::move(next);
    for (std::size_t j = 0; j < p; ++j)
      if (std::fabs(beta[j]) > kSeparationBound)
        throw SeparationError("separation suspected: coefficient on '" + d.labels[j] + "' exceeded " +
                              std::to_string(kSeparationBound));
    model.iterations = iter;
    if (delta < kIrlsTol) {
      model.beta = beta;
      return model;
    }
  }
  throw ConvergenceError("logistic fit did not converge in " + std::to_string(kIrlsMaxIter) + " iterations");
}

double linear_predictor(const FittedModel& model, const std::map<std::string, double>& row) {
  auto value = [&](const std::string& name) {
    auto it = row.find(name);
    if (it == row.end()) throw DataError("prediction row is missing a value for '" + name + "'");
    return it->second;
  };
  double eta = model.beta[0];
  for (std::size_t k = 0; k < model.formula.terms.size(); ++k) {
    const Term& t = model.formula.terms[k];
    const double v = t.interaction() ? value(t.a) * value(t.b) : value(t.a);
    eta += model.beta[k + 1] * v;
  }
  return eta;
}

double predict_mean(const FittedModel& model, const std::map<std::string, double>& row) {
  const double eta = linear_predictor(model, row);
  return model.family == Family::linear ? eta : predict_prob(model, row);
}

double predict_prob(const FittedModel& model, const std::map<std::string, double>& row) {
  if (model.family != Family::logistic) throw DataError("predict_prob requires a logistic model");
  double p = expit(linear_predictor(model, row));
  if (p <= 0.0) p = std::numeric_limits<double>::min();
  if (p >= 1.0) p = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  return p;
}

}  // namespace decomp
