#pragma once

#include <map>
#include <string>
#include <vector>

#include "decomp/dataset.hpp"

namespace decomp {

// A regressor: a data column, or the elementwise product of two columns.
struct Term {
  std::string a;
  std::string b;  // empty for a main effect

  bool interaction() const { return !b.empty(); }
  std::string label() const { return interaction() ? a + ":" + b : a; }
};

inline Term main_effect(std::string name) { return Term{std::move(name), {}}; }
inline Term interaction(std::string a, std::string b) { return Term{std::move(a), std::move(b)}; }

// Intercept is implicit and always present.
struct ModelFormula {
  std::string response;
  std::vector<Term> terms;
};

enum class Family { linear, logistic };

struct FittedModel {
  Family family = Family::linear;
  ModelFormula formula;
  std::vector<double> beta;      // beta[0] intercept, beta[k+1] for terms[k]
  double residual_variance = 0;  // linear fits only; 0 when saturated
  std::size_t n_used = 0;
  int iterations = 0;  // logistic fits only

  double intercept() const { return beta[0]; }
  double coef(const std::string& term_label) const;
};

// Weighted least squares through the normal equations with a Cholesky
// factorization; a pivot below 1e-10 times the largest diagonal entry is
// reported as a singular design naming the offending term.
FittedModel fit_linear(const Dataset& data, const ModelFormula& formula);
FittedModel fit_linear(const Dataset& data, const ModelFormula& formula, const std::vector<double>& weights);

// Logistic regression by iteratively reweighted least squares: start at
// zero, stop when no coefficient moves more than 1e-8, fail after 100
// iterations. A coefficient exceeding 15 in magnitude is treated as
// separation. Response must be coded 0/1.
FittedModel fit_logistic(const Dataset& data, const ModelFormula& formula);

// Linear predictor / mean response for one row of named values. Every
// column referenced by the formula must be present.
double predict_mean(const FittedModel& model, const std::map<std::string, double>& row);

// expit of the linear predictor, kept strictly inside (0,1).
double predict_prob(const FittedModel& model, const std::map<std::string, double>& row);

double linear_predictor(const FittedModel& model, const std::map<std::string, double>& row);

}  // namespace decomp
