#include "decomp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "decomp/errors.hpp"
#include "decomp/glm.hpp"
#include "decomp/random.hpp"

namespace decomp {

std::string estimator_name(EstimatorId id) {
  switch (id) {
    case EstimatorId::diff_in_coeffs: return "diff_in_coeffs";
    case EstimatorId::product_of_coeffs: return "product_of_coeffs";
    case EstimatorId::rmpw: return "rmpw";
    case EstimatorId::single_imputation: return "single_imputation";
    case EstimatorId::multi_imputation: return "multi_imputation";
  }
  return "unknown";
}

std::optional<EstimatorId> estimator_from_name(const std::string& name) {
  std::string key = name;
  std::replace(key.begin(), key.end(), '-', '_');
  for (EstimatorId id : kAllEstimators)
    if (estimator_name(id) == key) return id;
  return std::nullopt;
}

std::string reason_text(UnavailableReason reason) {
  switch (reason) {
    case UnavailableReason::none: return "";
    case UnavailableReason::categorical_mediator: return "categorical mediator";
    case UnavailableReason::continuous_mediator: return "continuous mediator";
    case UnavailableReason::categorical_outcome: return "categorical outcome";
    case UnavailableReason::multiple_mediators: return "multiple mediators";
    case UnavailableReason::exposure_mediator_interaction: return "exposure-mediator interaction";
    case UnavailableReason::other_nonlinearity: return "other nonlinearity";
  }
  return "";
}

const AvailabilityReport::Entry& AvailabilityReport::entry(EstimatorId id) const {
  for (const auto& e : entries)
    if (e.estimator == id) return e;
  throw DataError("availability report has no such estimator");
}

ModelPlan default_plan(const RoleSpec& spec, EstimatorId id) {
  ModelPlan plan;
  switch (id) {
    case EstimatorId::diff_in_coeffs:
    case EstimatorId::rmpw:
      break;  // strictly additive models
    case EstimatorId::product_of_coeffs:
    case EstimatorId::single_imputation:
    case EstimatorId::multi_imputation:
      for (const auto& m : spec.mediators) plan.outcome_interactions.push_back(interaction(spec.exposure, m.name));
      break;
  }
  return plan;
}

namespace {

bool is_exposure_mediator_pair(const Term& t, const RoleSpec& spec) {
  if (!t.interaction()) return false;
  auto is_mediator = [&](const std::string& n) {
    for (const auto& m : spec.mediators)
      if (m.name == n) return true;
    return false;
  };
  return (t.a == spec.exposure && is_mediator(t.b)) || (t.b == spec.exposure && is_mediator(t.a));
}

UnavailableReason interaction_reason(const ModelPlan& plan, const RoleSpec& spec) {
  for (const auto& t : plan.outcome_interactions)
    if (!is_exposure_mediator_pair(t, spec)) return UnavailableReason::other_nonlinearity;
  if (!plan.mediator_interactions.empty()) return UnavailableReason::other_nonlinearity;
  if (!plan.outcome_interactions.empty()) return UnavailableReason::exposure_mediator_interaction;
  return UnavailableReason::none;
}

}  // namespace

AvailabilityReport check_availability(const RoleSpec& spec, const ModelPlan& plan) {
  const bool многие = false;
  (void)многие;
  const bool many_mediators = spec.mediators.size() > 1;
  const bool binary_mediator = spec.mediators.front().kind == VarKind::binary;
  const bool binary_outcome = spec.outcome.kind == VarKind::binary;
  const UnavailableReason nonlin = interaction_reason(plan, spec);

  AvailabilityReport report;
  std::size_t slot = 0;
  for (EstimatorId id : kAllEstimators) {
    auto& e = report.entries[slot++];
    e.estimator = id;
    UnavailableReason reason = UnavailableReason::none;
    switch (id) {
      case EstimatorId::diff_in_coeffs:
        if (many_mediators)
          reason = UnavailableReason::multiple_mediators;
        else if (binary_mediator)
          reason = UnavailableReason::categorical_mediator;
        else if (binary_outcome)
          reason = UnavailableReason::categorical_outcome;
        else
          reason = nonlin;  // no nonlinearity of any kind is admissible
        break;
      case EstimatorId::product_of_coeffs:
        if (many_mediators)
          reason = UnavailableReason::multiple_mediators;
        else if (binary_outcome)
          reason = UnavailableReason::categorical_outcome;
        else if (nonlin == UnavailableReason::other_nonlinearity)
          reason = nonlin;  // exposure-mediator interaction is the one allowed
        break;
      case EstimatorId::rmpw:
        if (many_mediators)
          reason = UnavailableReason::multiple_mediators;
        else if (!binary_mediator)
          reason = UnavailableReason::continuous_mediator;
        break;
      case EstimatorId::single_imputation:
        if (many_mediators) reason = UnavailableReason::multiple_mediators;
        break;
      case EstimatorId::multi_imputation:
        break;
    }
    e.reason = reason;
    e.available = reason == UnavailableReason::none;
  }
  return report;
}

double percent_reduction(const DecompositionEstimate& est) {
  if (est.tau == 0.0) throw NumericError("percent reduction undefined: initial disparity is zero");
  return 100.0 * est.delta / est.tau;
}

namespace {

// ------------------------------------------------------------------
// columnar prediction helpers
//
// The imputation estimators evaluate a fitted model over many rows with a
// handful of columns overridden (exposure forced, covariates pinned at the
// reference, mediators swapped for counterfactual values). Doing that
// through the map-based predict interface would dominate the bootstrap
// cost, so model evaluation here is columnar.

struct Override {
  bool is_const = true;
  double value = 0.0;
  const std::vector<double>* series = nullptr;  // indexed like `rows`
};

using Overrides = std::map<std::string, Override>;

Override constant(double v) { return Override{true, v, nullptr}; }
Override series(const std::vector<double>& v) { return Override{false, 0.0, &v}; }

// Linear predictor of `model` over data rows `rows`; overridden columns are
// taken from the override (constant, or a vector aligned with `rows`).
std::vector<double> eval_rows(const FittedModel& model, const Dataset& data, const std::vector<std::size_t>& rows,
                              const Overrides& ov) {
  const std::size_t n = rows.size();
  std::vector<double> eta(n, model.beta[0]);
  std::vector<double> fa(n), fb(n);

  auto fill_factor = [&](const std::string& name, std::vector<double>& out) {
    auto it = ov.find(name);
    if (it != ov.end()) {
      if (it->second.is_const) {
        std::fill(out.begin(), out.end(), it->second.value);
      } else {
        const auto& s = *it->second.series;
        for (std::size_t i = 0; i < n; ++i) out[i] = s[i];
      }
      return;
    }
    const auto& col = data.column(name);
    for (std::size_t i = 0; i < n; ++i) out[i] = col[rows[i]];
  };

  for (std::size_t k = 0; k < model.formula.terms.size(); ++k) {
    const Term& t = model.formula.terms[k];
    const double b = model.beta[k + 1];
    fill_factor(t.a, fa);
    if (t.interaction()) {
      fill_factor(t.b, fb);
      for (std::size_t i = 0; i < n; ++i) eta[i] += b * fa[i] * fb[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) eta[i] += b * fa[i];
    }
  }
  return eta;
}

// Mean response (probability scale for logistic models, strictly inside
// the unit interval).
std::vector<double> eval_response(const FittedModel& model, const Dataset& data, const std::vector<std::size_t>& rows,
                                  const Overrides& ov) {
  std::vector<double> out = eval_rows(model, data, rows, ov);
  if (model.family == Family::logistic) {
    for (double& v : out) {
      v = expit(v);
      if (v <= 0.0) v = std::numeric_limits<double>::min();
      if (v >= 1.0) v = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::vector<std::size_t> all_rows(const Dataset& data) {
  std::vector<std::size_t> idx(data.n_rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

// ------------------------------------------------------------------
// shared model-building pieces

std::vector<Term> main_effects(const std::vector<Var>& vars) {
  std::vector<Term> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(main_effect(v.name));
  return out;
}

void append(std::vector<Term>& into, const std::vector<Term>& more) {
  into.insert(into.end(), more.begin(), more.end());
}

ModelFormula outcome_formula(const RoleSpec& spec, const ModelPlan& plan) {
  ModelFormula f;
  f.response = spec.outcome.name;
  f.terms.push_back(main_effect(spec.exposure));
  append(f.terms, main_effects(spec.intermediate_confounders));
  append(f.terms, main_effects(spec.mediators));
  append(f.terms, main_effects(spec.baseline_covariates));
  append(f.terms, plan.outcome_interactions);
  return f;
}

// Response regressed on exposure and covariates; used for mediator models
// and confounder models alike.
ModelFormula on_exposure_and_covariates(const std::string& response, const RoleSpec& spec, const ModelPlan& plan) {
  ModelFormula f;
  f.response = response;
  f.terms.push_back(main_effect(spec.exposure));
  append(f.terms, main_effects(spec.baseline_covariates));
  append(f.terms, plan.mediator_interactions);
  return f;
}

FittedModel fit_by_kind(const Dataset& data, const ModelFormula& formula, VarKind kind) {
  return kind == VarKind::binary ? fit_logistic(data, formula) : fit_linear(data, formula);
}

// Validates roles, centers at the reference, returns centered data plus the
// post-expansion role spec.
CenteredData prepare(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref) {
  validate_roles(data, spec);
  return center_covariates(data, spec, ref);
}

void require_single_mediator(const RoleSpec& spec, EstimatorId id) {
  if (spec.mediators.size() != 1)
    throw AvailabilityError(estimator_name(id) + ": multiple mediators are not supported");
}

void require_continuous_outcome(const RoleSpec& spec, EstimatorId id) {
  if (spec.outcome.kind == VarKind::binary)
    throw AvailabilityError(estimator_name(id) + ": categorical outcome is not supported");
}

// Mean imputation of a continuous quantity is only exact when the outcome
// model is linear in it; a logistic outcome model never is.
void reject_plugin_through_logistic(const RoleSpec& spec, VarKind imputed_kind, const char* what) {
  if (imputed_kind == VarKind::continuous && spec.outcome.kind == VarKind::binary)
    throw PlanError(std::string("mean imputation of a continuous ") + what +
                    " through a logistic outcome model is not supported");
}

double group_mean_standardized(const FittedModel& outcome, const Dataset& data, const std::vector<std::size_t>& rows,
                               double exposure_value, const RoleSpec& spec) {
  Overrides ov;
  ov[spec.exposure] = constant(exposure_value);
  for (const auto& c : spec.baseline_covariates) ov[c.name] = constant(0.0);
  return mean_of(eval_response(outcome, data, rows, ov));
}

}  // namespace

double initial_disparity(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref) {
  const CenteredData cd = prepare(data, spec, ref);
  ModelFormula f;
  f.response = cd.spec.outcome.name;
  f.terms.push_back(main_effect(cd.spec.exposure));
  append(f.terms, main_effects(cd.spec.baseline_covariates));
  return fit_linear(cd.data, f).coef(cd.spec.exposure);
}

DecompositionEstimate estimate_diff_in_coeffs(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref) {
  require_single_mediator(spec, EstimatorId::diff_in_coeffs);
  if (spec.mediators.front().kind == VarKind::binary)
    throw AvailabilityError("diff_in_coeffs: categorical mediator is not supported");
  require_continuous_outcome(spec, EstimatorId::diff_in_coeffs);
  if (spec.intermediate_confounders.size() > 1)
    throw PlanError("diff_in_coeffs: the coefficient-ratio correction needs a single intermediate confounder");

  const CenteredData cd = prepare(data, spec, ref);
  const RoleSpec& rs = cd.spec;

  ModelFormula base;
  base.response = rs.outcome.name;
  base.terms.push_back(main_effect(rs.exposure));
  append(base.terms, main_effects(rs.baseline_covariates));
  const double tau = fit_linear(cd.data, base).coef(rs.exposure);

  ModelFormula with_mediator;
  with_mediator.response = rs.outcome.name;
  with_mediator.terms.push_back(main_effect(rs.exposure));
  append(with_mediator.terms, main_effects(rs.intermediate_confounders));
  with_mediator.terms.push_back(main_effect(rs.mediators.front().name));
  append(with_mediator.terms, main_effects(rs.baseline_covariates));
  const FittedModel full = fit_linear(cd.data, with_mediator);
  const double theta1 = full.coef(rs.exposure);

  DecompositionEstimate est;
  est.estimator = EstimatorId::diff_in_coeffs;
  est.reference = ref;
  est.tau = tau;

  if (rs.intermediate_confounders.empty()) {
    est.zeta = theta1;
  } else {
    const std::string& s = rs.intermediate_confounders.front().name;
    ModelFormula with_confounder;
    with_confounder.response = rs.outcome.name;
    with_confounder.terms.push_back(main_effect(rs.exposure));
    with_confounder.terms.push_back(main_effect(s));
    append(with_confounder.terms, main_effects(rs.baseline_covariates));
    const FittedModel mid = fit_linear(cd.data, with_confounder);
    const double gamma1 = mid.coef(rs.exposure);
    const double gamma2 = mid.coef(s);
    const double theta2 = full.coef(s);
    if (std::fabs(gamma2) < 1e-10)
      throw DegenerateRatioError("diff_in_coeffs: confounder '" + s +
                                 "' has no outcome association; the coefficient ratio is undefined");
    // Remaining within confounder levels plus the confounder-mediated share
    // that bypasses the mediator; the reduction is the complement, so the
    // three quantities decompose exactly.
    est.zeta = theta1 + (theta2 / gamma2) * (tau - gamma1);
  }
  est.delta = est.tau - est.zeta;
  return est;
}

namespace {

// Exposure contrast of a mediator-type model at the reference point, on the
// response scale (probability scale for binary variables).
struct ExposureContrast {
  double at_zero;  // fitted response at exposure 0, covariates at reference
  double gap;      // response change when exposure flips 0 -> 1
};

ExposureContrast response_contrast(const FittedModel& model, const std::string& exposure) {
  double eta0 = model.intercept();  // covariates centered: reference is all zeros
  double eta1 = eta0 + model.coef(exposure);
  if (model.family == Family::logistic) return {expit(eta0), expit(eta1) - expit(eta0)};
  return {eta0, eta1 - eta0};
}

}  // namespace

DecompositionEstimate estimate_product_of_coeffs(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                                                 RemainingVariant variant, const ModelPlan& plan) {
  require_single_mediator(spec, EstimatorId::product_of_coeffs);
  require_continuous_outcome(spec, EstimatorId::product_of_coeffs);
  for (const auto& t : plan.outcome_interactions)
    if (!is_exposure_mediator_pair(t, spec))
      throw AvailabilityError("product_of_coeffs: only an exposure-mediator interaction is supported, got '" +
                              t.label() + "'");
  if (!plan.mediator_interactions.empty())
    throw PlanError("product_of_coeffs: the mediator model is fixed to exposure and covariates");

  const CenteredData cd = prepare(data, spec, ref);
  const RoleSpec& rs = cd.spec;
  const Var& mediator = rs.mediators.front();

  const FittedModel med = fit_by_kind(cd.data, on_exposure_and_covariates(mediator.name, rs, ModelPlan{}), mediator.kind);
  const ExposureContrast alpha = response_contrast(med, rs.exposure);

  const FittedModel out = fit_linear(cd.data, outcome_formula(rs, plan));
  const double beta_m = out.coef(mediator.name);
  double beta_rm = 0.0;
  for (const auto& t : plan.outcome_interactions) beta_rm += out.coef(t.label());

  DecompositionEstimate est;
  est.estimator = EstimatorId::product_of_coeffs;
  est.remaining_variant = variant;
  est.reference = ref;
  est.delta = alpha.gap * (beta_m + beta_rm);

  ModelFormula base;
  base.response = rs.outcome.name;
  base.terms.push_back(main_effect(rs.exposure));
  append(base.terms, main_effects(rs.baseline_covariates));
  est.tau = fit_linear(cd.data, base).coef(rs.exposure);

  if (variant == RemainingVariant::original) {
    est.zeta = est.tau - est.delta;
  } else {
    double zeta = out.coef(rs.exposure) + beta_rm * alpha.at_zero;
    for (const auto& s : rs.intermediate_confounders) {
      const FittedModel conf = fit_by_kind(cd.data, on_exposure_and_covariates(s.name, rs, ModelPlan{}), s.kind);
      zeta += out.coef(s.name) * response_contrast(conf, rs.exposure).gap;
    }
    est.zeta = zeta;
  }
  return est;
}

DecompositionEstimate estimate_rmpw(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                                    const ModelPlan& plan) {
  require_single_mediator(spec, EstimatorId::rmpw);
  if (spec.mediators.front().kind != VarKind::binary)
    throw AvailabilityError("rmpw: continuous mediator is not supported, weights need mediator probabilities");

  const CenteredData cd = prepare(data, spec, ref);
  const RoleSpec& rs = cd.spec;
  const std::string& m = rs.mediators.front().name;
  const GroupIndex groups = split_by_exposure(cd.data, rs);
  const Dataset d0 = select_rows(cd.data, groups.g0);
  const Dataset d1 = select_rows(cd.data, groups.g1);

  auto touches_confounder = [&](const Term& t) {
    for (const auto& s : rs.intermediate_confounders)
      if (t.a == s.name || t.b == s.name) return true;
    return false;
  };

  // Mediator probability given covariates only, fit where the exposure is 0.
  ModelFormula f0;
  f0.response = m;
  append(f0.terms, main_effects(rs.baseline_covariates));
  for (const auto& t : plan.mediator_interactions)
    if (!touches_confounder(t)) f0.terms.push_back(t);
  const FittedModel model0 = fit_logistic(d0, f0);

  // Mediator probability given confounders and covariates, fit where the
  // exposure is 1.
  ModelFormula f1;
  f1.response = m;
  append(f1.terms, main_effects(rs.intermediate_confounders));
  append(f1.terms, main_effects(rs.baseline_covariates));
  append(f1.terms, plan.mediator_interactions);
  const FittedModel model1 = fit_logistic(d1, f1);

  const auto rows1 = all_rows(d1);
  const std::vector<double> p_ref = eval_response(model0, d1, rows1, {});
  const std::vector<double> p_obs = eval_response(model1, d1, rows1, {});
  const auto& m1 = d1.column(m);

  DecompositionEstimate est;
  est.estimator = EstimatorId::rmpw;
  est.reference = ref;

  bool extreme = false;
  std::vector<double> w(rows1.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    double num = m1[i] == 1.0 ? p_ref[i] : 1.0 - p_ref[i];
    double den = m1[i] == 1.0 ? p_obs[i] : 1.0 - p_obs[i];
    if (num < 1e-12 || den < 1e-12) extreme = true;
    num = std::min(1.0 - 1e-12, std::max(1e-12, num));
    den = std::min(1.0 - 1e-12, std::max(1e-12, den));
    w[i] = num / den;
  }
  if (extreme)
    est.warnings.push_back("rmpw: a mediator probability fell below 1e-12; weights were clamped and may be unstable");

  ModelFormula y_on_c;
  y_on_c.response = rs.outcome.name;
  append(y_on_c.terms, main_effects(rs.baseline_covariates));

  const double ey1 = fit_linear(d1, y_on_c).intercept();
  const double ey0 = fit_linear(d0, y_on_c).intercept();
  const double ewy1 = fit_linear(d1, y_on_c, w).intercept();

  est.delta = ey1 - ewy1;
  est.zeta = ewy1 - ey0;
  est.tau = est.delta + est.zeta;
  return est;
}

DecompositionEstimate estimate_single_imputation(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                                                 const ModelPlan& plan) {
  require_single_mediator(spec, EstimatorId::single_imputation);
  reject_plugin_through_logistic(spec, spec.mediators.front().kind, "mediator");

  const CenteredData cd = prepare(data, spec, ref);
  const RoleSpec& rs = cd.spec;
  const Var& mediator = rs.mediators.front();
  const GroupIndex groups = split_by_exposure(cd.data, rs);

  const FittedModel med = fit_by_kind(cd.data, on_exposure_and_covariates(mediator.name, rs, plan), mediator.kind);
  const FittedModel out = fit_by_kind(cd.data, outcome_formula(rs, plan), rs.outcome.kind);

  Overrides pin1;  // exposure 1, covariates at the reference
  pin1[rs.exposure] = constant(1.0);
  for (const auto& c : rs.baseline_covariates) pin1[c.name] = constant(0.0);

  const double f1 = mean_of(eval_response(out, cd.data, groups.g1, pin1));
  const double f0 = group_mean_standardized(out, cd.data, groups.g0, 0.0, rs);

  // Counterfactual mediator drawn from the exposure-0 model at each
  // subject's own covariates.
  Overrides force0;
  force0[rs.exposure] = constant(0.0);
  const std::vector<double> cf_med = eval_response(med, cd.data, groups.g1, force0);

  double cf = 0.0;
  if (mediator.kind == VarKind::binary) {
    Overrides at0 = pin1, at1 = pin1;
    at0[mediator.name] = constant(0.0);
    at1[mediator.name] = constant(1.0);
    const std::vector<double> mu0 = eval_response(out, cd.data, groups.g1, at0);
    const std::vector<double> mu1 = eval_response(out, cd.data, groups.g1, at1);
    for (std::size_t i = 0; i < mu0.size(); ++i) cf += mu0[i] * (1.0 - cf_med[i]) + mu1[i] * cf_med[i];
    cf /= static_cast<double>(mu0.size());
  } else {
    Overrides imputed = pin1;
    imputed[mediator.name] = series(cf_med);
    cf = mean_of(eval_response(out, cd.data, groups.g1, imputed));
  }

  DecompositionEstimate est;
  est.estimator = EstimatorId::single_imputation;
  est.reference = ref;
  est.tau = f1 - f0;
  est.delta = f1 - cf;
  est.zeta = cf - f0;
  return est;
}

DecompositionEstimate estimate_single_imputation_marginal(const Dataset& data, const RoleSpec& spec,
                                                          const ModelPlan& plan) {
  require_single_mediator(spec, EstimatorId::single_imputation);
  reject_plugin_through_logistic(spec, spec.mediators.front().kind, "mediator");
  validate_roles(data, spec);

  // Expand categorical covariates without shifting anything: continuous
  // entries of the centering reference are zero, categorical entries are
  // the modal level.
  ReferencePoint expand_only = default_reference(data, spec);
  for (const auto& c : spec.baseline_covariates)
    if (c.kind != VarKind::categorical) expand_only.values[c.name] = 0.0;
  const CenteredData cd = center_covariates(data, spec, expand_only);
  const RoleSpec& rs = cd.spec;
  const Var& mediator = rs.mediators.front();
  const GroupIndex groups = split_by_exposure(cd.data, rs);
  const double n = static_cast<double>(cd.data.n_rows());
  const double n1 = static_cast<double>(groups.g1.size());

  const FittedModel med = fit_by_kind(cd.data, on_exposure_and_covariates(mediator.name, rs, plan), mediator.kind);
  const FittedModel out = fit_by_kind(cd.data, outcome_formula(rs, plan), rs.outcome.kind);

  DecompositionEstimate est;
  est.estimator = EstimatorId::single_imputation;
  est.marginal = true;

  // Weight each exposed subject by P(R=1) / P(R=1 | C) so the average over
  // the exposed arm integrates over the covariate distribution of the whole
  // sample rather than of the exposed arm.
  std::vector<double> w(groups.g1.size(), 1.0);
  if (!rs.baseline_covariates.empty()) {
    ModelFormula r_on_c;
    r_on_c.response = rs.exposure;
    append(r_on_c.terms, main_effects(rs.baseline_covariates));
    const FittedModel exposure_model = fit_logistic(cd.data, r_on_c);
    const std::vector<double> p = eval_response(exposure_model, cd.data, groups.g1, {});
    const double marginal_p1 = n1 / n;
    bool extreme = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      double pi = p[i];
      if (pi < 1e-12) {
        pi = 1e-12;
        extreme = true;
      }
      w[i] = marginal_p1 / pi;
    }
    if (extreme)
      est.warnings.push_back(
          "single_imputation (marginal): an exposure probability fell below 1e-12; weights were clamped");
  }

  Overrides force1;  // exposure forced to 1, covariates observed
  force1[rs.exposure] = constant(1.0);
  Overrides force0;
  force0[rs.exposure] = constant(0.0);
  const std::vector<double> cf_med = eval_response(med, cd.data, groups.g1, force0);

  std::vector<double> cf_i;
  if (mediator.kind == VarKind::binary) {
    Overrides at0 = force1, at1 = force1;
    at0[mediator.name] = constant(0.0);
    at1[mediator.name] = constant(1.0);
    const std::vector<double> mu0 = eval_response(out, cd.data, groups.g1, at0);
    const std::vector<double> mu1 = eval_response(out, cd.data, groups.g1, at1);
    cf_i.resize(mu0.size());
    for (std::size_t i = 0; i < mu0.size(); ++i) cf_i[i] = mu0[i] * (1.0 - cf_med[i]) + mu1[i] * cf_med[i];
  } else {
    Overrides imputed = force1;
    imputed[mediator.name] = series(cf_med);
    cf_i = eval_response(out, cd.data, groups.g1, imputed);
  }
  double cf = 0.0;
  for (std::size_t i = 0; i < cf_i.size(); ++i) cf += w[i] * cf_i[i];
  cf /= n1;

  const auto& y = cd.data.column(rs.outcome.name);
  double f1 = 0.0, f0 = 0.0;
  for (std::size_t i : groups.g1) f1 += y[i];
  for (std::size_t i : groups.g0) f0 += y[i];
  f1 /= n1;
  f0 /= static_cast<double>(groups.g0.size());

  est.tau = f1 - f0;
  est.delta = f1 - cf;
  est.zeta = cf - f0;
  return est;
}

DecompositionEstimate estimate_multi_imputation(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                                                const ModelPlan& plan) {
  for (const auto& s : spec.intermediate_confounders) reject_plugin_through_logistic(spec, s.kind, "confounder");
  for (const auto& t : plan.outcome_interactions) {
    auto continuous_confounder = [&](const std::string& name) {
      for (const auto& s : spec.intermediate_confounders)
        if (s.name == name && s.kind == VarKind::continuous) return true;
      return false;
    };
    if (continuous_confounder(t.a) && continuous_confounder(t.b))
      throw PlanError("multi_imputation: a product of two imputed continuous confounders cannot be mean-imputed");
  }

  const CenteredData cd = prepare(data, spec, ref);
  const RoleSpec& rs = cd.spec;
  const GroupIndex groups = split_by_exposure(cd.data, rs);

  std::vector<const Var*> binary_conf, continuous_conf;
  for (const auto& s : rs.intermediate_confounders)
    (s.kind == VarKind::binary ? binary_conf : continuous_conf).push_back(&s);
  if (binary_conf.size() > 16) throw PlanError("multi_imputation: too many binary confounders to enumerate");

  const FittedModel out = fit_by_kind(cd.data, outcome_formula(rs, plan), rs.outcome.kind);

  // One model per confounder on exposure and covariates; predictions for
  // the unexposed arm with the exposure forced to 1.
  Overrides force1;
  force1[rs.exposure] = constant(1.0);
  std::map<std::string, std::vector<double>> imputed;
  for (const auto& s : rs.intermediate_confounders) {
    const FittedModel model = fit_by_kind(cd.data, on_exposure_and_covariates(s.name, rs, plan), s.kind);
    imputed[s.name] = eval_response(model, cd.data, groups.g0, force1);
  }

  Overrides pin1;  // exposure 1, covariates at the reference
  pin1[rs.exposure] = constant(1.0);
  for (const auto& c : rs.baseline_covariates) pin1[c.name] = constant(0.0);

  // Expectation over the imputed confounders: continuous ones enter at
  // their predicted means, binary ones through the exact two-point sum.
  std::vector<double> cf_acc(groups.g0.size(), 0.0);
  const std::size_t combos = std::size_t{1} << binary_conf.size();
  for (std::size_t mask = 0; mask < combos; ++mask) {
    Overrides ov = pin1;
    for (const auto* s : continuous_conf) ov[s->name] = series(imputed[s->name]);
    for (std::size_t j = 0; j < binary_conf.size(); ++j)
      ov[binary_conf[j]->name] = constant((mask >> j) & 1 ? 1.0 : 0.0);
    const std::vector<double> mu = eval_response(out, cd.data, groups.g0, ov);
    for (std::size_t i = 0; i < cf_acc.size(); ++i) {
      double weight = 1.0;
      for (std::size_t j = 0; j < binary_conf.size(); ++j) {
        const double p = imputed[binary_conf[j]->name][i];
        weight *= (mask >> j) & 1 ? p : 1.0 - p;
      }
      cf_acc[i] += weight * mu[i];
    }
  }
  const double cf = mean_of(cf_acc);

  const double f1 = group_mean_standardized(out, cd.data, groups.g1, 1.0, rs);
  const double f0 = group_mean_standardized(out, cd.data, groups.g0, 0.0, rs);

  DecompositionEstimate est;
  est.estimator = EstimatorId::multi_imputation;
  est.reference = ref;
  est.tau = f1 - f0;
  est.delta = f1 - cf;
  est.zeta = cf - f0;
  return est;
}

DecompositionEstimate estimate(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                               const EstimatorRequest& request, const ModelPlan& plan) {
  switch (request.id) {
    case EstimatorId::diff_in_coeffs: return estimate_diff_in_coeffs(data, spec, ref);
    case EstimatorId::product_of_coeffs: return estimate_product_of_coeffs(data, spec, ref, request.variant, plan);
    case EstimatorId::rmpw: return estimate_rmpw(data, spec, ref, plan);
    case EstimatorId::single_imputation:
      return request.marginal ? estimate_single_imputation_marginal(data, spec, plan)
                              : estimate_single_imputation(data, spec, ref, plan);
    case EstimatorId::multi_imputation: return estimate_multi_imputation(data, spec, ref, plan);
  }
  throw DataError("unknown estimator");
}

}  // namespace decomp
