#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "decomp/dataset.hpp"
#include "decomp/glm.hpp"

namespace decomp {

// The five estimation strategies. All of them target the same three
// quantities for a binary exposure contrast at a covariate reference point:
//   tau   initial disparity            E[Y|R=1,c] - E[Y|R=0,c]
//   delta disparity reduction          what an equalizing intervention on
//                                      the mediator(s) would remove
//   zeta  disparity remaining          what it would leave behind
enum class EstimatorId {
  diff_in_coeffs,     // nested outcome regressions, coefficient differences
  product_of_coeffs,  // mediator-model x outcome-model coefficient product
  rmpw,               // ratio-of-mediator-probability weighting
  single_imputation,  // counterfactual mediator imputed from the other arm
  multi_imputation,   // counterfactual confounders imputed, mediators kept
};

constexpr std::array<EstimatorId, 5> kAllEstimators = {
    EstimatorId::diff_in_coeffs, EstimatorId::product_of_coeffs, EstimatorId::rmpw,
    EstimatorId::single_imputation, EstimatorId::multi_imputation};

std::string estimator_name(EstimatorId id);
std::optional<EstimatorId> estimator_from_name(const std::string& name);

// How the remaining disparity is assembled for the coefficient-product
// estimator: subtract delta from the initial disparity, or build it
// directly from outcome-model and confounder-model coefficients. The
// direct form avoids the pooled initial-disparity fit, which matters when
// a binary mediator makes that fit misspecified.
enum class RemainingVariant { original, alternative };

// Extra regression structure on top of the role-implied main effects.
struct ModelPlan {
  std::vector<Term> outcome_interactions;
  std::vector<Term> mediator_interactions;  // mediator/confounder models
};

// Exposure-by-mediator interactions for every estimator that tolerates
// them; the nested-regression estimator gets a strictly additive plan.
ModelPlan default_plan(const RoleSpec& spec, EstimatorId id);

enum class UnavailableReason {
  none,
  categorical_mediator,
  continuous_mediator,
  categorical_outcome,
  multiple_mediators,
  exposure_mediator_interaction,
  other_nonlinearity,
};

std::string reason_text(UnavailableReason reason);

struct AvailabilityReport {
  struct Entry {
    EstimatorId estimator;
    bool available = false;
    UnavailableReason reason = UnavailableReason::none;
  };
  std::array<Entry, 5> entries;

  const Entry& entry(EstimatorId id) const;
};

// Which estimators can serve the declared roles under the given plan.
AvailabilityReport check_availability(const RoleSpec& spec, const ModelPlan& plan);

struct DecompositionEstimate {
  EstimatorId estimator = EstimatorId::diff_in_coeffs;
  double tau = 0;
  double delta = 0;
  double zeta = 0;
  RemainingVariant remaining_variant = RemainingVariant::original;
  ReferencePoint reference;  // empty when marginal
  bool marginal = false;
  std::vector<std::string> warnings;
};

// 100 * delta / tau; refuses a zero initial disparity.
double percent_reduction(const DecompositionEstimate& est);

// Every estimator takes uncentered data and centers internally at `ref`.
// The reference must carry a value for each baseline covariate; the
// bootstrap layer decides whether it is held fixed or re-derived per
// resample.

DecompositionEstimate estimate_diff_in_coeffs(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref);

DecompositionEstimate estimate_product_of_coeffs(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                                                 RemainingVariant variant, const ModelPlan& plan);

DecompositionEstimate estimate_rmpw(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                                    const ModelPlan& plan);

DecompositionEstimate estimate_single_imputation(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                                                 const ModelPlan& plan);

// Marginal variant: no centering, group means taken as sample averages,
// counterfactual term averaged over observed covariate values with
// exposure-odds weights from a logistic exposure model.
DecompositionEstimate estimate_single_imputation_marginal(const Dataset& data, const RoleSpec& spec,
                                                          const ModelPlan& plan);

DecompositionEstimate estimate_multi_imputation(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                                                const ModelPlan& plan);

// Exposure coefficient of the covariate-adjusted outcome regression.
double initial_disparity(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref);

struct EstimatorRequest {
  EstimatorId id = EstimatorId::single_imputation;
  RemainingVariant variant = RemainingVariant::original;
  bool marginal = false;  // single_imputation only
};

DecompositionEstimate estimate(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref,
                               const EstimatorRequest& request, const ModelPlan& plan);

}  // namespace decomp
