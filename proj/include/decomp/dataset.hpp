#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace decomp {

// Column-major numeric table. Column order is the load/construction order
// and is preserved by every transformation, so downstream output is stable.
struct Dataset {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t n_rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t n_cols() const { return columns.size(); }
  bool has_column(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const;
  void add_column(const std::string& name, std::vector<double> values);
};

enum class VarKind { continuous, binary, categorical };

struct Var {
  std::string name;
  VarKind kind = VarKind::continuous;
};

// Which column plays which part in the decomposition. Mediator order is
// meaningful: it is the intervention order for the multi-mediator method.
struct RoleSpec {
  std::string exposure;  // binary 0/1 group indicator
  Var outcome;
  std::vector<Var> mediators;
  std::vector<Var> intermediate_confounders;
  std::vector<Var> baseline_covariates;
};

// Covariate values defining the conditional estimand ("holding C at c").
// For categorical covariates the value is the reference level code.
struct ReferencePoint {
  std::map<std::string, double> values;

  bool empty() const { return values.empty(); }
  double at(const std::string& name) const;
};

// CSV loading is strict: header row required, every cell numeric, RFC 4180
// line endings accepted. Errors name the offending row and column.
Dataset load_csv(const std::string& path);
Dataset parse_csv(const std::string& text, const std::string& origin);

// Writes with round-trip precision: load(write(d)) reproduces d bit for bit.
void write_csv(const Dataset& data, const std::string& path);
std::string csv_string(const Dataset& data);

// Checks role columns exist, are disjoint, the exposure is two-valued 0/1,
// and every binary-declared column holds only 0/1.
void validate_roles(const Dataset& data, const RoleSpec& spec);

// Mean for continuous and binary covariates, most frequent level (smallest
// level on ties) for categorical ones. Empty covariate list -> empty point.
ReferencePoint default_reference(const Dataset& data, const RoleSpec& spec);

struct CenteredData {
  Dataset data;
  RoleSpec spec;  // categorical covariates are replaced by indicator columns
};

// Shifts continuous/binary covariates so the reference point sits at zero,
// and expands categorical covariates into indicators with the reference
// level as omitted baseline. Non-covariate columns pass through untouched.
CenteredData center_covariates(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref);

// Row indices per exposure arm, original order preserved.
struct GroupIndex {
  std::vector<std::size_t> g0;
  std::vector<std::size_t> g1;
};

GroupIndex split_by_exposure(const Dataset& data, const RoleSpec& spec);

Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows);

}  // namespace decomp
