#include "decomp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "decomp/errors.hpp"

namespace decomp {

bool Dataset::has_column(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<double>& Dataset::column(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return columns[j];
  throw DataError("unknown column '" + name + "'");
}

void Dataset::add_column(const std::string& name, std::vector<double> values) {
  if (has_column(name)) throw DataError("duplicate column '" + name + "'");
  if (!columns.empty() && values.size() != n_rows()) throw DataError("column '" + name + "' has mismatched length");
  names.push_back(name);
  columns.push_back(std::move(values));
}

double ReferencePoint::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw DataError("reference point has no value for '" + name + "'");
  return it->second;
}

namespace {

// One CSV record; handles quoted fields and doubled quotes.
std::vector<std::string> split_record(const std::string& line, std::size_t row_no, const std::string& origin) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw DataError(origin + ": unterminated quote in record " + std::to_string(row_no));
  out.push_back(field);
  return out;
}

double parse_cell(const std::string& cell, std::size_t row_no, const std::string& col, const std::string& origin) {
  if (cell.empty())
    throw DataError(origin + ": empty cell at row " + std::to_string(row_no) + ", column '" + col + "'");
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw DataError(origin + ": non-numeric cell '" + cell + "' at row " + std::to_string(row_no) + ", column '" +
                    col + "'");
  return value;
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& origin) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw DataError(origin + ": empty input, header row required");

  const std::vector<std::string> header = split_record(lines[0], 1, origin);
  std::set<std::string> seen;
  for (const auto& name : header) {
    if (name.empty()) throw DataError(origin + ": empty column name in header");
    if (!seen.insert(name).second) throw DataError(origin + ": duplicate column name '" + name + "'");
  }

  Dataset data;
  data.names = header;
  data.columns.assign(header.size(), {});
  for (auto& col : data.columns) col.reserve(lines.size() - 1);

  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) throw DataError(origin + ": blank record at row " + std::to_string(r + 1));
    const auto cells = split_record(lines[r], r + 1, origin);
    if (cells.size() != header.size())
      throw DataError(origin + ": row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(header.size()));
    for (std::size_t j = 0; j < cells.size(); ++j)
      data.columns[j].push_back(parse_cell(cells[j], r + 1, header[j], origin));
  }
  if (data.n_rows() == 0) throw DataError(origin + ": no data rows");
  return data;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

std::string csv_string(const Dataset& data) {
  std::string out;
  for (std::size_t j = 0; j < data.names.size(); ++j) {
    if (j) out.push_back(',');
    out += data.names[j];
  }
  out.push_back('\n');
  char cell[40];
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    for (std::size_t j = 0; j < data.columns.size(); ++j) {
      if (j) out.push_back(',');
      std::snprintf(cell, sizeof(cell), "%.17g", data.columns[j][i]);
      out += cell;
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << csv_string(data);
}

namespace {

void require_binary01(const Dataset& data, const std::string& name, const char* role) {
  for (double v : data.column(name))
    if (v != 0.0 && v != 1.0)
      throw DataError(std::string(role) + " column '" + name + "' declared binary but holds value " +
                      std::to_string(v));
}

}  // namespace

void validate_roles(const Dataset& data, const RoleSpec& spec) {
  std::vector<std::pair<std::string, const char*>> roles;
  roles.emplace_back(spec.exposure, "exposure");
  roles.emplace_back(spec.outcome.name, "outcome");
  for (const auto& v : spec.mediators) roles.emplace_back(v.name, "mediator");
  for (const auto& v : spec.intermediate_confounders) roles.emplace_back(v.name, "confounder");
  for (const auto& v : spec.baseline_covariates) roles.emplace_back(v.name, "covariate");

  std::set<std::string> used;
  for (const auto& [name, role] : roles) {
    if (name.empty()) throw DataError(std::string("empty column name for ") + role + " role");
    if (!data.has_column(name)) throw DataError(std::string(role) + " column '" + name + "' not in data");
    if (!used.insert(name).second) throw DataError("column '" + name + "' assigned to more than one role");
  }
  if (spec.mediators.empty()) throw DataError("at least one mediator required");

  bool saw0 = false, saw1 = false;
  for (double v : data.column(spec.exposure)) {
    if (v == 0.0)
      saw0 = true;
    else if (v == 1.0)
      saw1 = true;
    else
      throw DataError("exposure column '" + spec.exposure + "' holds value " + std::to_string(v) +
                      ", must be coded 0/1");
  }
  if (!saw0 || !saw1) throw DataError("exposure column '" + spec.exposure + "' must contain both 0 and 1");

  if (spec.outcome.kind == VarKind::binary) require_binary01(data, spec.outcome.name, "outcome");
  if (spec.outcome.kind == VarKind::categorical) throw DataError("outcome kind must be continuous or binary");
  for (const auto& v : spec.mediators) {
    if (v.kind == VarKind::categorical) throw DataError("mediator kind must be continuous or binary");
    if (v.kind == VarKind::binary) require_binary01(data, v.name, "mediator");
  }
  for (const auto& v : spec.intermediate_confounders) {
    if (v.kind == VarKind::categorical) throw DataError("confounder kind must be continuous or binary");
    if (v.kind == VarKind::binary) require_binary01(data, v.name, "confounder");
  }
}

ReferencePoint default_reference(const Dataset& data, const RoleSpec& spec) {
  ReferencePoint ref;
  for (const auto& v : spec.baseline_covariates) {
    const auto& col = data.column(v.name);
    if (v.kind == VarKind::categorical) {
      std::map<double, std::size_t> freq;
      for (double x : col) ++freq[x];
      std::size_t best = 0;
      double level = 0.0;
      for (const auto& [val, count] : freq) {
        if (count > best) {  // map order makes the smallest level win ties
          best = count;
          level = val;
        }
      }
      ref.values[v.name] = level;
    } else {
      double sum = 0.0;
      for (double x : col) sum += x;
      ref.values[v.name] = sum / static_cast<double>(col.size());
    }
  }
  return ref;
}

CenteredData center_covariates(const Dataset& data, const RoleSpec& spec, const ReferencePoint& ref) {
  CenteredData out;
  out.spec = spec;
  out.spec.baseline_covariates.clear();

  std::map<std::string, const Var*> covariate_of;
  for (const auto& v : spec.baseline_covariates) covariate_of[v.name] = &v;

  for (std::size_t j = 0; j < data.names.size(); ++j) {
    const auto it = covariate_of.find(data.names[j]);
    if (it == covariate_of.end()) {
      out.data.add_column(data.names[j], data.columns[j]);
      continue;
    }
    const Var& v = *it->second;
    const double c = ref.at(v.name);
    if (v.kind == VarKind::categorical) {
      std::set<double> levels(data.columns[j].begin(), data.columns[j].end());
      if (!levels.count(c))
        throw DataError("reference level " + std::to_string(c) + " absent from categorical covariate '" + v.name +
                        "'");
      for (double level : levels) {
        if (level == c) continue;
        std::vector<double> ind(data.n_rows());
        for (std::size_t i = 0; i < ind.size(); ++i) ind[i] = data.columns[j][i] == level ? 1.0 : 0.0;
        char label[64];
        std::snprintf(label, sizeof(label), "%s@%g", v.name.c_str(), level);
        out.data.add_column(label, std::move(ind));
        out.spec.baseline_covariates.push_back(Var{label, VarKind::continuous});
      }
    } else {
      std::vector<double> shifted(data.columns[j]);
      for (double& x : shifted) x -= c;
      out.data.add_column(v.name, std::move(shifted));
      out.spec.baseline_covariates.push_back(Var{v.name, VarKind::continuous});
    }
  }
  return out;
}

GroupIndex split_by_exposure(const Dataset& data, const RoleSpec& spec) {
  GroupIndex idx;
  const auto& r = data.column(spec.exposure);
  for (std::size_t i = 0; i < r.size(); ++i) (r[i] == 1.0 ? idx.g1 : idx.g0).push_back(i);
  if (idx.g0.empty() || idx.g1.empty()) throw DataError("one exposure group is empty");
  return idx;
}

Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.names = data.names;
  out.columns.resize(data.columns.size());
  for (std::size_t j = 0; j < data.columns.size(); ++j) {
    out.columns[j].resize(rows.size());
    const auto& src = data.columns[j];
    auto& dst = out.columns[j];
    for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
  }
  return out;
}

}  // namespace decomp
