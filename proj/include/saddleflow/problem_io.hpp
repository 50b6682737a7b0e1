#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saddleflow/problem.hpp"

namespace saddleflow {

using Json = nlohmann::json;

inline constexpr int kProblemSchemaVersion = 1;

namespace detail {

inline const Json& require_field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + ": missing field '" + key + "'");
  return *it;
}

inline double json_to_scalar(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

// Box bounds admit "inf"/"-inf" strings and null (unbounded side).
inline double json_to_bound(const Json& j, const std::string& path, double unbounded) {
  if (j.is_null()) return unbounded;
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    throw ConfigError(path + ": unknown bound '" + s + "'");
  }
  throw ConfigError(path + ": expected a number, \"inf\", \"-inf\", or null");
}

inline Vector json_to_vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Index>(i)] = json_to_scalar(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

// Row-major nested lists.
inline Matrix json_to_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix M(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols)
      throw ConfigError(row_path + ": ragged or non-array row");
    for (std::size_t c = 0; c < cols; ++c)
      M(static_cast<Index>(r), static_cast<Index>(c)) =
          json_to_scalar(j[r][c], row_path + "[" + std::to_string(c) + "]");
  }
  return M;
}

inline Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json matrix_to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

}  // namespace detail

inline SmoothConvexFunction parse_function(const Json& j, const std::string& path) {
  const std::string kind = detail::require_field(j, "kind", path).get<std::string>();
  if (kind == "affine") {
    return SmoothConvexFunction::affine(
        detail::json_to_vector(detail::require_field(j, "a", path), path + ".a"),
        detail::json_to_scalar(detail::require_field(j, "b", path), path + ".b"));
  }
  if (kind == "quadratic") {
    return SmoothConvexFunction::quadratic(
        detail::json_to_matrix(detail::require_field(j, "Q", path), path + ".Q"),
        detail::json_to_vector(detail::require_field(j, "q", path), path + ".q"),
        j.contains("c0") ? detail::json_to_scalar(j["c0"], path + ".c0") : 0.0);
  }
  throw ConfigError(path + ": unknown function kind '" + kind + "'");
}

inline ConvexSet parse_set(const Json& j, const std::string& path) {
  const std::string kind = detail::require_field(j, "kind", path).get<std::string>();
  if (kind == "whole-space") {
    return ConvexSet::whole_space(
        static_cast<Index>(detail::json_to_scalar(detail::require_field(j, "dim", path),
                                                  path + ".dim")));
  }
  if (kind == "nonneg-orthant") {
    return ConvexSet::nonneg_orthant(
        static_cast<Index>(detail::json_to_scalar(detail::require_field(j, "dim", path),
                                                  path + ".dim")));
  }
  if (kind == "box") {
    const Json& lo = detail::require_field(j, "lower", path);
    const Json& hi = detail::require_field(j, "upper", path);
    if (!lo.is_array() || !hi.is_array() || lo.size() != hi.size())
      throw ConfigError(path + ": lower/upper must be arrays of equal length");
    Vector lower(static_cast<Index>(lo.size()));
    Vector upper(static_cast<Index>(hi.size()));
    for (std::size_t i = 0; i < lo.size(); ++i) {
      const std::string p = path + ".lower[" + std::to_string(i) + "]";
      lower[static_cast<Index>(i)] = detail::json_to_bound(lo[i], p, -kInf);
      upper[static_cast<Index>(i)] =
          detail::json_to_bound(hi[i], path + ".upper[" + std::to_string(i) + "]", kInf);
    }
    return ConvexSet::box(std::move(lower), std::move(upper));
  }
  if (kind == "halfspace-intersection") {
    return ConvexSet::halfspace_intersection(
        detail::json_to_matrix(detail::require_field(j, "A", path), path + ".A"),
        detail::json_to_vector(detail::require_field(j, "b", path), path + ".b"));
  }
  if (kind == "product") {
    const Json& factors = detail::require_field(j, "factors", path);
    if (!factors.is_array() || factors.empty())
      throw ConfigError(path + ".factors: expected a non-empty array");
    std::vector<ConvexSet> fs;
    for (std::size_t i = 0; i < factors.size(); ++i)
      fs.push_back(parse_set(factors[i], path + ".factors[" + std::to_string(i) + "]"));
    return ConvexSet::product(std::move(fs));
  }
  throw ConfigError(path + ": unknown set kind '" + kind + "'");
}

inline Problem parse_problem_json(const Json& j, const std::string& path = "problem") {
  const Json& version = detail::require_field(j, "schema_version", path);
  if (!version.is_number_integer() || version.get<int>() != kProblemSchemaVersion)
    throw ConfigError(path + ".schema_version: expected " +
                      std::to_string(kProblemSchemaVersion));
  SmoothConvexFunction objective =
      parse_function(detail::require_field(j, "objective", path), path + ".objective");
  std::vector<SmoothConvexFunction> constraints;
  if (j.contains("constraints")) {
    const Json& cs = j["constraints"];
    if (!cs.is_array()) throw ConfigError(path + ".constraints: expected an array");
    for (std::size_t i = 0; i < cs.size(); ++i)
      constraints.push_back(
          parse_function(cs[i], path + ".constraints[" + std::to_string(i) + "]"));
  }
  ConvexSet hard_set = parse_set(detail::require_field(j, "hard_set", path), path + ".hard_set");
  const double rho =
      j.contains("rho") ? detail::json_to_scalar(j["rho"], path + ".rho") : 0.0;
  const double tau_x =
      j.contains("tau_x") ? detail::json_to_scalar(j["tau_x"], path + ".tau_x") : 1.0;
  const double tau_mu =
      j.contains("tau_mu") ? detail::json_to_scalar(j["tau_mu"], path + ".tau_mu") : 1.0;
  return Problem(std::move(objective), std::move(constraints), std::move(hard_set), rho, tau_x,
                 tau_mu);
}

inline Problem parse_problem_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("problem file: ") + e.what());
  }
  return parse_problem_json(j);
}

inline Problem load_problem_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ConfigError("cannot open problem file '" + filename + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str());
}

inline Json serialize_function(const SmoothConvexFunction& f) {
  Json j;
  if (f.kind() == SmoothConvexFunction::Kind::Affine) {
    j["kind"] = "affine";
    j["a"] = detail::vector_to_json(f.linear_coefficients());
    j["b"] = -f.constant_term();
  } else {
    j["kind"] = "quadratic";
    j["Q"] = detail::matrix_to_json(f.quadratic_matrix());
    j["q"] = detail::vector_to_json(f.linear_coefficients());
    j["c0"] = f.constant_term();
  }
  return j;
}

inline Json serialize_set(const ConvexSet& s) {
  Json j;
  switch (s.kind()) {
    case ConvexSet::Kind::WholeSpace:
      j["kind"] = "whole-space";
      j["dim"] = s.dim();
      break;
    case ConvexSet::Kind::NonnegOrthant:
      j["kind"] = "nonneg-orthant";
      j["dim"] = s.dim();
      break;
    case ConvexSet::Kind::Box: {
      j["kind"] = "box";
      Json lo = Json::array();
      Json hi = Json::array();
      for (Index i = 0; i < s.dim(); ++i) {
        lo.push_back(detail::bound_to_json(s.box_lower()[i]));
        hi.push_back(detail::bound_to_json(s.box_upper()[i]));
      }
      j["lower"] = std::move(lo);
      j["upper"] = std::move(hi);
      break;
    }
    case ConvexSet::Kind::HalfspaceIntersection:
      j["kind"] = "halfspace-intersection";
      j["A"] = detail::matrix_to_json(s.halfspace_matrix());
      j["b"] = detail::vector_to_json(s.halfspace_offset());
      break;
    case ConvexSet::Kind::Product: {
      j["kind"] = "product";
      Json fs = Json::array();
      for (const ConvexSet& f : s.factors()) fs.push_back(serialize_set(f));
      j["factors"] = std::move(fs);
      break;
    }
  }
  return j;
}

inline Json serialize_problem(const Problem& p) {
  Json j;
  j["schema_version"] = kProblemSchemaVersion;
  j["objective"] = serialize_function(p.objective());
  Json cs = Json::array();
  for (const SmoothConvexFunction& g : p.constraints()) cs.push_back(serialize_function(g));
  j["constraints"] = std::move(cs);
  j["hard_set"] = serialize_set(p.hard_set());
  j["rho"] = p.rho();
  j["tau_x"] = p.tau_x();
  j["tau_mu"] = p.tau_mu();
  return j;
}

}  // namespace saddleflow
