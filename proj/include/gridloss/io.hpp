#pragma once

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gridloss/covariance.hpp"
#include "gridloss/errors.hpp"
#include "gridloss/graph.hpp"
#include "gridloss/loss.hpp"
#include "gridloss/optimize.hpp"

namespace gridloss::io {

using nlohmann::json;

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

/// Graph file: {"index_base": 0|1 (default 0), "n": int, "edges": [[u,v,w?],...]}
/// with edge weight defaulting to 1.0. Node ids are shifted by index_base on
/// the way in; the base is kept so reports can echo ids in the user's base.
struct GraphFile {
  WeightedGraph graph;
  int index_base = 0;
};

inline GraphFile load_graph(const std::string& path) {
  const json j = load_json_file(path);
  try {
    if (!j.is_object()) throw ParseError(path + ": graph file must be a JSON object");
    const int base = j.value("index_base", 0);
    if (base != 0 && base != 1) throw ParseError(path + ": index_base must be 0 or 1");
    if (!j.contains("n") || !j.contains("edges")) {
      throw ParseError(path + ": graph file needs \"n\" and \"edges\"");
    }
    const int n = j.at("n").get<int>();
    std::vector<WeightedEdge> edges;
    edges.reserve(j.at("edges").size());
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3) {
        throw ParseError(path + ": each edge must be [u, v] or [u, v, w]");
      }
      WeightedEdge edge;
      edge.u = e.at(0).get<int>() - base;
      edge.v = e.at(1).get<int>() - base;
      edge.weight = e.size() == 3 ? e.at(2).get<double>() : 1.0;
      edges.push_back(edge);
    }
    return {WeightedGraph(n, std::move(edges)), base};
  } catch (const json::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

/// Covariance file: {"iid": {"variance": x}} or {"matrix": [[...],...]}.
/// `n` fixes the size of the i.i.d. model; an explicit matrix carries its own.
inline CovarianceModel load_covariance(const std::string& path, int n) {
  const json j = load_json_file(path);
  try {
    if (j.is_object() && j.contains("iid")) {
      return iid_covariance(n, j.at("iid").at("variance").get<double>());
    }
    if (j.is_object() && j.contains("matrix")) {
      const auto& rows = j.at("matrix");
      const int rn = static_cast<int>(rows.size());
      if (rn == 0) throw ParseError(path + ": covariance matrix is empty");
      const int cn = static_cast<int>(rows.at(0).size());
      Eigen::MatrixXd m(rn, cn);
      for (int r = 0; r < rn; ++r) {
        if (static_cast<int>(rows.at(r).size()) != cn) {
          throw ParseError(path + ": covariance matrix rows have unequal length");
        }
        for (int c = 0; c < cn; ++c) m(r, c) = rows.at(r).at(c).get<double>();
      }
      return validate_covariance(m);
    }
    throw ParseError(path + ": covariance file needs \"iid\" or \"matrix\"");
  } catch (const json::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

/// Load profile file: {"mu": [...]}; entries must sum to zero.
inline LoadProfile load_mu(const std::string& path) {
  const json j = load_json_file(path);
  try {
    if (!j.is_object() || !j.contains("mu")) {
      throw ParseError(path + ": load profile file needs \"mu\"");
    }
    const auto& arr = j.at("mu");
    Eigen::VectorXd mu(arr.size());
    for (int i = 0; i < static_cast<int>(arr.size()); ++i) mu(i) = arr.at(i).get<double>();
    return LoadProfile(std::move(mu));
  } catch (const json::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

/// Control file: {"alpha": [...]}; dense, entries must sum to one.
inline ControlVector load_alpha(const std::string& path) {
  const json j = load_json_file(path);
  try {
    if (!j.is_object() || !j.contains("alpha")) {
      throw ParseError(path + ": control file needs \"alpha\"");
    }
    const auto& arr = j.at("alpha");
    Eigen::VectorXd alpha(arr.size());
    for (int i = 0; i < static_cast<int>(arr.size()); ++i) alpha(i) = arr.at(i).get<double>();
    return ControlVector::full(std::move(alpha));
  } catch (const json::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

/// Penalty file: {"p_diag": [...], "q": [...]}, both optional; the defaults
/// are the pure-norm penalty P = I, q = 0. The weight xi comes from the CLI.
inline PenaltyModel load_penalty(const std::string& path, int n, double xi) {
  const json j = load_json_file(path);
  try {
    if (!j.is_object()) throw ParseError(path + ": penalty file must be a JSON object");
    Eigen::VectorXd p_diag = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    if (j.contains("p_diag")) {
      const auto& arr = j.at("p_diag");
      p_diag.resize(arr.size());
      for (int i = 0; i < static_cast<int>(arr.size()); ++i) p_diag(i) = arr.at(i).get<double>();
    }
    if (j.contains("q")) {
      const auto& arr = j.at("q");
      q.resize(arr.size());
      for (int i = 0; i < static_cast<int>(arr.size()); ++i) q(i) = arr.at(i).get<double>();
    }
    return PenaltyModel(std::move(p_diag), std::move(q), xi);
  } catch (const json::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

/// 17-significant-digit decimal rendering; the same bits always print the
/// same bytes, and the value survives a parse round trip exactly.
inline std::string fmt_double(double v) {
  if (v == 0.0) v = 0.0;  // collapse -0 to 0
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string json_array(const Eigen::VectorXd& v) {
  std::string s = "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt_double(v(i));
  }
  return s + "]";
}

inline std::string json_matrix(const Eigen::MatrixXd& m) {
  std::string s = "[";
  for (int r = 0; r < m.rows(); ++r) {
    if (r) s += ",";
    s += json_array(m.row(r).transpose());
  }
  return s + "]";
}

inline std::string json_int_array(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + "]";
}

}  // namespace gridloss::io
