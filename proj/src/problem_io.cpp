#include <fstream>
#include <sstream>

#include <json.hpp>

#include "proxbundle/problems.hpp"

namespace proxbundle {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "proxbundle.max_quad";
constexpr int kVersion = 1;

json to_array(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector from_array(const json& j, Eigen::Index expected) {
  const auto values = j.get<std::vector<double>>();
  if (expected >= 0 && static_cast<Eigen::Index>(values.size()) != expected)
    throw InvalidArgument("problem file: vector has wrong length");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

// Schema (version 1):
//   format, version, n, nf, r, seed, sparse, lipschitz_bound,
//   z[n], x_star[n], active_at_xstar[], active_at_z[],
//   quadratics[nf]: { b[n], c, hessian }
//   hessian is {"dense": [[row]...]} or {"triplets": [[i, j, v]...]} (upper
//   triangle, i <= j) when `sparse` is set.
std::string to_json(const MaxQuadProblem& p) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["n"] = p.dimension();
  j["nf"] = p.count();
  j["r"] = p.r;
  j["seed"] = p.seed;
  j["sparse"] = p.sparse;
  j["lipschitz_bound"] = p.lipschitz_bound;
  j["z"] = to_array(p.z);
  j["x_star"] = to_array(p.x_star);
  j["active_at_xstar"] = p.active_at_xstar;
  j["active_at_z"] = p.active_at_z;
  json qs = json::array();
  for (const auto& q : p.quadratics) {
    json jq;
    jq["b"] = to_array(q.b);
    jq["c"] = q.c;
    const auto n = q.A.rows();
    if (p.sparse) {
      json trip = json::array();
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = i; k < n; ++k)
          if (q.A(i, k) != 0.0) trip.push_back(json::array({i, k, q.A(i, k)}));
      jq["hessian"]["triplets"] = std::move(trip);
    } else {
      json rows = json::array();
      for (Eigen::Index i = 0; i < n; ++i) rows.push_back(to_array(q.A.row(i).transpose()));
      jq["hessian"]["dense"] = std::move(rows);
    }
    qs.push_back(std::move(jq));
  }
  j["quadratics"] = std::move(qs);
  return j.dump(1);
}

MaxQuadProblem problem_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("problem file: ") + e.what());
  }
  if (j.value("format", "") != kFormat) throw InvalidArgument("problem file: unknown format tag");
  if (j.value("version", 0) != kVersion) throw InvalidArgument("problem file: unsupported version");

  try {
    MaxQuadProblem p;
    const int n = j.at("n").get<int>();
    const int nf = j.at("nf").get<int>();
    require(n >= 1 && nf >= 1, "problem file: n and nf must be positive");
    p.r = j.at("r").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.sparse = j.at("sparse").get<bool>();
    p.lipschitz_bound = j.at("lipschitz_bound").get<double>();
    p.z = from_array(j.at("z"), n);
    p.x_star = from_array(j.at("x_star"), n);
    p.active_at_xstar = j.at("active_at_xstar").get<std::set<int>>();
    p.active_at_z = j.at("active_at_z").get<std::set<int>>();
    const auto& qs = j.at("quadratics");
    require(static_cast<int>(qs.size()) == nf, "problem file: quadratic count does not match nf");
    for (const auto& jq : qs) {
      Quadratic q;
      q.b = from_array(jq.at("b"), n);
      q.c = jq.at("c").get<double>();
      q.A = Matrix::Zero(n, n);
      const auto& h = jq.at("hessian");
      if (h.contains("dense")) {
        const auto& rows = h.at("dense");
        require(static_cast<int>(rows.size()) == n, "problem file: dense Hessian has wrong row count");
        for (int i = 0; i < n; ++i) q.A.row(i) = from_array(rows[i], n).transpose();
      } else {
        for (const auto& t : h.at("triplets")) {
          const int a = t.at(0).get<int>();
          const int b = t.at(1).get<int>();
          require(a >= 0 && b >= 0 && a < n && b < n, "problem file: triplet index out of range");
          q.A(a, b) = q.A(b, a) = t.at(2).get<double>();
        }
      }
      p.quadratics.push_back(std::move(q));
    }
    for (int i : p.active_at_xstar) require(i >= 0 && i < nf, "problem file: active index out of range");
    for (int i : p.active_at_z) require(i >= 0 && i < nf, "problem file: active index out of range");
    return p;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("problem file: ") + e.what());
  }
}

void save_problem(const MaxQuadProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << to_json(problem) << '\n';
}

MaxQuadProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return problem_from_json(buf.str());
}

}  // namespace proxbundle
