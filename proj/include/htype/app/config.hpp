#pragma once

// JSON task configuration for the command-line tool. Every parse failure is a
// ConfigError naming the offending field.

#include "htype/riesz.hpp"
#include "htype/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace htype::app {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

/// Bad configuration or I/O problem (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Task { group_info, lemmas, fundamental, riesz, verify, newtonian, explore_threshold };

inline const std::vector<std::pair<Task, std::string>>& task_names()
{
  static const std::vector<std::pair<Task, std::string>> names = {
      {Task::group_info, "group_info"},     {Task::lemmas, "lemmas"},
      {Task::fundamental, "fundamental"},   {Task::riesz, "riesz"},
      {Task::verify, "verify"},             {Task::newtonian, "newtonian"},
      {Task::explore_threshold, "explore_threshold"}};
  return names;
}

inline std::string to_string(Task t)
{
  for (const auto& [task, name] : task_names())
    if (task == t) return name;
  return "?";
}

inline std::optional<Task> task_from_string(const std::string& s)
{
  for (const auto& [task, name] : task_names())
    if (name == s) return task;
  return std::nullopt;
}

struct SampleSpec {
  enum class Kind { none, grid, points, random };
  Kind kind = Kind::none;
  std::vector<double> lower, upper;  // grid box, flat coordinates
  std::vector<int> counts;
  std::vector<std::vector<double>> points;
  int random_count = 0;
  double random_scale = 1.0;
  std::uint64_t random_seed = 0;
};

struct TaskConfig {
  int schema_version = kSchemaVersion;
  Task task = Task::group_info;
  json group_json;  // echoed verbatim
  GroupSpec group = GroupSpec::heisenberg(1);
  std::optional<Source> source;
  std::optional<double> p;  // +inf for "inf"
  std::optional<double> alpha;
  bool log_kernel = false;                   // riesz task
  std::vector<double> alpha_values;          // explore_threshold
  std::vector<double> p_values;              // fundamental
  std::vector<double> omega_p_values;        // fundamental, quadrature certification
  std::vector<std::string> suites;           // lemmas
  int count = 0;                             // points per randomized suite (0 = task default)
  bool two_ways = false;                     // verify: add the two-route check
  std::vector<double> translation;           // newtonian: central translation
  SampleSpec samples;
  QuadratureConfig quadrature;
  std::uint64_t seed = 0;
  int threads = default_thread_count();
  json raw;  // the parsed document
};

namespace detail {

[[noreturn]] inline void fail(const std::string& field, const std::string& what)
{
  throw ConfigError("config field '" + field + "': " + what);
}

inline const json& require(const json& j, const std::string& key, const std::string& path)
{
  if (!j.is_object() || !j.contains(key)) fail(path + key, "is required");
  return j.at(key);
}

inline double number(const json& v, const std::string& field)
{
  if (!v.is_number()) fail(field, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(field, "must be finite");
  return x;
}

inline long long integer(const json& v, const std::string& field)
{
  if (!v.is_number_integer()) fail(field, "must be an integer");
  return v.get<long long>();
}

inline std::vector<double> numbers(const json& v, const std::string& field, std::optional<std::size_t> size = {})
{
  if (!v.is_array()) fail(field, "must be an array of numbers");
  if (size && v.size() != *size) fail(field, "must have " + std::to_string(*size) + " entries");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

inline GroupPoint point(const GroupSpec& spec, const json& v, const std::string& field)
{
  const std::vector<double> x = numbers(v, field, static_cast<std::size_t>(spec.dim()));
  return GroupPoint::from_coords(spec, x.data());
}

inline void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& path)
{
  if (!j.is_object()) fail(path.empty() ? "<root>" : path.substr(0, path.size() - 1), "must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(path + key, "unknown field");
  }
}

inline GroupSpec parse_group(const json& g)
{
  check_keys(g, {"kind", "n", "b", "tolerance"}, "group.");
  const json& kind = require(g, "kind", "group.");
  if (!kind.is_string()) fail("group.kind", "must be a string");
  const std::string k = kind.get<std::string>();
  try {
    if (k == "heisenberg" || k == "quaternionic") {
      const long long n = integer(require(g, "n", "group."), "group.n");
      if (n < 1 || n > kMaxLayerDim) fail("group.n", "out of range");
      return k == "heisenberg" ? GroupSpec::heisenberg(static_cast<int>(n)) : GroupSpec::quaternionic(static_cast<int>(n));
    }
    if (k == "custom") {
      const json& b = require(g, "b", "group.");
      if (!b.is_array() || b.empty()) fail("group.b", "must be a nonempty array of square matrices");
      std::vector<Matrix> mats;
      for (std::size_t s = 0; s < b.size(); ++s) {
        const std::string f = "group.b[" + std::to_string(s) + "]";
        if (!b[s].is_array() || b[s].empty()) fail(f, "must be a square matrix");
        const auto m = static_cast<Eigen::Index>(b[s].size());
        if (m > kMaxLayerDim) fail(f, "exceeds the supported dimension");
        Matrix M(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
          const std::vector<double> row = numbers(b[s][static_cast<std::size_t>(i)], f + "[" + std::to_string(i) + "]",
                                                  static_cast<std::size_t>(m));
          for (Eigen::Index j = 0; j < m; ++j) M(i, j) = row[static_cast<std::size_t>(j)];
        }
        mats.push_back(M);
      }
      const double tol = g.contains("tolerance") ? number(g["tolerance"], "group.tolerance") : kHTypeTolerance;
      return GroupSpec::custom(std::move(mats), tol);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(k == "custom" ? "group.b" : "group", e.what());
  }
  fail("group.kind", "must be heisenberg, quaternionic or custom");
}

inline Source parse_source(const GroupSpec& spec, const json& s)
{
  const json& type = require(s, "type", "source.");
  if (!type.is_string()) fail("source.type", "must be a string");
  const std::string t = type.get<std::string>();
  Source out;
  if (t == "density") {
    check_keys(s, {"type", "bumps"}, "source.");
    const json& bumps = require(s, "bumps", "source.");
    if (!bumps.is_array() || bumps.empty()) fail("source.bumps", "must be a nonempty array");
    Density d;
    for (std::size_t i = 0; i < bumps.size(); ++i) {
      const std::string f = "source.bumps[" + std::to_string(i) + "].";
      check_keys(bumps[i], {"center", "radius", "amplitude"}, f);
      Bump b;
      b.center = point(spec, require(bumps[i], "center", f), f + "center");
      b.radius = number(require(bumps[i], "radius", f), f + "radius");
      b.amplitude = bumps[i].contains("amplitude") ? number(bumps[i]["amplitude"], f + "amplitude") : 1.0;
      if (!(b.radius > 0.0)) fail(f + "radius", "must be positive");
      if (b.amplitude < 0.0) fail(f + "amplitude", "must be nonnegative");
      d.bumps.push_back(b);
    }
    out = d;
  } else if (t == "atoms") {
    check_keys(s, {"type", "atoms"}, "source.");
    const json& atoms = require(s, "atoms", "source.");
    if (!atoms.is_array() || atoms.empty()) fail("source.atoms", "must be a nonempty array");
    DiscreteMeasure mu;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string f = "source.atoms[" + std::to_string(i) + "].";
      check_keys(atoms[i], {"weight", "point"}, f);
      Atom a;
      a.weight = atoms[i].contains("weight") ? number(atoms[i]["weight"], f + "weight") : 1.0;
      if (a.weight < 0.0) fail(f + "weight", "must be nonnegative");
      a.point = point(spec, require(atoms[i], "point", f), f + "point");
      mu.atoms.push_back(a);
    }
    out = mu;
  } else {
    fail("source.type", "must be density or atoms");
  }
  return out;
}

inline SampleSpec parse_samples(const GroupSpec& spec, const json& s)
{
  SampleSpec out;
  const auto dim = static_cast<std::size_t>(spec.dim());
  if (s.contains("points")) {
    check_keys(s, {"points"}, "samples.");
    const json& pts = s["points"];
    if (!pts.is_array() || pts.empty()) fail("samples.points", "must be a nonempty array of points");
    out.kind = SampleSpec::Kind::points;
    for (std::size_t i = 0; i < pts.size(); ++i)
      out.points.push_back(numbers(pts[i], "samples.points[" + std::to_string(i) + "]", dim));
  } else if (s.contains("box")) {
    check_keys(s, {"box", "counts"}, "samples.");
    const json& box = s["box"];
    check_keys(box, {"lower", "upper"}, "samples.box.");
    out.kind = SampleSpec::Kind::grid;
    out.lower = numbers(require(box, "lower", "samples.box."), "samples.box.lower", dim);
    out.upper = numbers(require(box, "upper", "samples.box."), "samples.box.upper", dim);
    const json& counts = require(s, "counts", "samples.");
    if (!counts.is_array() || counts.size() != dim) fail("samples.counts", "must have " + std::to_string(dim) + " entries");
    for (std::size_t i = 0; i < dim; ++i) {
      const long long c = integer(counts[i], "samples.counts[" + std::to_string(i) + "]");
      if (c < 1 || c > 1000) fail("samples.counts[" + std::to_string(i) + "]", "must be in [1, 1000]");
      out.counts.push_back(static_cast<int>(c));
      if (c > 1 && !(out.lower[i] < out.upper[i])) fail("samples.box", "lower must be below upper");
    }
  } else if (s.contains("random")) {
    check_keys(s, {"random"}, "samples.");
    const json& r = s["random"];
    check_keys(r, {"count", "scale", "seed"}, "samples.random.");
    out.kind = SampleSpec::Kind::random;
    const long long c = integer(require(r, "count", "samples.random."), "samples.random.count");
    if (c < 1 || c > 1000000) fail("samples.random.count", "must be in [1, 1000000]");
    out.random_count = static_cast<int>(c);
    if (r.contains("scale")) out.random_scale = number(r["scale"], "samples.random.scale");
    if (!(out.random_scale > 0.0)) fail("samples.random.scale", "must be positive");
    if (r.contains("seed")) {
      const long long sd = integer(r["seed"], "samples.random.seed");
      if (sd < 0) fail("samples.random.seed", "must be nonnegative");
      out.random_seed = static_cast<std::uint64_t>(sd);
    }
  } else {
    fail("samples", "needs one of points, box or random");
  }
  return out;
}

inline QuadratureConfig parse_quadrature(const json& q)
{
  check_keys(q, {"gauss_order", "rel_tol", "abs_tol", "max_depth", "singular_refine_depth"}, "quadrature.");
  QuadratureConfig c;
  if (q.contains("gauss_order")) c.gauss_order = static_cast<int>(integer(q["gauss_order"], "quadrature.gauss_order"));
  if (q.contains("rel_tol")) c.rel_tol = number(q["rel_tol"], "quadrature.rel_tol");
  if (q.contains("abs_tol")) c.abs_tol = number(q["abs_tol"], "quadrature.abs_tol");
  if (q.contains("max_depth")) c.max_depth = static_cast<int>(integer(q["max_depth"], "quadrature.max_depth"));
  if (q.contains("singular_refine_depth"))
    c.singular_refine_depth = static_cast<int>(integer(q["singular_refine_depth"], "quadrature.singular_refine_depth"));
  try {
    c.validate();
  } catch (const Error& e) {
    fail("quadrature", e.what());
  }
  return c;
}

inline std::vector<std::string> strings(const json& v, const std::string& field)
{
  if (!v.is_array()) fail(field, "must be an array of strings");
  std::vector<std::string> out;
  for (const json& x : v) {
    if (!x.is_string()) fail(field, "must be an array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

}  // namespace detail

/// Validated TaskConfig from JSON text.
inline TaskConfig parse_config_text(const std::string& text)
{
  using namespace detail;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"schema_version", "task", "group", "source", "p", "alpha", "kernel", "alpha_values", "p_values",
                 "omega_p_values", "suites", "count", "two_ways", "translation", "samples", "quadrature", "seed",
                 "threads"},
             "");
  TaskConfig c;
  c.raw = j;
  if (j.contains("schema_version")) {
    const long long v = integer(j["schema_version"], "schema_version");
    if (v != kSchemaVersion) fail("schema_version", "unsupported version " + std::to_string(v));
  }
  const json& task = require(j, "task", "");
  if (!task.is_string() || !task_from_string(task.get<std::string>())) {
    std::string names;
    for (const auto& [_, n] : task_names()) names += (names.empty() ? "" : ", ") + n;
    fail("task", "must be one of " + names);
  }
  c.task = *task_from_string(task.get<std::string>());
  c.group_json = require(j, "group", "");
  c.group = parse_group(c.group_json);
  const GroupSpec& spec = c.group;

  if (j.contains("seed")) {
    const long long s = integer(j["seed"], "seed");
    if (s < 0) fail("seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("threads")) {
    const long long t = integer(j["threads"], "threads");
    if (t < 1 || t > 1024) fail("threads", "must be in [1, 1024]");
    c.threads = static_cast<int>(t);
  }
  if (j.contains("quadrature")) c.quadrature = parse_quadrature(j["quadrature"]);
  if (j.contains("count")) {
    const long long n = integer(j["count"], "count");
    if (n < 1 || n > 1000000) fail("count", "must be in [1, 1000000]");
    c.count = static_cast<int>(n);
  }
  if (j.contains("p")) {
    if (j["p"].is_string() && j["p"].get<std::string>() == "inf") {
      c.p = std::numeric_limits<double>::infinity();
    } else {
      c.p = number(j["p"], "p");
      if (!(*c.p > 2.0)) fail("p", "must exceed 2 (or be \"inf\")");
    }
  }
  if (j.contains("alpha")) c.alpha = number(j["alpha"], "alpha");
  if (j.contains("kernel")) {
    if (!j["kernel"].is_string()) fail("kernel", "must be a string");
    const std::string k = j["kernel"].get<std::string>();
    if (k == "log") c.log_kernel = true;
    else if (k != "power") fail("kernel", "must be power or log");
  }
  if (j.contains("alpha_values")) c.alpha_values = numbers(j["alpha_values"], "alpha_values");
  if (j.contains("p_values")) c.p_values = numbers(j["p_values"], "p_values");
  if (j.contains("omega_p_values")) c.omega_p_values = numbers(j["omega_p_values"], "omega_p_values");
  if (j.contains("suites")) c.suites = strings(j["suites"], "suites");
  if (j.contains("two_ways")) {
    if (!j["two_ways"].is_boolean()) fail("two_ways", "must be a boolean");
    c.two_ways = j["two_ways"].get<bool>();
  }
  if (j.contains("translation")) c.translation = numbers(j["translation"], "translation", static_cast<std::size_t>(spec.k()));
  if (j.contains("source")) {
    try {
      c.source = parse_source(spec, j["source"]);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail("source", e.what());
    }
  }
  if (j.contains("samples")) c.samples = parse_samples(spec, j["samples"]);

  // Task-specific requirements.
  const bool needs_source = c.task == Task::riesz || c.task == Task::verify || c.task == Task::newtonian ||
                            c.task == Task::explore_threshold;
  if (needs_source && !c.source) fail("source", "is required for task " + to_string(c.task));
  if (needs_source && c.samples.kind == SampleSpec::Kind::none)
    fail("samples", "is required for task " + to_string(c.task));

  switch (c.task) {
    case Task::group_info: break;
    case Task::lemmas:
      for (const std::string& s : c.suites) {
        if (s != "algebra" && s != "lemmas" && s != "commutator" && s != "bracket")
          fail("suites", "unknown suite '" + s + "' (algebra, lemmas, commutator, bracket)");
      }
      break;
    case Task::fundamental:
      for (double p : c.p_values)
        if (!(p > 2.0)) fail("p_values", "every p must exceed 2");
      for (double p : c.omega_p_values)
        if (!(p > 2.0)) fail("omega_p_values", "every p must exceed 2");
      break;
    case Task::riesz:
      if (!c.log_kernel && !c.alpha) fail("alpha", "is required for task riesz unless kernel is log");
      if (c.alpha && !(*c.alpha < spec.Q())) fail("alpha", "must be below Q");
      break;
    case Task::verify:
    case Task::explore_threshold: {
      if (!c.p) fail("p", "is required for task " + to_string(c.task));
      const bool explore = c.task == Task::explore_threshold;
      if (explore) {
        if (c.alpha_values.empty()) fail("alpha_values", "is required for task explore_threshold");
      } else if (!c.alpha) {
        fail("alpha", "is required for task verify");
      }
      for (double a : explore ? c.alpha_values : std::vector<double>{*c.alpha}) {
        try {
          TheoremCase::classify(spec.Q(), *c.p, a, explore);
        } catch (const DomainError& e) {
          fail(explore ? "alpha_values" : "alpha", e.what());
        }
      }
      if (c.two_ways && *c.p == std::numeric_limits<double>::infinity())
        fail("two_ways", "needs finite p");
      if (std::holds_alternative<Density>(*c.source) && spec.dim() > 3)
        fail("source", "density sources are limited to groups of dimension 3; use atoms");
      break;
    }
    case Task::newtonian:
      if (!std::holds_alternative<Density>(*c.source)) fail("source", "task newtonian needs a density");
      if (spec.dim() > 3) fail("group", "task newtonian is limited to groups of dimension 3");
      break;
  }
  return c;
}

inline TaskConfig parse_config_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Sample points in deterministic order (grid: last coordinate fastest).
inline std::vector<GroupPoint> expand_samples(const GroupSpec& spec, const SampleSpec& s)
{
  std::vector<GroupPoint> out;
  const int dim = spec.dim();
  switch (s.kind) {
    case SampleSpec::Kind::none: break;
    case SampleSpec::Kind::points:
      for (const auto& x : s.points) out.push_back(GroupPoint::from_coords(spec, x.data()));
      break;
    case SampleSpec::Kind::grid: {
      std::vector<int> idx(static_cast<std::size_t>(dim), 0);
      std::vector<double> x(static_cast<std::size_t>(dim));
      while (true) {
        for (int d = 0; d < dim; ++d) {
          const auto u = static_cast<std::size_t>(d);
          const int n = s.counts[u];
          x[u] = n == 1 ? 0.5 * (s.lower[u] + s.upper[u])
                        : s.lower[u] + (s.upper[u] - s.lower[u]) * idx[u] / (n - 1);
        }
        out.push_back(GroupPoint::from_coords(spec, x.data()));
        int d = dim - 1;
        while (d >= 0 && ++idx[static_cast<std::size_t>(d)] == s.counts[static_cast<std::size_t>(d)]) {
          idx[static_cast<std::size_t>(d)] = 0;
          --d;
        }
        if (d < 0) break;
      }
      break;
    }
    case SampleSpec::Kind::random: {
      std::mt19937_64 rng(s.random_seed);
      for (int n = 0; n < s.random_count; ++n) out.push_back(random_point(spec, rng, s.random_scale));
      break;
    }
  }
  return out;
}

}  // namespace htype::app
