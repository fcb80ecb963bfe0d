#pragma once

// Task dispatch for the command-line tool: each task turns a TaskConfig into
// a RunReport of records and per-point rows.

#include "htype/app/config.hpp"
#include "htype/suites.hpp"

#include <chrono>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace htype::app {

inline constexpr double kNewtonianSpreadTol = 0.02;
inline constexpr double kNewtonianDriftTol = 0.005;
inline constexpr double kAtomTwoWaysTol = 1e-12;

struct RunReport {
  Task task = Task::group_info;
  json config;  // normalised echo; threads omitted so output does not depend on it
  std::vector<Record> records;
  json points = json::array();
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  std::vector<std::string> notes;
  bool exploratory = false;
  bool numerical_failure = false;
  double runtime_seconds = 0.0;

  bool pass() const
  {
    for (const Record& r : records)
      if (!r.informational && !r.pass) return false;
    return !numerical_failure;
  }

  int exit_code() const { return numerical_failure ? 3 : pass() ? 0 : 1; }
};

inline std::string fmt(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline json echo_config(const TaskConfig& c)
{
  json j;
  j["schema_version"] = c.schema_version;
  j["task"] = to_string(c.task);
  j["group"] = c.group_json;
  j["seed"] = c.seed;
  j["quadrature"] = {{"gauss_order", c.quadrature.gauss_order},
                     {"rel_tol", c.quadrature.rel_tol},
                     {"abs_tol", c.quadrature.abs_tol},
                     {"max_depth", c.quadrature.max_depth},
                     {"singular_refine_depth", c.quadrature.singular_refine_depth}};
  for (const auto& [key, value] : c.raw.items()) {
    if (key != "threads" && !j.contains(key)) j[key] = value;
  }
  return j;
}

inline json coords(const GroupPoint& g)
{
  json a = json::array();
  for (Eigen::Index i = 0; i < g.z.size(); ++i) a.push_back(g.z(i));
  for (Eigen::Index s = 0; s < g.t.size(); ++s) a.push_back(g.t(s));
  return a;
}

inline std::vector<std::string> coord_header(const GroupSpec& spec)
{
  std::vector<std::string> h;
  for (int i = 1; i <= spec.m(); ++i) h.push_back("z" + std::to_string(i));
  for (int s = 1; s <= spec.k(); ++s) h.push_back("t" + std::to_string(s));
  return h;
}

inline std::vector<std::string> coord_cells(const GroupPoint& g)
{
  std::vector<std::string> r;
  for (Eigen::Index i = 0; i < g.z.size(); ++i) r.push_back(fmt(g.z(i)));
  for (Eigen::Index s = 0; s < g.t.size(); ++s) r.push_back(fmt(g.t(s)));
  return r;
}

inline std::string number_label(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

/// Samples that land on an atom are a configuration problem.
inline void check_samples(const TaskConfig& c, const std::vector<GroupPoint>& samples)
{
  if (samples.empty()) fail("samples", "expands to no points");
  if (const auto* mu = std::get_if<DiscreteMeasure>(&*c.source)) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (const Atom& a : mu->atoms)
        if (a.point == samples[i]) fail("samples", "point " + std::to_string(i) + " coincides with an atom");
    }
  }
}

inline void run_group_info(const TaskConfig& c, RunReport& r)
{
  const GroupSpec& spec = c.group;
  r.records.push_back(info_record("group.m", spec.m()));
  r.records.push_back(info_record("group.k", spec.k()));
  r.records.push_back(info_record("group.Q", spec.Q()));
  r.records.push_back(bound_record("group.htype_defect", spec.validate().max_defect, kHTypeTolerance));
}

inline void run_lemmas(const TaskConfig& c, RunReport& r)
{
  const std::vector<std::string> all = {"algebra", "lemmas", "commutator", "bracket"};
  const std::vector<std::string>& suites = c.suites.empty() ? all : c.suites;
  auto count = [&](int fallback) { return c.count > 0 ? c.count : fallback; };
  for (const std::string& s : suites) {
    std::vector<Record> rec;
    if (s == "algebra") rec = suites::algebra(c.group, count(1000), c.seed);
    if (s == "lemmas") rec = suites::lemmas(c.group, count(200), c.seed + 1);
    if (s == "commutator") rec = suites::commutator(c.group, count(5), c.seed + 2);
    if (s == "bracket") rec = suites::bracket(c.group, count(10000), c.seed + 3);
    r.records.insert(r.records.end(), rec.begin(), rec.end());
  }
}

inline void run_fundamental(const TaskConfig& c, RunReport& r)
{
  const double Q = c.group.Q();
  const std::vector<double> ps = c.p_values.empty() ? std::vector<double>{Q - 1.0, Q, Q + 2.0} : c.p_values;
  const std::vector<Record> rec = suites::fundamental(c.group, ps, c.count > 0 ? c.count : 100, c.seed);
  r.records.insert(r.records.end(), rec.begin(), rec.end());
  if (!c.omega_p_values.empty()) {
    try {
      const std::vector<Record> q = suites::quadrature(c.group, c.omega_p_values, c.quadrature);
      r.records.insert(r.records.end(), q.begin(), q.end());
    } catch (const QuadratureError& e) {
      r.numerical_failure = true;
      r.notes.push_back(std::string("quadrature: ") + e.what());
    }
  }
}

inline void run_riesz(const TaskConfig& c, RunReport& r)
{
  const GroupSpec& spec = c.group;
  const std::vector<GroupPoint> samples = expand_samples(spec, c.samples);
  check_samples(c, samples);
  const RieszKernel kernel{c.alpha ? -*c.alpha : 0.0, c.log_kernel};
  std::vector<RieszJet> jets(samples.size());
  parallel_for(samples.size(), c.threads,
               [&](std::size_t i) { jets[i] = riesz_jet_result(spec, *c.source, kernel, samples[i], c.quadrature); });
  r.csv_header = coord_header(spec);
  for (const char* h : {"F", "Ferr", "gradnorm", "subLap", "infLap", "converged"}) r.csv_header.push_back(h);
  int unconverged = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RieszJet& rj = jets[i];
    const OperatorTerms t = operator_terms(rj.jet);
    if (!rj.converged) ++unconverged;
    json grad = json::array();
    for (Eigen::Index j = 0; j < rj.jet.grad.size(); ++j) grad.push_back(rj.jet.grad(j));
    r.points.push_back({{"g", coords(samples[i])},
                        {"F", rj.jet.value},
                        {"F_err", rj.error.value},
                        {"grad", grad},
                        {"grad_norm", t.grad_norm},
                        {"sub", t.sub},
                        {"inf", t.inf},
                        {"converged", rj.converged}});
    std::vector<std::string> row = coord_cells(samples[i]);
    for (double x : {rj.jet.value, rj.error.value, t.grad_norm, t.sub, t.inf}) row.push_back(fmt(x));
    row.push_back(rj.converged ? "1" : "0");
    r.csv_rows.push_back(row);
  }
  r.records.push_back(bound_record("riesz.unconverged_points", unconverged, 0.0));
  if (unconverged > 0) r.numerical_failure = true;
}

inline void append_verification(const GroupSpec& spec, const VerificationReport& v, RunReport& r,
                                std::optional<double> alpha_column)
{
  if (r.csv_header.empty()) {
    if (alpha_column) r.csv_header.push_back("alpha");
    for (const std::string& h : coord_header(spec)) r.csv_header.push_back(h);
    for (const char* h : {"F", "gradnorm", "subLap", "infLap", "pLap", "verdict", "errbound"}) r.csv_header.push_back(h);
  }
  for (const PointReport& p : v.points) {
    json row = {{"g", coords(p.g)},     {"F", p.F},         {"F_err", p.F_err}, {"grad_norm", p.grad_norm},
                {"sub", p.sub},         {"inf", p.inf},     {"plap", p.plap},   {"error", p.error},
                {"tau", p.tau},         {"violation", p.violation},             {"verdict", to_string(p.verdict)}};
    if (alpha_column) row["alpha"] = *alpha_column;
    r.points.push_back(row);
    std::vector<std::string> cells;
    if (alpha_column) cells.push_back(fmt(*alpha_column));
    for (const std::string& x : coord_cells(p.g)) cells.push_back(x);
    for (double x : {p.F, p.grad_norm, p.sub, p.inf, p.plap}) cells.push_back(fmt(x));
    cells.push_back(to_string(p.verdict));
    cells.push_back(fmt(p.tau));
    r.csv_rows.push_back(cells);
  }
}

/// Largest violation - tau over the verified points (-inf when none).
inline double worst_excess(const VerificationReport& v)
{
  double w = -std::numeric_limits<double>::infinity();
  for (const PointReport& p : v.points)
    if (p.verdict == Verdict::pass || p.verdict == Verdict::fail) w = std::max(w, p.violation - p.tau);
  return w;
}

inline int count_verdict(const VerificationReport& v, Verdict which)
{
  int n = 0;
  for (const PointReport& p : v.points) n += p.verdict == which;
  return n;
}

inline void run_two_ways(const TaskConfig& c, const TheoremCase& tc, const std::vector<GroupPoint>& samples,
                         RunReport& r)
{
  const GroupSpec& spec = c.group;
  std::vector<TwoWays> tw(samples.size());
  parallel_for(samples.size(), c.threads,
               [&](std::size_t i) { tw[i] = plaplacian_two_ways(spec, *c.source, tc, samples[i], c.quadrature); });
  const bool atoms = std::holds_alternative<DiscreteMeasure>(*c.source);
  double worst = -std::numeric_limits<double>::infinity();
  int skipped = 0, unconverged = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const TwoWays& t = tw[i];
    r.points[i]["two_ways"] = {{"direct", t.direct},       {"direct_err", t.direct_err},
                               {"via_bracket", t.via_bracket}, {"via_err", t.via_err},
                               {"skipped", t.skipped},     {"converged", t.converged}};
    if (t.skipped) {
      ++skipped;
      continue;
    }
    if (!t.converged) ++unconverged;
    const double excess = atoms ? t.gap() / (std::abs(t.direct) + std::abs(t.via_bracket) + 1e-300)
                                : t.gap() - t.combined_error();
    worst = std::max(worst, excess);
  }
  if (atoms) {
    r.records.push_back(bound_record("two_ways.relative_gap", worst, kAtomTwoWaysTol));
  } else {
    r.records.push_back(bound_record("two_ways.gap_minus_combined_error", worst, 0.0));
  }
  r.records.push_back(info_record("two_ways.skipped_points", skipped));
  r.records.push_back(bound_record("two_ways.unconverged_points", unconverged, 0.0));
  if (unconverged > 0) r.numerical_failure = true;
}

inline void run_verify(const TaskConfig& c, RunReport& r)
{
  const GroupSpec& spec = c.group;
  const std::vector<GroupPoint> samples = expand_samples(spec, c.samples);
  check_samples(c, samples);
  const TheoremCase tc = TheoremCase::classify(spec.Q(), *c.p, *c.alpha);
  const VerificationReport v = verify_theorem(spec, *c.source, tc, samples, c.quadrature, {c.threads, false});
  append_verification(spec, v, r, std::nullopt);
  const std::string name = "verify." + to_string(tc.kind);
  r.records.push_back(bound_record(name + ".max_violation_minus_tau", worst_excess(v), 0.0));
  r.records.push_back(bound_record(name + ".failed_points", count_verdict(v, Verdict::fail), 0.0));
  r.records.push_back(bound_record(name + ".unconverged_points", count_verdict(v, Verdict::unconverged), 0.0));
  r.records.push_back(info_record(name + ".skipped_points", count_verdict(v, Verdict::skipped)));
  r.records.push_back(info_record(name + ".max_violation", v.max_violation));
  if (v.numerical_failure) r.numerical_failure = true;
  if (tc.kind == CaseKind::infinity)
    r.notes.push_back("p = inf is checked as the sign of the infinity-Laplacian of F (an interpretation)");
  if (c.two_ways) run_two_ways(c, tc, samples, r);
}

inline void run_explore(const TaskConfig& c, RunReport& r)
{
  const GroupSpec& spec = c.group;
  const std::vector<GroupPoint> samples = expand_samples(spec, c.samples);
  check_samples(c, samples);
  r.exploratory = true;
  r.notes.push_back("exploratory scan: records are informational and not acceptance checks");
  double first = std::numeric_limits<double>::quiet_NaN();
  for (double alpha : c.alpha_values) {
    const TheoremCase tc = TheoremCase::classify(spec.Q(), *c.p, alpha, true);
    const VerificationReport v = verify_theorem(spec, *c.source, tc, samples, c.quadrature, {c.threads, false});
    append_verification(spec, v, r, alpha);
    const std::string a = number_label(alpha);
    r.records.push_back(info_record("explore.alpha=" + a + ".max_violation_minus_tau", worst_excess(v)));
    r.records.push_back(info_record("explore.alpha=" + a + ".failed_points", count_verdict(v, Verdict::fail)));
    r.records.push_back(info_record("explore.alpha=" + a + ".within_theorem", tc.exploratory ? 0.0 : 1.0));
    if (std::isnan(first) && count_verdict(v, Verdict::fail) > 0) first = alpha;
    if (v.numerical_failure) r.numerical_failure = true;
  }
  r.records.push_back(info_record("explore.first_violating_alpha", first));
}

inline void run_newtonian(const TaskConfig& c, RunReport& r)
{
  const GroupSpec& spec = c.group;
  const Density& rho = std::get<Density>(*c.source);
  const std::vector<GroupPoint> samples = expand_samples(spec, c.samples);
  if (samples.empty()) fail("samples", "expands to no points");
  double amp = 0.0;
  for (const Bump& b : rho.bumps) amp = std::max(amp, b.amplitude);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(rho.value(samples[i]) > 1e-3 * amp)) fail("samples", "point " + std::to_string(i) + " is outside the density support");
  }

  const LinearPotentialReport base = verify_linear_potential(spec, rho, samples, c.quadrature, -1.0, c.threads);
  Density doubled = rho;
  for (Bump& b : doubled.bumps) b.amplitude *= 2.0;
  const LinearPotentialReport scaled = verify_linear_potential(spec, doubled, samples, c.quadrature, -1.0, c.threads);
  GroupPoint shift = GroupPoint::identity(spec);
  if (c.translation.empty()) shift.t.setConstant(0.3);
  else for (int s = 0; s < spec.k(); ++s) shift.t(s) = c.translation[static_cast<std::size_t>(s)];
  Density moved = rho;
  for (Bump& b : moved.bumps) b.center = multiply(spec, shift, b.center);
  std::vector<GroupPoint> moved_samples;
  for (const GroupPoint& g : samples) moved_samples.push_back(multiply(spec, shift, g));
  const LinearPotentialReport translated =
      verify_linear_potential(spec, moved, moved_samples, c.quadrature, -1.0, c.threads);

  // omega_2 = int_{N<1} |XN|^2 fixes the constant of the fundamental solution.
  const IntegralResult omega2 = integrate_gauge_ball(
      spec,
      [](const GroupPoint& g) {
        const double psi = g.z.squaredNorm();
        if (psi == 0.0) return 0.0;
        return std::min(1.0, psi / std::sqrt(psi * psi + 16.0 * g.t.squaredNorm()));
      },
      c.quadrature);

  r.csv_header = coord_header(spec);
  for (const char* h : {"rho", "ratio", "errbound", "ratio_doubled", "ratio_translated"}) r.csv_header.push_back(h);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    r.points.push_back({{"g", coords(samples[i])},
                        {"rho", rho.value(samples[i])},
                        {"ratio", base.ratios[i]},
                        {"error", base.errors[i]},
                        {"ratio_doubled", scaled.ratios[i]},
                        {"ratio_translated", translated.ratios[i]}});
    std::vector<std::string> row = coord_cells(samples[i]);
    for (double x : {rho.value(samples[i]), base.ratios[i], base.errors[i], scaled.ratios[i], translated.ratios[i]})
      row.push_back(fmt(x));
    r.csv_rows.push_back(row);
  }
  r.records.push_back(bound_record("newtonian.spread", base.spread, kNewtonianSpreadTol));
  r.records.push_back(bound_record("newtonian.amplitude_drift", std::abs(scaled.mean - base.mean) / std::abs(base.mean),
                                   kNewtonianDriftTol));
  r.records.push_back(bound_record("newtonian.translation_drift",
                                   std::abs(translated.mean - base.mean) / std::abs(base.mean), kNewtonianDriftTol));
  r.records.push_back(info_record("newtonian.measured_constant", base.mean));
  r.records.push_back(info_record("newtonian.predicted_constant", (spec.Q() - 2.0) * spec.Q() * omega2.value));
  r.notes.push_back("the constant relating -L R_2 rho to rho is measured and reported, not asserted");
  if (!base.converged || !scaled.converged || !translated.converged || !omega2.converged) r.numerical_failure = true;
}

}  // namespace detail

/// Runs the configured task. ConfigError for problems found while running
/// (e.g. samples on atoms); numerical failures are flagged in the report.
inline RunReport run_task(const TaskConfig& c)
{
  const auto start = std::chrono::steady_clock::now();
  RunReport r;
  r.task = c.task;
  r.config = detail::echo_config(c);
  try {
    switch (c.task) {
      case Task::group_info: detail::run_group_info(c, r); break;
      case Task::lemmas: detail::run_lemmas(c, r); break;
      case Task::fundamental: detail::run_fundamental(c, r); break;
      case Task::riesz: detail::run_riesz(c, r); break;
      case Task::verify: detail::run_verify(c, r); break;
      case Task::explore_threshold: detail::run_explore(c, r); break;
      case Task::newtonian: detail::run_newtonian(c, r); break;
    }
  } catch (const QuadratureError& e) {
    r.numerical_failure = true;
    r.notes.push_back(std::string("numerical failure: ") + e.what());
  }
  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace htype::app
