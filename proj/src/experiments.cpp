#include "startomo/experiments.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "startomo/bp_montecarlo.hpp"
#include "startomo/css.hpp"
#include "startomo/harmonics.hpp"
#include "startomo/variational.hpp"

namespace startomo {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kTopKeys{"experiment", "n",       "i",       "body",        "grid",      "subsphere_m",
                                     "samples",    "blocks",  "seed",    "t_grid",      "out_dir",   "direction",
                                     "fiber_count", "steps",  "bodies"};

std::string child(const std::string& pointer, const std::string& key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') escaped += "~0";
    else if (c == '/') escaped += "~1";
    else escaped += c;
  }
  return pointer + "/" + escaped;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& pointer) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(child(pointer, key), "unknown key");
  }
}

std::int64_t get_integer(const json& obj, const std::string& key, std::int64_t fallback, std::int64_t lo,
                         std::int64_t hi, const std::string& pointer) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  const std::string where = child(pointer, key);
  if (!v.is_number_integer()) throw ConfigError(where, "expected an integer");
  const std::int64_t x = v.get<std::int64_t>();
  if (x < lo || x > hi) {
    throw ConfigError(where, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return x;
}

double get_number(const json& obj, const std::string& key, double fallback, const std::string& pointer,
                  bool positive) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(child(pointer, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || (positive && !(x > 0.0))) throw ConfigError(child(pointer, key), "must be positive");
  return x;
}

std::vector<double> get_vector(const json& obj, const std::string& key, const std::string& pointer,
                               std::size_t size) {
  const std::string where = child(pointer, key);
  if (!obj.contains(key)) throw ConfigError(where, "required");
  const json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(where, "expected an array");
  if (v.size() != size) throw ConfigError(where, "expected " + std::to_string(size) + " entries");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) throw ConfigError(where + "/" + std::to_string(k), "expected a number");
    out.push_back(v[k].get<double>());
    if (!std::isfinite(out.back())) throw ConfigError(where + "/" + std::to_string(k), "must be finite");
  }
  return out;
}

Vec to_vec(const std::vector<double>& xs) { return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size())); }

std::vector<double> from_vec(const Vec& v) { return {v.data(), v.data() + v.size()}; }

bool is_ball(const BodySpec& spec) { return std::holds_alternative<BallSpec>(spec); }

/// Inclusive range of i accepted by an experiment.
std::pair<int, int> i_range(const std::string& experiment, int n) {
  if (experiment == "ball-fixed-point" || experiment == "radon-check" || experiment == "busemann-scan") {
    return {1, n - 1};
  }
  if (experiment == "css-monotone") return {1, 1};
  return {1, n - 2};
}

bool needs_dim3(const std::string& experiment) {
  return experiment == "css-run" || experiment == "css-monotone" || experiment == "iterate-steiner";
}

Quadrature quadrature_for(const ExperimentConfig& cfg) {
  return Quadrature{cfg.grid.mc_nodes > 0 ? SphereGrid::monte_carlo(cfg.n, cfg.grid.mc_nodes, cfg.seed)
                                          : SphereGrid::lat_lon(cfg.grid.lat, cfg.grid.lon),
                    cfg.subsphere_m, Rng(cfg.seed, 0x7261646f6eULL)};
}

Vec direction_for(const ExperimentConfig& cfg) {
  if (cfg.direction.size() == static_cast<Eigen::Index>(cfg.n)) return cfg.direction;
  Vec u = Vec::Zero(cfg.n);
  u[cfg.n - 1] = 1.0;
  return u;
}

std::vector<double> t_values(int count) {
  std::vector<double> t;
  for (int k = 0; k < count; ++k) t.push_back(static_cast<double>(k) / (count - 1));
  return t;
}

json contract_json(const Contract& c) {
  return {{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"relation", c.relation}, {"passed", c.passed}};
}

json body_list(const std::vector<BodySpec>& bodies) {
  json out = json::array();
  for (const BodySpec& b : bodies) out.push_back(describe(b));
  return out;
}

// --- experiments -----------------------------------------------------------

ExperimentResult ball_fixed_point(const ExperimentConfig& cfg) {
  const Quadrature q = quadrature_for(cfg);
  const StarBody body = catalog_body(cfg.body, cfg.n);
  const double r = std::get<BallSpec>(cfg.body).r;
  const bool top = cfg.i == cfg.n - 1;
  const double w = unit_ball_volume(cfg.n - 1);

  ExperimentResult out;
  out.trace = FunctionalTrace("order", {"c_star_l2", "residual_l2", "c_star_sup", "residual_sup", "c_expected"});
  json rows = json::array();
  for (int order : {1, 2}) {
    const ResidualReport l2 = fixed_point_residual(body, cfg.i, order, NormKind::l2, q, top);
    const ResidualReport sup = fixed_point_residual(body, cfg.i, order, NormKind::sup, q, top);
    // I_i B(r) = r^i omega_{n-1} B, hence c = r^{i-1} omega_{n-1} and
    // c = r^{i^2-1} omega_{n-1}^{i+1} for the square.
    const double expected = order == 1 ? std::pow(r, cfg.i - 1) * w
                                       : std::pow(r, cfg.i * cfg.i - 1) * std::pow(w, cfg.i + 1);
    out.trace.add_row(order, {l2.c_star, l2.residual_rel, sup.c_star, sup.residual_rel, expected});
    rows.push_back({{"order", order},
                    {"c_expected", expected},
                    {"l2", {{"c_star", l2.c_star}, {"residual_rel", l2.residual_rel}, {"norm_kind", "L2"}}},
                    {"sup", {{"c_star", sup.c_star}, {"residual_rel", sup.residual_rel}, {"norm_kind", "sup"}}}});
    const std::string tag = "order" + std::to_string(order);
    out.contracts.push_back(at_most(tag + "_residual_l2", l2.residual_rel, 1e-8));
    out.contracts.push_back(at_most(tag + "_residual_sup", sup.residual_rel, 1e-8));
    out.contracts.push_back(at_most(tag + "_c_star_rel_error", std::abs(l2.c_star - expected) / expected, 1e-8));
  }
  out.report = {{"residuals", rows}};
  out.plot_columns = {"residual_l2", "residual_sup"};
  return out;
}

ExperimentResult radon_check(const ExperimentConfig& cfg) {
  ExperimentResult out;
  out.trace = FunctionalTrace("case", {"value", "expected", "rel_error"});
  const double w = unit_ball_volume(cfg.n - 1);
  const Rng stream(cfg.seed, 0x7261646f6eULL);
  Rng directions(cfg.seed, 1);
  int row = 0;
  double worst_ball = 0.0;
  double worst_z = 0.0;
  for (double r : {0.5, 1.0, 2.0}) {
    const SphereFunction f = radial_power(make_ball(cfg.n, r), cfg.i);
    const double expected = std::pow(r, cfg.i) * w;
    for (int k = 0; k < 8; ++k) {
      const Vec u = sample_sphere(directions, cfg.n);
      const RadonEstimate e = radon_estimate(f, u, cfg.subsphere_m, stream);
      const double value = e.value / (cfg.n - 1);
      const double rel = std::abs(value - expected) / expected;
      worst_ball = std::max(worst_ball, rel);
      if (e.std_error > 0.0) worst_z = std::max(worst_z, std::abs(value - expected) * (cfg.n - 1) / e.std_error);
      out.trace.add_row(row++, {value, expected, rel});
    }
  }
  if (cfg.n == 3) {
    out.contracts.push_back(at_most("ball_constant_rel_error", worst_ball, 1e-10));
  } else {
    // Constant integrands make every subsphere average exact up to rounding.
    out.contracts.push_back(at_most("ball_constant_rel_error", worst_ball, 1e-10));
    out.contracts.push_back(at_most("ball_constant_stderr_multiple", worst_z, 3.0));
  }
  json report = {{"ball_constant_max_rel_error", worst_ball}};

  if (cfg.n == 3) {
    const SphereGrid grid = cfg.grid.mc_nodes > 0 ? SphereGrid::monte_carlo(3, cfg.grid.mc_nodes, cfg.seed)
                                                  : SphereGrid::lat_lon(cfg.grid.lat, cfg.grid.lon);
    Rng pairs(cfg.seed, 2);
    double worst_defect = 0.0;
    for (int k = 0; k < 10; ++k) {
      const SphereFunction f = random_smooth_function(pairs);
      const SphereFunction g = random_smooth_function(pairs);
      const double defect = self_adjointness_defect(f, g, grid, cfg.subsphere_m);
      worst_defect = std::max(worst_defect, defect);
      out.trace.add_row(row++, {defect, 0.0, defect});
    }
    out.contracts.push_back(at_most("self_adjointness_defect", worst_defect, 1e-8));
    report["self_adjointness_max_defect"] = worst_defect;

    json eigen = json::array();
    for (int l : {0, 2, 4}) {
      const double expected = 2.0 * std::numbers::pi * legendre_p(l, 0.0);
      const double value = funk_eigenvalue(l, cfg.subsphere_m, grid);
      const double err = std::abs(value - expected);
      out.trace.add_row(row++, {value, expected, err / std::abs(expected)});
      out.contracts.push_back(at_most("funk_eigenvalue_l" + std::to_string(l), err, 1e-8));
      eigen.push_back({{"l", l}, {"value", value}, {"expected", expected}});
    }
    report["funk_eigenvalues"] = eigen;
  }
  out.report = report;
  out.plot_columns = {"rel_error"};
  return out;
}

ExperimentResult bp_verify(const ExperimentConfig& cfg) {
  const StarBody body = catalog_body(cfg.body, cfg.n);
  const Quadrature q = quadrature_for(cfg);
  const double quadrature = dual_volume(intersection_body(body, cfg.i, q.subsphere_m, q.rng), cfg.i + 1, q.grid);
  const McEstimate e = mc_V(body, cfg.i, cfg.samples, cfg.blocks, Rng(cfg.seed));

  ExperimentResult out;
  out.trace = FunctionalTrace("block", {"block_mean"});
  for (std::size_t b = 0; b < e.block_means.size(); ++b) {
    if (std::isfinite(e.block_means[b])) out.trace.add_row(static_cast<double>(b), {e.block_means[b]});
  }
  out.report = {{"estimate", e.estimate},
                {"stderr", e.std_error},
                {"blocks", e.blocks},
                {"samples", e.samples},
                {"seed", e.seed},
                {"method", e.method},
                {"warning", e.warning},
                {"block_average", e.block_average},
                {"quadrature", quadrature},
                {"body", describe(cfg.body)}};
  out.contracts.push_back(at_most("abs_diff_over_stderr", std::abs(e.estimate - quadrature) / e.std_error, 3.0));
  out.contracts.push_back(at_most("relative_stderr", e.std_error / e.estimate, 0.02));
  out.plot_columns = {"block_mean"};
  return out;
}

ExperimentResult css_run(const ExperimentConfig& cfg) {
  const StarBody body = catalog_body(cfg.body, 3);
  const Vec u = direction_for(cfg);
  const Quadrature q = quadrature_for(cfg);
  const FiberGrid fibers = FiberGrid::covering(body, u, cfg.fiber_count);
  const double before = dual_volume(body, 3, q.grid);
  const bool kinked = std::holds_alternative<CubeSpec>(cfg.body);

  ExperimentResult out;
  out.trace = FunctionalTrace("t", {"volume", "volume_drift", "ray_violations"});
  out.trace.add_row(0.0, {before, 0.0, 0.0});
  double worst = 0.0;
  int violations = 0;
  for (double t : t_values(cfg.t_grid)) {
    if (t == 0.0) continue;
    const CssResult r = css_flow(body, u, t, fibers, q.grid);
    const double after = dual_volume(r.body, 3, q.grid);
    const double drift = std::abs(after - before) / before;
    worst = std::max(worst, drift);
    violations += r.ray_violations;
    out.trace.add_row(t, {after, drift, static_cast<double>(r.ray_violations)});
  }
  out.contracts.push_back(at_most("max_volume_drift", worst, kinked ? 1e-2 : 1e-3));
  out.contracts.push_back(at_most("ray_violations", violations, 0.0));
  out.report = {{"body", describe(cfg.body)}, {"direction", from_vec(u)}, {"max_volume_drift", worst}};
  out.plot_columns = {"volume_drift"};
  return out;
}

ExperimentResult css_monotone(const ExperimentConfig& cfg) {
  const StarBody body = catalog_body(cfg.body, 3);
  const Vec u = direction_for(cfg);
  const Quadrature q = quadrature_for(cfg);
  ExperimentResult out;
  out.trace = css_monotonicity_trace(body, cfg.i, u, t_values(cfg.t_grid), cfg.fiber_count, q);
  const std::vector<double> target = out.trace.column("target");
  const std::vector<double> conserved = out.trace.column("dual_volume");
  double worst_drop = 0.0;
  for (std::size_t k = 0; k + 1 < target.size(); ++k) {
    worst_drop = std::max(worst_drop, (target[k] - target[k + 1]) / target[0]);
  }
  double worst_dev = 0.0;
  for (double v : conserved) worst_dev = std::max(worst_dev, std::abs(v - conserved[0]) / conserved[0]);
  out.contracts.push_back(at_most("max_relative_decrease", worst_drop, 1e-4));
  out.contracts.push_back(at_most("conserved_dual_volume_deviation", worst_dev, 2e-3));
  out.report = {{"body", describe(cfg.body)},
                {"direction", from_vec(u)},
                {"increase", (target.back() - target.front()) / target.front()}};
  out.plot_columns = {"target"};
  return out;
}

ExperimentResult busemann(const ExperimentConfig& cfg) {
  const std::vector<BodySpec> bodies = cfg.bodies.empty() ? default_catalog(cfg.n) : cfg.bodies;
  const Quadrature q = quadrature_for(cfg);
  ExperimentResult out;
  out.trace = busemann_scan(bodies, cfg.n, cfg.i, q);
  const double bound = busemann_bound(cfg.n, cfg.i);
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < bodies.size(); ++k) {
    const double ratio = out.trace.value(k, "ratio");
    worst_excess = std::max(worst_excess, ratio - bound);
    if (is_ball(bodies[k])) {
      out.contracts.push_back(at_most("ball_gap[" + std::to_string(k) + "]", std::abs(ratio - bound), 1e-8));
    } else {
      out.contracts.push_back(at_least("margin[" + std::to_string(k) + "]", bound - ratio, 1e-3));
    }
  }
  out.contracts.push_back(at_most("max_ratio_minus_bound", worst_excess, 1e-6));
  out.report = {{"bodies", body_list(bodies)}, {"bound", bound}};
  out.plot_columns = {"ratio", "bound"};
  return out;
}

ExperimentResult fixed_point_scan(const ExperimentConfig& cfg) {
  const std::vector<BodySpec> bodies = cfg.bodies.empty() ? default_catalog(cfg.n) : cfg.bodies;
  const Quadrature q = quadrature_for(cfg);
  ExperimentResult out;
  out.trace = FunctionalTrace("body", {"c_star", "residual_rel"});
  for (std::size_t k = 0; k < bodies.size(); ++k) {
    const ResidualReport r = fixed_point_residual(catalog_body(bodies[k], cfg.n), cfg.i, 2, NormKind::l2, q);
    out.trace.add_row(static_cast<double>(k), {r.c_star, r.residual_rel});
    const std::string tag = "residual[" + std::to_string(k) + "]";
    out.contracts.push_back(is_ball(bodies[k]) ? at_most(tag, r.residual_rel, 1e-8) : at_least(tag, r.residual_rel, 1e-3));
  }
  out.report = {{"bodies", body_list(bodies)}, {"order", 2}, {"norm_kind", "L2"}};
  out.plot_columns = {"residual_rel"};
  return out;
}

ExperimentResult iterate_intersection_run(const ExperimentConfig& cfg) {
  const StarBody body = catalog_body(cfg.body, cfg.n);
  const Quadrature q = quadrature_for(cfg);
  ExperimentResult out;
  out.trace = iterate_intersection(body, cfg.i, cfg.steps > 0 ? cfg.steps : 8, q);
  const std::vector<double> dist = out.trace.column("sup_distance");
  const std::vector<double> dv = out.trace.column("dual_volume");
  double worst_dev = 0.0;
  for (double v : dv) worst_dev = std::max(worst_dev, std::abs(v - dv[0]) / dv[0]);
  out.contracts.push_back(at_most("final_minus_initial_sup_distance", dist.back() - dist.front(), 1e-9));
  out.contracts.push_back(at_most("dual_volume_deviation", worst_dev, 1e-6));
  out.report = {{"body", describe(cfg.body)}, {"initial_sup_distance", dist.front()}, {"final_sup_distance", dist.back()}};
  out.plot_columns = {"sup_distance", "residual"};
  return out;
}

ExperimentResult iterate_steiner_run(const ExperimentConfig& cfg) {
  const StarBody body = catalog_body(cfg.body, 3);
  const Quadrature q = quadrature_for(cfg);
  SteinerOptions options;
  options.max_steps = cfg.steps > 0 ? cfg.steps : 50;
  options.fiber_count = cfg.fiber_count;
  ExperimentResult out;
  out.trace = iterate_steiner(body, Rng(cfg.seed), q.grid, options);
  const std::vector<double> dist = out.trace.column("sup_distance");
  const std::vector<double> drift = out.trace.column("volume_drift");
  out.contracts.push_back(at_most("final_sup_distance", dist.back(), options.stop_dist));
  out.contracts.push_back(at_most("max_volume_drift", *std::max_element(drift.begin(), drift.end()), 5e-3));
  out.report = {{"body", describe(cfg.body)},
                {"steps", static_cast<int>(out.trace.size()) - 1},
                {"final_sup_distance", dist.back()}};
  out.plot_columns = {"sup_distance"};
  return out;
}

// --- persistence -----------------------------------------------------------

std::string utc_stamp(std::chrono::system_clock::time_point when, bool compact) {
  const std::time_t t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, compact ? "%Y%m%dT%H%M%SZ" : "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"ball-fixed-point", "radon-check",      "bp-verify",
                                              "css-run",          "css-monotone",     "busemann-scan",
                                              "fixed-point-scan", "iterate-intersection", "iterate-steiner"};
  return names;
}

Contract at_most(std::string name, double value, double bound) {
  return {std::move(name), value, bound, "<=", std::isfinite(value) && value <= bound};
}

Contract at_least(std::string name, double value, double bound) {
  return {std::move(name), value, bound, ">=", std::isfinite(value) && value >= bound};
}

bool ExperimentResult::passed() const {
  return std::all_of(contracts.begin(), contracts.end(), [](const Contract& c) { return c.passed; });
}

json body_to_json(const BodySpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BallSpec>) {
          return {{"kind", "ball"}, {"params", {{"r", s.r}}}};
        } else if constexpr (std::is_same_v<T, EllipsoidSpec>) {
          return {{"kind", "ellipsoid"}, {"params", {{"axes", s.axes}}}};
        } else if constexpr (std::is_same_v<T, PerturbedBallSpec>) {
          return {{"kind", "perturbed_ball"}, {"params", {{"r", s.r}, {"l", s.l}, {"m", s.m}, {"eps", s.eps}}}};
        } else if constexpr (std::is_same_v<T, ShiftedBallSpec>) {
          return {{"kind", "shifted_ball"}, {"params", {{"center", s.center}, {"r", s.r}}}};
        } else {
          return {{"kind", "cube"}, {"params", {{"h", s.h}}}};
        }
      },
      spec);
}

BodySpec body_from_json(const json& doc, const std::string& pointer, int n) {
  if (!doc.is_object()) throw ConfigError(pointer, "expected an object");
  reject_unknown(doc, {"kind", "params"}, pointer);
  if (!doc.contains("kind") || !doc.at("kind").is_string()) throw ConfigError(child(pointer, "kind"), "expected a string");
  const std::string kind = doc.at("kind").get<std::string>();
  const json params = doc.value("params", json::object());
  const std::string where = child(pointer, "params");
  if (!params.is_object()) throw ConfigError(where, "expected an object");

  BodySpec spec;
  if (kind == "ball") {
    reject_unknown(params, {"r"}, where);
    spec = BallSpec{get_number(params, "r", 1.0, where, true)};
  } else if (kind == "ellipsoid") {
    reject_unknown(params, {"axes"}, where);
    const std::vector<double> axes = get_vector(params, "axes", where, static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < axes.size(); ++k) {
      if (!(axes[k] > 0.0)) throw ConfigError(child(where, "axes") + "/" + std::to_string(k), "must be positive");
    }
    spec = EllipsoidSpec{axes};
  } else if (kind == "perturbed_ball") {
    reject_unknown(params, {"r", "l", "m", "eps"}, where);
    if (n != 3) throw ConfigError(child(pointer, "kind"), "perturbed_ball exists only for n = 3");
    PerturbedBallSpec p;
    p.r = get_number(params, "r", 1.0, where, true);
    p.l = static_cast<int>(get_integer(params, "l", 2, 0, 12, where));
    p.m = static_cast<int>(get_integer(params, "m", 0, -p.l, p.l, where));
    p.eps = get_number(params, "eps", 0.1, where, false);
    if (std::abs(p.eps) * real_sph_harm_bound(p.l) >= 1.0) {
      throw ConfigError(child(where, "eps"), "too large: radial function would not stay positive");
    }
    spec = p;
  } else if (kind == "shifted_ball") {
    reject_unknown(params, {"center", "r"}, where);
    ShiftedBallSpec s;
    s.center = get_vector(params, "center", where, static_cast<std::size_t>(n));
    s.r = get_number(params, "r", 1.0, where, true);
    if (to_vec(s.center).norm() >= s.r) throw ConfigError(child(where, "center"), "origin must be interior (|c| < r)");
    spec = s;
  } else if (kind == "cube") {
    reject_unknown(params, {"h"}, where);
    spec = CubeSpec{get_number(params, "h", 1.0, where, true)};
  } else {
    throw ConfigError(child(pointer, "kind"), "unknown body kind '" + kind + "'");
  }
  return spec;
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "expected an object");
  reject_unknown(doc, kTopKeys, "");

  ExperimentConfig cfg;
  if (!doc.contains("experiment") || !doc.at("experiment").is_string()) {
    throw ConfigError("/experiment", "required string");
  }
  cfg.experiment = doc.at("experiment").get<std::string>();
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end()) {
    throw ConfigError("/experiment", "unknown experiment '" + cfg.experiment + "'");
  }

  cfg.n = static_cast<int>(get_integer(doc, "n", 3, 3, 12, ""));
  if (needs_dim3(cfg.experiment) && cfg.n != 3) throw ConfigError("/n", cfg.experiment + " needs n = 3");
  cfg.i = static_cast<int>(get_integer(doc, "i", 1, std::numeric_limits<int>::min(), std::numeric_limits<int>::max(), ""));
  const auto [lo, hi] = i_range(cfg.experiment, cfg.n);
  if (cfg.i < lo || cfg.i > hi) {
    throw ConfigError("/i", "i out of range for " + cfg.experiment + " with n = " + std::to_string(cfg.n) + " (allowed " +
                                std::to_string(lo) + ".." + std::to_string(hi) + ")");
  }

  if (doc.contains("body")) cfg.body = body_from_json(doc.at("body"), "/body", cfg.n);
  if (cfg.experiment == "ball-fixed-point" && !is_ball(cfg.body)) {
    throw ConfigError("/body/kind", "ball-fixed-point needs a ball");
  }

  if (cfg.n != 3) cfg.grid = GridSpec{0, 0, 20000};
  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    if (!g.is_object()) throw ConfigError("/grid", "expected an object");
    reject_unknown(g, {"lat", "lon", "mc_nodes"}, "/grid");
    const bool latlon = g.contains("lat") || g.contains("lon");
    if (latlon && g.contains("mc_nodes")) throw ConfigError("/grid", "give either lat/lon or mc_nodes");
    if (latlon) {
      if (cfg.n != 3) throw ConfigError("/grid", "lat-lon grids exist only for n = 3");
      cfg.grid = GridSpec{static_cast<int>(get_integer(g, "lat", 128, 2, 4096, "/grid")),
                          static_cast<int>(get_integer(g, "lon", 256, 3, 8192, "/grid")), 0};
    } else if (g.contains("mc_nodes")) {
      cfg.grid = GridSpec{0, 0, static_cast<int>(get_integer(g, "mc_nodes", 20000, 100, 10000000, "/grid"))};
    }
  }

  cfg.subsphere_m = static_cast<int>(get_integer(doc, "subsphere_m", kDefaultSubsphereNodes, 8, 1 << 20, ""));
  cfg.blocks = static_cast<int>(get_integer(doc, "blocks", 64, 8, 1 << 16, ""));
  cfg.samples = get_integer(doc, "samples", 1000000, 1, std::numeric_limits<std::int64_t>::max(), "");
  if (cfg.samples < cfg.blocks) throw ConfigError("/samples", "must be at least blocks");
  cfg.seed = static_cast<std::uint64_t>(get_integer(doc, "seed", 1, 0, std::numeric_limits<std::int64_t>::max(), ""));
  cfg.t_grid = static_cast<int>(get_integer(doc, "t_grid", 5, 2, 1000, ""));
  if (doc.contains("out_dir")) {
    if (!doc.at("out_dir").is_string() || doc.at("out_dir").get<std::string>().empty()) {
      throw ConfigError("/out_dir", "expected a non-empty string");
    }
    cfg.out_dir = doc.at("out_dir").get<std::string>();
  }
  if (doc.contains("direction")) {
    const Vec u = to_vec(get_vector(doc, "direction", "", static_cast<std::size_t>(cfg.n)));
    if (!(u.norm() > 1e-12)) throw ConfigError("/direction", "must be non-zero");
    cfg.direction = u / u.norm();
  }
  cfg.fiber_count = static_cast<int>(get_integer(doc, "fiber_count", 128, 2, 8192, ""));
  cfg.steps = static_cast<int>(get_integer(doc, "steps", 0, 1, 100000, ""));
  if (doc.contains("bodies")) {
    const json& list = doc.at("bodies");
    if (!list.is_array() || list.empty()) throw ConfigError("/bodies", "expected a non-empty array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      cfg.bodies.push_back(body_from_json(list[k], "/bodies/" + std::to_string(k), cfg.n));
    }
  }
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json grid = cfg.grid.mc_nodes > 0 ? json{{"mc_nodes", cfg.grid.mc_nodes}}
                                    : json{{"lat", cfg.grid.lat}, {"lon", cfg.grid.lon}};
  json out = {{"experiment", cfg.experiment}, {"n", cfg.n},
              {"i", cfg.i},                   {"body", body_to_json(cfg.body)},
              {"grid", grid},                 {"subsphere_m", cfg.subsphere_m},
              {"samples", cfg.samples},       {"blocks", cfg.blocks},
              {"seed", cfg.seed},             {"t_grid", cfg.t_grid},
              {"out_dir", cfg.out_dir},       {"fiber_count", cfg.fiber_count}};
  if (cfg.direction.size() > 0) out["direction"] = from_vec(cfg.direction);
  if (cfg.steps > 0) out["steps"] = cfg.steps;
  if (!cfg.bodies.empty()) {
    out["bodies"] = json::array();
    for (const BodySpec& b : cfg.bodies) out["bodies"].push_back(body_to_json(b));
  }
  return out;
}

std::vector<BodySpec> default_catalog(int n) {
  auto axes = [n](double last) {
    std::vector<double> a(n, 1.0);
    a.back() = last;
    return a;
  };
  auto shift = [n](double s) {
    std::vector<double> c(n, 0.0);
    c.back() = s;
    return c;
  };
  std::vector<BodySpec> out{BallSpec{1.0},
                            EllipsoidSpec{axes(1.2)},
                            EllipsoidSpec{axes(1.5)},
                            EllipsoidSpec{axes(2.0)},
                            ShiftedBallSpec{shift(0.2), 1.0},
                            ShiftedBallSpec{shift(0.3), 1.0}};
  if (n == 3) {
    out.push_back(PerturbedBallSpec{1.0, 2, 0, 0.05});
    out.push_back(PerturbedBallSpec{1.0, 2, 0, 0.1});
  }
  out.push_back(CubeSpec{1.0});
  return out;
}

SphereFunction random_smooth_function(Rng& rng) {
  Vec a(3);
  for (int k = 0; k < 3; ++k) a[k] = 2.0 * rng.uniform() - 1.0;
  // c[p][q][r] multiplies x^p y^q z^r, p + q + r <= 3.
  std::array<std::array<std::array<double, 4>, 4>, 4> c{};
  for (int p = 0; p <= 3; ++p) {
    for (int q = 0; p + q <= 3; ++q) {
      for (int r = 0; p + q + r <= 3; ++r) c[p][q][r] = rng.normal() / (1.0 + p + q + r);
    }
  }
  return SphereFunction{3,
                        [a, c](const Vec& u) {
                          double v = std::exp(a.dot(u));
                          double xp = 1.0;
                          for (int p = 0; p <= 3; ++p, xp *= u[0]) {
                            double yq = 1.0;
                            for (int q = 0; p + q <= 3; ++q, yq *= u[1]) {
                              double zr = 1.0;
                              for (int r = 0; p + q + r <= 3; ++r, zr *= u[2]) v += c[p][q][r] * xp * yq * zr;
                            }
                          }
                          return v;
                        },
                        Parity::none};
}

ExperimentResult evaluate_experiment(const ExperimentConfig& cfg) {
  const std::string& e = cfg.experiment;
  if (e == "ball-fixed-point") return ball_fixed_point(cfg);
  if (e == "radon-check") return radon_check(cfg);
  if (e == "bp-verify") return bp_verify(cfg);
  if (e == "css-run") return css_run(cfg);
  if (e == "css-monotone") return css_monotone(cfg);
  if (e == "busemann-scan") return busemann(cfg);
  if (e == "fixed-point-scan") return fixed_point_scan(cfg);
  if (e == "iterate-intersection") return iterate_intersection_run(cfg);
  if (e == "iterate-steiner") return iterate_steiner_run(cfg);
  throw std::invalid_argument("unknown experiment " + e);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < length; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}

std::string render_svg(const FunctionalTrace& trace, const std::vector<std::string>& columns, const std::string& title,
                       const std::string& timestamp) {
  constexpr double width = 640.0;
  constexpr double height = 400.0;
  constexpr double margin = 60.0;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (!trace.empty()) {
    x0 = trace.indices().front();
    x1 = trace.indices().back();
    y0 = std::numeric_limits<double>::infinity();
    y1 = -y0;
    for (const std::string& c : columns) {
      for (double v : trace.column(c)) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
      }
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5 * std::max(1.0, std::abs(y0));
    y1 = y0 + std::max(1.0, std::abs(y0));
  }
  auto px = [&](double x) { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<desc>generated " << timestamp << "</desc>\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  svg << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin << "\" height=\""
      << height - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << margin << "\" y=\"" << height - margin + 18 << "\" font-size=\"12\">" << format_number(x0)
      << "</text>\n";
  svg << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 18
      << "\" text-anchor=\"end\" font-size=\"12\">" << format_number(x1) << "</text>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 16 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << trace.index_name() << "</text>\n";
  svg << "<text x=\"" << margin - 6 << "\" y=\"" << height - margin << "\" text-anchor=\"end\" font-size=\"12\">"
      << format_number(y0) << "</text>\n";
  svg << "<text x=\"" << margin - 6 << "\" y=\"" << margin + 12 << "\" text-anchor=\"end\" font-size=\"12\">"
      << format_number(y1) << "</text>\n";
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const char* color = colors[c % 4];
    const std::vector<double> ys = trace.column(columns[c]);
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < ys.size(); ++k) {
      svg << (k ? " " : "") << format_number(px(trace.index(k))) << "," << format_number(py(ys[k]));
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << width - margin - 4 << "\" y=\"" << margin + 16 + 14 * c
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << columns[c] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".startomo.lock") {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) throw LockError("output directory is locked by another run: " + path_.string());
  const std::string pid = std::to_string(::getpid()) + "\n";
  if (::write(fd, pid.data(), pid.size()) < 0) {
    // the lock is held regardless of the pid note
  }
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

json RunManifest::to_json() const {
  json files = json::array();
  for (const ArtifactRecord& a : artifacts) files.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  return {{"config", config},   {"started", started},          {"finished", finished},
          {"artifacts", files}, {"tool_version", tool_version}, {"passed", passed}};
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  const fs::path out_dir(cfg.out_dir);
  DirectoryLock lock(out_dir);

  RunManifest manifest;
  manifest.config = to_json(cfg);
  const auto start = std::chrono::system_clock::now();
  manifest.started = utc_stamp(start, false);

  const std::string base = cfg.experiment + "-" + std::to_string(cfg.seed) + "-" + utc_stamp(start, true);
  fs::path run_dir = out_dir / base;
  for (int k = 2; fs::exists(run_dir); ++k) run_dir = out_dir / (base + "-" + std::to_string(k));
  fs::create_directories(run_dir);
  manifest.run_dir = run_dir;

  auto emit = [&](const std::string& name, const std::string& content) {
    write_file(run_dir / name, content);
    manifest.artifacts.push_back({name, sha256_hex(content), content.size()});
  };

  json report;
  std::vector<Contract> contracts;
  try {
    ExperimentResult result = evaluate_experiment(cfg);
    contracts = result.contracts;
    report = result.report;
    emit("trace.csv", result.trace.to_csv());
    emit("plot.svg", render_svg(result.trace, result.plot_columns, cfg.experiment + " " + describe(cfg.body),
                                manifest.started));
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    contracts.push_back({"completed", 0.0, 1.0, ">=", false});
    report["error"] = e.what();
  }

  json contract_list = json::array();
  for (const Contract& c : contracts) contract_list.push_back(contract_json(c));
  report["experiment"] = cfg.experiment;
  report["contracts"] = contract_list;
  manifest.passed = std::all_of(contracts.begin(), contracts.end(), [](const Contract& c) { return c.passed; });
  report["passed"] = manifest.passed;
  emit("report.json", report.dump(2) + "\n");

  if (!manifest.passed) {
    json violated = json::array();
    for (const Contract& c : contracts) {
      if (!c.passed) violated.push_back(contract_json(c));
    }
    json failure = {{"experiment", cfg.experiment}, {"violated", violated}};
    if (report.contains("error")) failure["error"] = report["error"];
    emit("failure.json", failure.dump(2) + "\n");
  }

  manifest.finished = utc_stamp(std::chrono::system_clock::now(), false);
  write_file(run_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

bool verify_manifest(const fs::path& manifest_path, std::string* problem) {
  auto fail = [problem](const std::string& message) {
    if (problem) *problem = message;
    return false;
  };
  json doc;
  try {
    doc = json::parse(read_file(manifest_path));
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  if (!doc.contains("artifacts") || !doc.at("artifacts").is_array()) return fail("manifest lists no artifacts");
  const fs::path dir = manifest_path.parent_path();
  for (const json& a : doc.at("artifacts")) {
    const std::string name = a.value("path", "");
    const fs::path file = dir / name;
    if (name.empty() || !fs::exists(file)) return fail("missing artifact " + name);
    if (sha256_hex(read_file(file)) != a.value("sha256", "")) return fail("digest mismatch for " + name);
  }
  return true;
}

}  // namespace startomo
