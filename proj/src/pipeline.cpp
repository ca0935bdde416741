#include "exitdim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <string>

namespace exitdim {

const char* const kCodeVersion = "exitdim 1.0.0";

namespace {

// ------------------------------------------------------------- stage tagging

template <class F>
auto stage(const std::string& name, const std::string& params, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("stage " + name + " [" + params + "]: " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("stage " + name + " [" + params + "]: " + e.what());
  } catch (const std::exception& e) {
    throw InvalidArgument("stage " + name + " [" + params + "]: " + e.what());
  }
}

std::string grid_desc(const std::vector<double>& g) {
  if (g.empty()) return "empty";
  return fmt_g17(g.front()) + ".." + fmt_g17(g.back()) + " (" + std::to_string(g.size()) + ")";
}

Id nearest_point(const FiniteSpace& space, const std::vector<double>& x) {
  Id best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Id i = 0; i < space.size(); ++i) {
    double d = space.distance_to(i, x.data());
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// -------------------------------------------------------- config (de)seriale

int expected_center_dim(const FractalSpec& spec) {
  switch (spec.kind) {
    case SpaceKind::euclidean_grid: return spec.dim;
    case SpaceKind::path_graph: return 1;
    default: return 2;
  }
}

const char* measure_name(MeasureMode m) {
  return m == MeasureMode::uniform_cell ? "uniform_cell" : "diameter_power";
}

MeasureMode measure_from_name(const std::string& s) {
  if (s == "uniform_cell") return MeasureMode::uniform_cell;
  if (s == "diameter_power") return MeasureMode::diameter_power;
  throw InvalidArgument("config field measure: unknown mode " + s);
}

[[noreturn]] void bad_field(const std::string& name, const std::string& why) {
  throw InvalidArgument("config field " + name + ": " + why);
}

void require_known_keys(const Json& j, const std::set<std::string>& known,
                        const std::string& where) {
  for (const auto& item : j.items())
    if (known.find(item.key()) == known.end())
      bad_field(where.empty() ? item.key() : where + "." + item.key(), "unknown key");
}

double get_num(const Json& j, const std::string& name, double fallback, bool* present = nullptr) {
  auto it = j.find(name);
  if (present) *present = it != j.end();
  if (it == j.end()) return fallback;
  if (!it->is_number()) bad_field(name, "must be a number");
  return it->get<double>();
}

void check_decreasing_grid(const std::vector<double>& g, const std::string& name) {
  if (g.empty()) bad_field(name, "must not be empty");
  for (double v : g)
    if (!(v > 0) || !std::isfinite(v)) bad_field(name, "entries must be positive finite");
  for (std::size_t i = 1; i < g.size(); ++i)
    if (!(g[i] < g[i - 1])) bad_field(name, "must be strictly decreasing");
}

void validate_centers(const RunConfig& c, int dim) {
  if (c.centers.empty()) bad_field("centers", "must not be empty");
  for (std::size_t i = 0; i < c.centers.size(); ++i)
    if (static_cast<int>(c.centers[i].size()) != dim)
      bad_field("centers", "entry " + std::to_string(i) + " needs " + std::to_string(dim) +
                               " coordinates");
}

void validate_measure_kind(MeasureMode m, SpaceKind kind) {
  if (m == MeasureMode::diameter_power &&
      (kind == SpaceKind::euclidean_grid || kind == SpaceKind::path_graph))
    bad_field("measure", "diameter_power needs a fractal space (grid cells have zero diameter)");
}

// Space-independent knobs.
void validate_knobs(const RunConfig& c) {
  if (c.net_seeds < 1) bad_field("net_seeds", "must be at least 1");
  if (c.kernel_kinds.empty()) bad_field("kernel_kinds", "must not be empty");
  {
    std::set<KernelKind> seen;
    bool has_sweep = false;
    for (KernelKind k : c.kernel_kinds) {
      if (!seen.insert(k).second) bad_field("kernel_kinds", "duplicate kind");
      if (k != KernelKind::ball_p) has_sweep = true;
    }
    if (!has_sweep)
      bad_field("kernel_kinds", "need at least one sweepable kind (the rescaled "
                                "walk is derived from the measured exponent)");
  }
  check_decreasing_grid(c.R_grid, "R_grid");
  check_decreasing_grid(c.scale_grid, "scale_grid");
  if (c.scale_grid.size() < 3) bad_field("scale_grid", "need at least 3 scales for fits");
  if (!(c.tolerances.r2_min > 0 && c.tolerances.r2_min <= 1))
    bad_field("tolerances.r2_min", "must lie in (0, 1]");
  if (!(c.tolerances.row_sum_max > 0)) bad_field("tolerances.row_sum_max", "must be positive");
  if (!(c.tolerances.balance_max > 0)) bad_field("tolerances.balance_max", "must be positive");
  if (c.output_dir.empty()) bad_field("output_dir", "must not be empty");
}

void validate_config(const RunConfig& c) {
  validate_knobs(c);
  validate_centers(c, expected_center_dim(c.space));
  validate_measure_kind(c.measure, c.space.kind);
}

// ------------------------------------------------------- report (de)seriale

Json regularity_to_json(const RegularityReport& r) {
  Json j;
  j["c_est"] = r.c_est;
  j["worst_center"] = r.worst_center;
  j["worst_scale"] = r.worst_scale;
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    Json e;
    e["center"] = s.center;
    e["scale"] = s.scale;
    e["ratio"] = s.ratio;
    samples.push_back(std::move(e));
  }
  j["samples"] = std::move(samples);
  return j;
}

RegularityReport regularity_from_json(const Json& j) {
  RegularityReport r;
  r.c_est = j.at("c_est").get<double>();
  r.worst_center = j.at("worst_center").get<Id>();
  r.worst_scale = j.at("worst_scale").get<double>();
  for (const auto& e : j.at("samples"))
    r.samples.push_back({e.at("center").get<Id>(), e.at("scale").get<double>(),
                         e.at("ratio").get<double>()});
  return r;
}

}  // namespace

// ----------------------------------------------------------------- config io

Json config_to_json(const RunConfig& c) {
  Json j;
  Json sp;
  sp["kind"] = to_string(c.space.kind);
  sp["stage"] = c.space.stage;
  sp["p1"] = c.space.p1;
  sp["p2"] = c.space.p2;
  sp["dim"] = c.space.dim;
  sp["R"] = c.space.R;
  sp["h"] = c.space.h;
  sp["n"] = c.space.n;
  sp["point_cap"] = c.space.point_cap;
  j["space"] = std::move(sp);
  j["measure"] = measure_name(c.measure);
  j["net_seeds"] = c.net_seeds;
  Json kinds = Json::array();
  for (KernelKind k : c.kernel_kinds) kinds.push_back(to_string(k));
  j["kernel_kinds"] = std::move(kinds);
  j["centers"] = c.centers;
  j["R_grid"] = c.R_grid;
  j["scale_grid"] = c.scale_grid;
  Json tol;
  tol["r2_min"] = c.tolerances.r2_min;
  tol["row_sum_max"] = c.tolerances.row_sum_max;
  tol["balance_max"] = c.tolerances.balance_max;
  j["tolerances"] = std::move(tol);
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

RunConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a json object");
  require_known_keys(j, {"space", "measure", "net_seeds", "kernel_kinds", "centers", "R_grid",
                         "scale_grid", "tolerances", "output_dir", "seed"},
                     "");
  RunConfig c;

  auto sp = j.find("space");
  if (sp == j.end()) bad_field("space", "is required");
  require_known_keys(*sp, {"kind", "stage", "p1", "p2", "dim", "R", "h", "n", "point_cap"},
                     "space");
  if (sp->find("kind") == sp->end()) bad_field("space.kind", "is required");
  try {
    c.space.kind = space_kind_from_string(sp->at("kind").get<std::string>());
  } catch (const InvalidArgument& e) {
    bad_field("space.kind", e.what());
  }
  c.space.stage = static_cast<int>(get_num(*sp, "stage", c.space.stage));
  c.space.p1 = get_num(*sp, "p1", c.space.p1);
  c.space.p2 = get_num(*sp, "p2", c.space.p2);
  c.space.dim = static_cast<int>(get_num(*sp, "dim", c.space.dim));
  c.space.R = get_num(*sp, "R", c.space.R);
  c.space.h = get_num(*sp, "h", c.space.h);
  c.space.n = static_cast<long>(get_num(*sp, "n", static_cast<double>(c.space.n)));
  c.space.point_cap =
      static_cast<std::int64_t>(get_num(*sp, "point_cap", static_cast<double>(c.space.point_cap)));

  if (auto it = j.find("measure"); it != j.end())
    c.measure = measure_from_name(it->get<std::string>());
  c.net_seeds = static_cast<int>(get_num(j, "net_seeds", c.net_seeds));
  if (auto it = j.find("kernel_kinds"); it != j.end()) {
    if (!it->is_array()) bad_field("kernel_kinds", "must be an array of kind names");
    c.kernel_kinds.clear();
    for (const auto& v : *it) {
      try {
        c.kernel_kinds.push_back(kernel_kind_from_string(v.get<std::string>()));
      } catch (const InvalidArgument& e) {
        bad_field("kernel_kinds", e.what());
      }
    }
  }
  auto ct = j.find("centers");
  if (ct == j.end()) bad_field("centers", "is required");
  if (!ct->is_array()) bad_field("centers", "must be an array of coordinate arrays");
  for (const auto& v : *ct) {
    if (!v.is_array()) bad_field("centers", "must be an array of coordinate arrays");
    c.centers.push_back(v.get<std::vector<double>>());
  }
  auto rg = j.find("R_grid");
  if (rg == j.end()) bad_field("R_grid", "is required");
  c.R_grid = rg->get<std::vector<double>>();
  auto sg = j.find("scale_grid");
  if (sg == j.end()) bad_field("scale_grid", "is required");
  c.scale_grid = sg->get<std::vector<double>>();
  if (auto it = j.find("tolerances"); it != j.end()) {
    require_known_keys(*it, {"r2_min", "row_sum_max", "balance_max"}, "tolerances");
    c.tolerances.r2_min = get_num(*it, "r2_min", c.tolerances.r2_min);
    c.tolerances.row_sum_max = get_num(*it, "row_sum_max", c.tolerances.row_sum_max);
    c.tolerances.balance_max = get_num(*it, "balance_max", c.tolerances.balance_max);
  }
  if (auto it = j.find("output_dir"); it != j.end()) c.output_dir = it->get<std::string>();
  if (auto it = j.find("seed"); it != j.end()) c.seed = it->get<std::uint64_t>();

  validate_config(c);
  return c;
}

std::string config_hash_hex(const RunConfig& config) {
  std::uint64_t h = fnv1a64(canonical_json(config_to_json(config)));
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ----------------------------------------------------------------- bundle io

Json bundle_to_json(const ResultBundle& b) {
  Json j;
  j["code_version"] = b.code_version;
  j["config_hash"] = b.config_hash;
  j["config"] = config_to_json(b.config);
  j["space_points"] = b.space_points;
  j["total_mass"] = b.total_mass;
  Json kinds = Json::array();
  for (KernelKind k : b.swept_kinds) kinds.push_back(to_string(k));
  j["swept_kinds"] = std::move(kinds);

  Json centers = Json::array();
  for (const auto& c : b.centers) {
    Json e;
    e["center"] = c.center;
    e["anchor"] = c.anchor;
    e["alpha"] = fit_to_json(c.alpha);
    e["alpha_series"] = series_to_json(c.alpha_series);
    Json betas = Json::array();
    for (const auto& be : c.beta) {
      Json bj;
      bj["R_used"] = be.R_used;
      bj["fit"] = fit_to_json(be.fit);
      bj["series"] = series_to_json(be.series);
      bj["ok"] = be.ok;
      betas.push_back(std::move(bj));
    }
    e["beta"] = std::move(betas);
    centers.push_back(std::move(e));
  }
  j["centers"] = std::move(centers);

  Json reg;
  reg["ahlfors"] = regularity_to_json(b.ahlfors);
  reg["time"] = regularity_to_json(b.time_reg);
  j["regularity"] = std::move(reg);

  Json kc;
  kc["row_sum"] = b.kernel_checks.row_sum;
  kc["balance"] = b.kernel_checks.balance;
  kc["p_scale"] = b.kernel_checks.p_scale;
  kc["beta_used"] = b.kernel_checks.beta_used;
  j["kernel_checks"] = std::move(kc);

  Json fk;
  fk["c_min"] = b.faber_krahn.c_min;
  fk["c_max"] = b.faber_krahn.c_max;
  Json table = Json::array();
  for (const auto& t : b.faber_krahn.table) {
    Json e;
    e["center"] = t.center;
    e["R"] = t.R;
    e["scale"] = t.scale;
    e["lambda1"] = t.lambda1;
    e["e_plus"] = t.e_plus;
    e["product"] = t.product;
    table.push_back(std::move(e));
  }
  fk["table"] = std::move(table);
  j["faber_krahn"] = std::move(fk);

  Json tent = Json::array();
  for (const auto& t : b.tent) {
    Json e;
    e["center"] = t.center;
    e["R"] = t.R;
    e["r"] = t.r;
    e["lambda1"] = t.bound.lambda1;
    e["quotient"] = t.bound.quotient;
    e["bound"] = t.bound.bound;
    tent.push_back(std::move(e));
  }
  j["tent"] = std::move(tent);
  return j;
}

ResultBundle bundle_from_json(const Json& j) {
  ResultBundle b;
  try {
    b.code_version = j.at("code_version").get<std::string>();
    b.config_hash = j.at("config_hash").get<std::string>();
    b.config = config_from_json(j.at("config"));
    b.space_points = j.at("space_points").get<Id>();
    b.total_mass = j.at("total_mass").get<double>();
    for (const auto& k : j.at("swept_kinds"))
      b.swept_kinds.push_back(kernel_kind_from_string(k.get<std::string>()));
    for (const auto& e : j.at("centers")) {
      CenterResult c;
      c.center = e.at("center").get<std::vector<double>>();
      c.anchor = e.at("anchor").get<Id>();
      c.alpha = fit_from_json(e.at("alpha"));
      c.alpha_series = series_from_json(e.at("alpha_series"));
      for (const auto& bj : e.at("beta")) {
        LocalBetaEntry be;
        be.center = c.anchor;
        be.R_used = bj.at("R_used").get<double>();
        be.fit = fit_from_json(bj.at("fit"));
        be.series = series_from_json(bj.at("series"));
        be.ok = bj.at("ok").get<bool>();
        c.beta.push_back(std::move(be));
      }
      b.centers.push_back(std::move(c));
    }
    b.ahlfors = regularity_from_json(j.at("regularity").at("ahlfors"));
    b.time_reg = regularity_from_json(j.at("regularity").at("time"));
    const Json& kc = j.at("kernel_checks");
    b.kernel_checks = {kc.at("row_sum").get<double>(), kc.at("balance").get<double>(),
                       kc.at("p_scale").get<double>(), kc.at("beta_used").get<double>()};
    const Json& fk = j.at("faber_krahn");
    b.faber_krahn.c_min = fk.at("c_min").get<double>();
    b.faber_krahn.c_max = fk.at("c_max").get<double>();
    for (const auto& e : fk.at("table"))
      b.faber_krahn.table.push_back({e.at("center").get<Id>(), e.at("R").get<double>(),
                                     e.at("scale").get<double>(), e.at("lambda1").get<double>(),
                                     e.at("e_plus").get<double>(), e.at("product").get<double>()});
    for (const auto& e : j.at("tent")) {
      TentEntry t;
      t.center = e.at("center").get<Id>();
      t.R = e.at("R").get<double>();
      t.r = e.at("r").get<double>();
      t.bound = {e.at("lambda1").get<double>(), e.at("quotient").get<double>(),
                 e.at("bound").get<double>()};
      b.tent.push_back(t);
    }
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed result bundle: ") + e.what());
  }
  return b;
}

// ------------------------------------------------------------------ exports

namespace {

std::string series_table_csv(const ResultBundle& b) {
  std::string out = "center,scale,e_plus,ball_mass\n";
  for (std::size_t k = 0; k < b.centers.size(); ++k) {
    const CenterResult& c = b.centers[k];
    const ScaleSeries* beta_series = c.beta.empty() || !c.beta.front().ok
                                         ? nullptr
                                         : &c.beta.front().series;
    for (const auto& [scale, mass] : c.alpha_series.pairs) {
      double e_plus = std::numeric_limits<double>::quiet_NaN();
      if (beta_series)
        for (const auto& [s, v] : beta_series->pairs)
          if (s == scale) {
            e_plus = v;
            break;
          }
      out += std::to_string(k);
      out += ',';
      out += fmt_g17(scale);
      out += ',';
      out += fmt_g17(e_plus);
      out += ',';
      out += fmt_g17(mass);
      out += '\n';
    }
  }
  return out;
}

}  // namespace

void export_bundle(const ResultBundle& bundle, const std::string& format,
                   const std::string& path) {
  if (format == "json")
    write_json_file(path, bundle_to_json(bundle));
  else if (format == "csv")
    write_text_file(path, series_table_csv(bundle));
  else
    throw InvalidArgument("export format must be json or csv, got: " + format);
}

// ------------------------------------------------------------------ pipeline

ResultBundle run_sweep(FiniteSpace& space, const RunConfig& config, bool reassign_measure) {
  validate_knobs(config);
  validate_centers(config, space.dim);
  if (reassign_measure) validate_measure_kind(config.measure, space.kind);

  ResultBundle bundle;
  bundle.code_version = kCodeVersion;
  bundle.config = config;
  bundle.config_hash = config_hash_hex(config);

  if (reassign_measure) {
    stage("measure", measure_name(config.measure), [&] {
      if (config.measure == MeasureMode::diameter_power) {
        ScalarField q = local_dimension_field(space);
        assign_measure(space, MeasureMode::diameter_power, &q);
      } else {
        assign_measure(space, MeasureMode::uniform_cell);
      }
      return 0;
    });
  }
  bundle.space_points = space.size();
  bundle.total_mass = space.total_mass;

  std::vector<Id> anchors(config.centers.size());
  for (std::size_t i = 0; i < config.centers.size(); ++i)
    anchors[i] = nearest_point(space, config.centers[i]);

  for (KernelKind k : config.kernel_kinds)
    if (k != KernelKind::ball_p) bundle.swept_kinds.push_back(k);

  // ---- local volume exponents (alpha) and measure regularity
  bundle.centers.resize(config.centers.size());
  stage("alpha", "radii " + grid_desc(config.scale_grid), [&] {
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      CenterResult& c = bundle.centers[i];
      c.center = config.centers[i];
      c.anchor = anchors[i];
      c.alpha_series = ball_mass_series(space, anchors[i], config.scale_grid);
      ExponentFit fit = fit_loglog_slope(c.alpha_series);
      fit.slope = -fit.slope;  // mass ~ r^alpha; report alpha itself
      c.alpha = fit;
    }
    return 0;
  });

  stage("ahlfors_regularity", "radii " + grid_desc(config.scale_grid), [&] {
    double mean = 0;
    for (const auto& c : bundle.centers) mean += c.alpha.slope;
    mean /= static_cast<double>(bundle.centers.size());
    ScalarField model;
    model.label = "alpha";
    model.values.assign(static_cast<std::size_t>(space.size()), mean);
    for (const auto& c : bundle.centers)
      model.values[static_cast<std::size_t>(c.anchor)] = c.alpha.slope;
    bundle.ahlfors = check_ahlfors(space, model, anchors, config.scale_grid);
    return 0;
  });

  // ---- walk-kernel exit sweeps (beta)
  for (std::size_t ki = 0; ki < bundle.swept_kinds.size(); ++ki) {
    KernelKind kind = bundle.swept_kinds[ki];
    stage("beta", std::string(to_string(kind)) + " R " + grid_desc(config.R_grid) + " scales " +
                      grid_desc(config.scale_grid),
          [&] {
            LocalBetaField lbf = local_beta_field(space, anchors, config.R_grid,
                                                  config.scale_grid, kind, config.net_seeds,
                                                  config.tolerances.r2_min,
                                                  config.seed + 101 * (ki + 1));
            for (std::size_t i = 0; i < anchors.size(); ++i)
              bundle.centers[i].beta.push_back(lbf.table[i]);
            return 0;
          });
  }

  // ---- rescaled walk at the measured exponent, exactness checks
  ScalarField beta_field;
  beta_field.label = "beta";
  stage("p_kernel_checks", "scale " + fmt_g17(config.scale_grid.back()), [&] {
    std::vector<double> fits;
    for (const auto& c : bundle.centers)
      if (!c.beta.empty() && c.beta.front().ok) fits.push_back(c.beta.front().fit.slope);
    if (fits.empty())
      throw NumericError("no local walk-dimension fit reached r2_min; cannot pick the "
                         "rescaling exponent");
    std::sort(fits.begin(), fits.end());
    double beta_hat = fits[fits.size() / 2];
    beta_field.values.assign(static_cast<std::size_t>(space.size()), beta_hat);

    const double r = config.scale_grid.back();
    WalkKernel w = ball_kernel_w(space, r);
    WalkKernel p = ball_kernel_p(space, r, beta_field);
    bundle.kernel_checks.row_sum = std::max(row_sum_violation(w), row_sum_violation(p));
    bundle.kernel_checks.balance = detailed_balance_violation(p);
    bundle.kernel_checks.p_scale = r;
    bundle.kernel_checks.beta_used = beta_hat;
    if (bundle.kernel_checks.row_sum > config.tolerances.row_sum_max)
      throw NumericError("kernel row sums deviate by " + fmt_g17(bundle.kernel_checks.row_sum));
    if (bundle.kernel_checks.balance > config.tolerances.balance_max)
      throw NumericError("rescaled walk breaks detailed balance by " +
                         fmt_g17(bundle.kernel_checks.balance));
    return 0;
  });

  stage("time_regularity", "R " + grid_desc(config.R_grid), [&] {
    bundle.time_reg =
        check_time_regularity(space, beta_field, anchors, config.R_grid, config.scale_grid);
    return 0;
  });

  // ---- bottom eigenvalue / exit time products and tent bounds
  KernelKind fk_kind = bundle.swept_kinds.front();
  for (KernelKind k : bundle.swept_kinds)
    if (k == KernelKind::ball_w) fk_kind = k;
  stage("faber_krahn", std::string(to_string(fk_kind)) + " R " + grid_desc(config.R_grid) +
                           " scales " + grid_desc(config.scale_grid),
        [&] {
          bundle.faber_krahn = faber_krahn_constant(space, anchors, config.R_grid,
                                                    config.scale_grid, fk_kind, config.seed);
          return 0;
        });

  stage("tent_bound", "r " + fmt_g17(config.scale_grid.back()), [&] {
    const double r = config.scale_grid.back();
    for (Id a : anchors)
      for (double R : config.R_grid) {
        if (R < 4 * r) continue;  // tent profile needs a few jump widths
        TentEntry t;
        t.center = a;
        t.R = R;
        t.r = r;
        t.bound = tent_rayleigh(space, a, R, r);
        bundle.tent.push_back(t);
      }
    return 0;
  });

  return bundle;
}

ResultBundle run_pipeline(const RunConfig& config) {
  validate_config(config);

  const std::string space_desc = std::string(to_string(config.space.kind)) +
                                 " stage=" + std::to_string(config.space.stage);
  FiniteSpace space = stage("build_space", space_desc, [&] { return build_fractal(config.space); });

  ResultBundle bundle = run_sweep(space, config, /*reassign_measure=*/true);

  stage("export", config.output_dir, [&] {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) throw InvalidArgument("cannot create output directory: " + config.output_dir);
    export_bundle(bundle, "json", config.output_dir + "/results.json");
    export_bundle(bundle, "csv", config.output_dir + "/series.csv");
    return 0;
  });

  return bundle;
}

}  // namespace exitdim

