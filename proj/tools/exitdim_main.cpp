// Command-line front end: builds spaces, nets, graphs, and walk kernels as
// on-disk artifacts, solves exit problems, sweeps exponents, reports spectral
// diagnostics, runs the full pipeline, and runs the acceptance battery.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 numeric check failure.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "exitdim/io.hpp"
#include "exitdim/pipeline.hpp"
#include "exitdim/spectral.hpp"
#include "exitdim/verify.hpp"

namespace ed = exitdim;

namespace {

// ---------------------------------------------------------------- utilities

[[noreturn]] void bad(const std::string& msg) { throw ed::InvalidArgument(msg); }

std::vector<double> parse_coords(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      bad("cannot parse coordinate list '" + s + "' (expected comma-separated numbers)");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// Space generator spec: the same keys as the run config's `space` section,
// plus an optional top-level `measure`.
ed::Json space_doc_defaults() {
  ed::Json j = ed::Json::object();
  return j;
}

ed::FractalSpec space_spec_from_doc(const ed::Json& j) {
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    if (k != "kind" && k != "stage" && k != "p1" && k != "p2" && k != "dim" && k != "R" &&
        k != "h" && k != "n" && k != "point_cap" && k != "measure") {
      bad("space spec field " + k + ": unknown key");
    }
  }
  if (!j.contains("kind")) bad("space spec field kind: is required");
  ed::FractalSpec spec;
  spec.kind = ed::space_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("stage")) spec.stage = j.at("stage").get<int>();
  if (j.contains("p1")) spec.p1 = j.at("p1").get<double>();
  if (j.contains("p2")) spec.p2 = j.at("p2").get<double>();
  if (j.contains("dim")) spec.dim = j.at("dim").get<int>();
  if (j.contains("R")) spec.R = j.at("R").get<double>();
  if (j.contains("h")) spec.h = j.at("h").get<double>();
  if (j.contains("n")) spec.n = j.at("n").get<long>();
  if (j.contains("point_cap")) spec.point_cap = j.at("point_cap").get<std::int64_t>();
  return spec;
}

ed::Json space_spec_to_doc(const ed::FractalSpec& spec) {
  ed::Json sp;
  sp["kind"] = ed::to_string(spec.kind);
  sp["stage"] = spec.stage;
  sp["p1"] = spec.p1;
  sp["p2"] = spec.p2;
  sp["dim"] = spec.dim;
  sp["R"] = spec.R;
  sp["h"] = spec.h;
  sp["n"] = spec.n;
  sp["point_cap"] = spec.point_cap;
  return sp;
}

void apply_measure(ed::FiniteSpace& space, const std::string& name) {
  if (name == "uniform_cell") {
    ed::assign_measure(space, ed::MeasureMode::uniform_cell);
  } else if (name == "diameter_power") {
    if (space.kind == ed::SpaceKind::euclidean_grid || space.kind == ed::SpaceKind::path_graph)
      bad("measure: diameter_power needs a fractal space (grid cells have zero diameter)");
    ed::ScalarField q = ed::local_dimension_field(space);
    ed::assign_measure(space, ed::MeasureMode::diameter_power, &q);
  } else {
    bad("measure: unknown mode " + name + " (uniform_cell or diameter_power)");
  }
}

// Snaps a point id to the nearest kernel state, announcing the move.
ed::Id snap_center(const ed::FiniteSpace& space, const ed::WalkKernel& kernel, ed::Id center) {
  if (center < 0 || center >= space.size())
    bad("center " + std::to_string(center) + " is not a point id (space has " +
        std::to_string(space.size()) + " points)");
  if (kernel.local_index(center) >= 0) return center;
  ed::Id snapped = ed::nearest_state(space, kernel, center);
  std::printf("center %d is not a kernel state; snapped to nearest state %d (distance %g)\n",
              center, snapped, space.distance(center, snapped));
  return snapped;
}

// ------------------------------------------------------------- subcommands

struct GenerateArgs {
  std::string spec_path, out, export_csv;
  std::string kind, measure;
  std::optional<int> stage, dim;
  std::optional<double> p1, p2, R, h;
  std::optional<long> n;
  std::optional<std::int64_t> point_cap;
};

int cmd_generate(const GenerateArgs& a) {
  ed::Json doc = a.spec_path.empty() ? space_doc_defaults() : ed::read_json_file(a.spec_path);
  if (!doc.is_object()) bad("space spec must be a json object");
  if (!a.kind.empty()) doc["kind"] = a.kind;
  if (a.stage) doc["stage"] = *a.stage;
  if (a.p1) doc["p1"] = *a.p1;
  if (a.p2) doc["p2"] = *a.p2;
  if (a.dim) doc["dim"] = *a.dim;
  if (a.R) doc["R"] = *a.R;
  if (a.h) doc["h"] = *a.h;
  if (a.n) doc["n"] = *a.n;
  if (a.point_cap) doc["point_cap"] = *a.point_cap;
  if (!a.measure.empty()) doc["measure"] = a.measure;

  ed::FractalSpec spec = space_spec_from_doc(doc);
  ed::FiniteSpace space = ed::build_fractal(spec);
  if (doc.contains("measure")) apply_measure(space, doc.at("measure").get<std::string>());

  ed::write_space(a.out, space);
  if (!a.export_csv.empty()) ed::write_points_csv(a.export_csv, space);
  std::printf("space: kind=%s stage=%d points=%d total_mass=%s measure=%s -> %s\n",
              ed::to_string(space.kind), space.stage, space.size(),
              ed::fmt_g17(space.total_mass).c_str(), space.measure.c_str(), a.out.c_str());
  return 0;
}

struct NetArgs {
  std::string space_path, out;
  double epsilon = 0.0;
  std::uint64_t seed = 1;
};

int cmd_net(const NetArgs& a) {
  ed::FiniteSpace space = ed::read_space(a.space_path);
  ed::NetIndex net = ed::build_epsilon_net(space, a.epsilon, a.seed);
  ed::write_json_file(a.out, ed::net_to_json(net));
  ed::NetReport rep = ed::verify_net(space, net);
  std::printf("net: epsilon=%s seed=%llu members=%zu separation=%s covering=%s ok=%s -> %s\n",
              ed::fmt_g17(net.epsilon).c_str(), static_cast<unsigned long long>(net.seed),
              net.members.size(), ed::fmt_g17(rep.min_separation).c_str(),
              ed::fmt_g17(rep.max_covering_radius).c_str(), rep.ok ? "yes" : "no", a.out.c_str());
  return 0;
}

struct GraphArgs {
  std::string space_path, net_path, out;
  std::string kind = "proximity";
  double rho = 2.0, eta = 1.0;
  bool no_self_loops = false;
};

int cmd_graph(const GraphArgs& a) {
  ed::FiniteSpace space = ed::read_space(a.space_path);
  ed::NetIndex net = ed::net_from_json(ed::read_json_file(a.net_path));
  ed::ApproxGraph graph;
  if (a.kind == "proximity") {
    graph = ed::proximity_graph(space, net, a.rho, !a.no_self_loops);
  } else if (a.kind == "covering") {
    graph = ed::covering_graph(space, net, a.eta, !a.no_self_loops);
  } else {
    bad("graph kind must be proximity or covering, got: " + a.kind);
  }
  ed::write_json_file(a.out, ed::graph_to_json(graph));
  ed::GraphStats st = ed::graph_stats(graph);
  std::printf("graph: kind=%s param=%s vertices=%d edges=%zu degree=[%d,%d] connected=%s -> %s\n",
              a.kind.c_str(), ed::fmt_g17(graph.param).c_str(), graph.vertex_count(),
              st.edge_count, st.min_degree, st.max_degree,
              ed::is_connected(graph) ? "yes" : "no", a.out.c_str());
  return 0;
}

struct KernelArgs {
  std::string space_path, graph_path, out, dump_csv;
  std::string kind;
  std::optional<double> scale;
  std::optional<double> beta;
  std::uint64_t net_seed = 1;
};

int cmd_kernel(const KernelArgs& a) {
  ed::FiniteSpace space = ed::read_space(a.space_path);
  ed::KernelKind kind = ed::kernel_kind_from_string(a.kind);
  ed::ScalarField beta_field;
  const ed::ScalarField* beta = nullptr;
  if (a.beta) {
    beta_field.label = "beta";
    beta_field.values.assign(static_cast<std::size_t>(space.size()), *a.beta);
    beta = &beta_field;
  }
  ed::WalkKernel kernel;
  if (!a.graph_path.empty()) {
    if (kind != ed::KernelKind::graph_symmetrized && kind != ed::KernelKind::graph_uniform)
      bad("--graph only applies to graph kernel kinds");
    ed::ApproxGraph graph = ed::graph_from_json(ed::read_json_file(a.graph_path));
    kernel = ed::graph_kernel(space, graph, kind == ed::KernelKind::graph_symmetrized);
  } else {
    if (!a.scale) bad("--scale is required unless --graph provides the approximation");
    if (kind == ed::KernelKind::ball_p && !beta)
      bad("kernel kind ball_p needs --beta (constant exponent field)");
    kernel = ed::scale_kernel(space, kind, *a.scale, a.net_seed, beta);
  }
  ed::write_kernel(a.out, kernel);
  if (!a.dump_csv.empty()) ed::write_kernel_csv(a.dump_csv, kernel);
  std::printf("kernel: kind=%s r=%s states=%d entries=%zu row_sum_dev=%s -> %s\n",
              ed::to_string(kernel.kind), ed::fmt_g17(kernel.r).c_str(), kernel.state_count(),
              kernel.val.size(), ed::fmt_g17(ed::row_sum_violation(kernel)).c_str(),
              a.out.c_str());
  return 0;
}

struct ExitArgs {
  std::string space_path, kernel_path, out;
  ed::Id center = -1;
  double radius = 0.0;
  bool open = false;
  std::int64_t mc = 0;
  std::uint64_t seed = 1;
};

int cmd_exit(const ExitArgs& a) {
  ed::FiniteSpace space = ed::read_space(a.space_path);
  ed::WalkKernel kernel = ed::read_kernel(a.kernel_path);
  ed::Id center = snap_center(space, kernel, a.center);
  ed::BallRegion region = ed::ball_region(space, kernel, center, a.radius, !a.open);
  ed::ExitField field = ed::solve_exit_times(kernel, region);
  ed::write_exit_csv(a.out, kernel, field);
  std::printf("exit: center=%d radius=%s states=%d E+=%s residual=%s solver=%s -> %s\n", center,
              ed::fmt_g17(a.radius).c_str(), region.size(),
              ed::fmt_g17(ed::exit_time_max(field)).c_str(), ed::fmt_g17(field.residual).c_str(),
              field.solver.c_str(), a.out.c_str());
  if (a.mc > 0) {
    ed::MonteCarloExit mc = ed::monte_carlo_exit(kernel, region, center, a.mc, a.seed);
    double phi = field.values[kernel.local_index(center)];
    double z = mc.stderr_mean > 0 ? std::abs(mc.mean - phi) / mc.stderr_mean : 0.0;
    std::printf("mc: paths=%lld seed=%llu mean=%s stderr=%s solve_phi=%s z=%s\n",
                static_cast<long long>(mc.n_paths), static_cast<unsigned long long>(a.seed),
                ed::fmt_g17(mc.mean).c_str(), ed::fmt_g17(mc.stderr_mean).c_str(),
                ed::fmt_g17(phi).c_str(), ed::fmt_g17(z).c_str());
  }
  return 0;
}

// Shared flag mirror for the sweep knobs of `run` and `exponents`.
struct SweepFlags {
  std::string measure, output_dir;
  std::optional<int> net_seeds;
  std::vector<std::string> kernel_kinds;
  std::vector<std::string> centers;
  std::vector<double> R_grid, scale_grid;
  std::optional<double> r2_min, row_sum_max, balance_max;
  std::optional<std::uint64_t> seed;
};

void add_sweep_flags(CLI::App* cmd, SweepFlags& f) {
  cmd->add_option("--measure", f.measure, "Measure mode: uniform_cell or diameter_power");
  cmd->add_option("--net-seeds", f.net_seeds, "Independent nets per scale for graph kernels");
  cmd->add_option("--kernel-kinds", f.kernel_kinds,
                  "Kernel kinds to sweep (comma separated: ball_w,ball_p,graph_symmetrized,"
                  "graph_uniform)")
      ->delimiter(',');
  cmd->add_option("--center", f.centers,
                  "Center coordinates 'x' or 'x,y' (repeat for several centers; replaces the "
                  "config list)");
  cmd->add_option("--R-grid", f.R_grid, "Exit-ball radii, strictly decreasing (comma separated)")
      ->delimiter(',');
  cmd->add_option("--scale-grid", f.scale_grid,
                  "Kernel scales / mass radii, strictly decreasing (comma separated)")
      ->delimiter(',');
  cmd->add_option("--r2-min", f.r2_min, "Fit quality required for a local beta entry");
  cmd->add_option("--row-sum-max", f.row_sum_max, "Kernel row-sum deviation tolerance");
  cmd->add_option("--balance-max", f.balance_max, "Detailed-balance violation tolerance");
  cmd->add_option("--seed", f.seed, "Base seed for nets and sweeps");
}

void merge_sweep_flags(ed::Json& doc, const SweepFlags& f) {
  if (!f.measure.empty()) doc["measure"] = f.measure;
  if (f.net_seeds) doc["net_seeds"] = *f.net_seeds;
  if (!f.kernel_kinds.empty()) doc["kernel_kinds"] = f.kernel_kinds;
  if (!f.centers.empty()) {
    ed::Json centers = ed::Json::array();
    for (const std::string& c : f.centers) centers.push_back(parse_coords(c));
    doc["centers"] = std::move(centers);
  }
  if (!f.R_grid.empty()) doc["R_grid"] = f.R_grid;
  if (!f.scale_grid.empty()) doc["scale_grid"] = f.scale_grid;
  if (f.r2_min) doc["tolerances"]["r2_min"] = *f.r2_min;
  if (f.row_sum_max) doc["tolerances"]["row_sum_max"] = *f.row_sum_max;
  if (f.balance_max) doc["tolerances"]["balance_max"] = *f.balance_max;
  if (!f.output_dir.empty()) doc["output_dir"] = f.output_dir;
  if (f.seed) doc["seed"] = *f.seed;
}

void print_bundle_summary(const ed::ResultBundle& b) {
  std::printf("points=%d total_mass=%s config_hash=%s\n", b.space_points,
              ed::fmt_g17(b.total_mass).c_str(), b.config_hash.c_str());
  for (std::size_t i = 0; i < b.centers.size(); ++i) {
    const ed::CenterResult& c = b.centers[i];
    std::printf("center %zu (anchor %d): alpha=%.6g", i, c.anchor, c.alpha.slope);
    for (std::size_t k = 0; k < c.beta.size(); ++k) {
      const ed::LocalBetaEntry& e = c.beta[k];
      if (e.ok)
        std::printf("  beta[%s]=%.6g (R=%g, r2=%.4f)",
                    ed::to_string(b.swept_kinds[k]), e.fit.slope, e.R_used, e.fit.r_squared);
      else
        std::printf("  beta[%s]=unresolved", ed::to_string(b.swept_kinds[k]));
    }
    std::printf("\n");
  }
  std::printf("regularity: mass c_est=%.6g time c_est=%.6g\n", b.ahlfors.c_est, b.time_reg.c_est);
  std::printf("kernel checks: row_sum=%.3g balance=%.3g (beta_hat=%.6g at r=%g)\n",
              b.kernel_checks.row_sum, b.kernel_checks.balance, b.kernel_checks.beta_used,
              b.kernel_checks.p_scale);
  std::printf("gap products: %zu balls, lambda1*E+ in [%.6g, %.6g]; tent entries=%zu\n",
              b.faber_krahn.table.size(), b.faber_krahn.c_min, b.faber_krahn.c_max,
              b.tent.size());
}

struct ExponentsArgs {
  std::string space_path, config_path, out, plot_data;
  SweepFlags flags;
};

int cmd_exponents(const ExponentsArgs& a) {
  ed::FiniteSpace space = ed::read_space(a.space_path);
  ed::Json doc = a.config_path.empty() ? ed::Json::object() : ed::read_json_file(a.config_path);
  if (!doc.is_object()) bad("config must be a json object");
  if (doc.contains("space"))
    bad("config field space: not allowed here; the space comes from --space");
  bool reassign = doc.contains("measure") || !a.flags.measure.empty();
  merge_sweep_flags(doc, a.flags);
  doc["space"] = space_spec_to_doc(ed::spec_of(space));
  ed::RunConfig config = ed::config_from_json(doc);

  ed::ResultBundle bundle = ed::run_sweep(space, config, reassign);
  ed::export_bundle(bundle, "json", a.out);
  if (!a.plot_data.empty()) ed::export_bundle(bundle, "csv", a.plot_data);
  print_bundle_summary(bundle);
  std::printf("results -> %s%s%s\n", a.out.c_str(), a.plot_data.empty() ? "" : ", series -> ",
              a.plot_data.c_str());
  return 0;
}

struct RunArgs {
  std::string config_path;
  // space flag mirrors
  std::string kind;
  std::optional<int> stage, dim;
  std::optional<double> p1, p2, R, h;
  std::optional<long> n;
  std::optional<std::int64_t> point_cap;
  SweepFlags flags;
};

int cmd_run(const RunArgs& a) {
  ed::Json doc = a.config_path.empty() ? ed::Json::object() : ed::read_json_file(a.config_path);
  if (!doc.is_object()) bad("config must be a json object");
  if (!doc.contains("space")) doc["space"] = ed::Json::object();
  if (!a.kind.empty()) doc["space"]["kind"] = a.kind;
  if (a.stage) doc["space"]["stage"] = *a.stage;
  if (a.p1) doc["space"]["p1"] = *a.p1;
  if (a.p2) doc["space"]["p2"] = *a.p2;
  if (a.dim) doc["space"]["dim"] = *a.dim;
  if (a.R) doc["space"]["R"] = *a.R;
  if (a.h) doc["space"]["h"] = *a.h;
  if (a.n) doc["space"]["n"] = *a.n;
  if (a.point_cap) doc["space"]["point_cap"] = *a.point_cap;
  merge_sweep_flags(doc, a.flags);
  ed::RunConfig config = ed::config_from_json(doc);

  ed::ResultBundle bundle = ed::run_pipeline(config);
  print_bundle_summary(bundle);
  std::printf("results -> %s/results.json, series -> %s/series.csv\n",
              config.output_dir.c_str(), config.output_dir.c_str());
  return 0;
}

int cmd_verify(const std::string& report_path) {
  std::printf("acceptance battery (bounds pinned in code)\n");
  std::fflush(stdout);
  std::vector<ed::CriterionResult> results =
      ed::run_acceptance([](const ed::CriterionResult& r) {
        std::printf("%s  %-28s %7.1fs  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                    r.detail.c_str());
        std::fflush(stdout);
      });
  if (!report_path.empty()) {
    ed::Json j;
    ed::Json arr = ed::Json::array();
    for (const ed::CriterionResult& r : results) {
      ed::Json e;
      e["name"] = r.name;
      e["pass"] = r.pass;
      e["detail"] = r.detail;
      e["seconds"] = r.seconds;
      e["budget_seconds"] = r.budget_seconds;
      arr.push_back(std::move(e));
    }
    j["criteria"] = std::move(arr);
    ed::write_json_file(report_path, j);
  }
  int failed = 0;
  for (const ed::CriterionResult& r : results) failed += r.pass ? 0 : 1;
  if (failed > 0) {
    std::printf("%d of %zu criteria failed\n", failed, results.size());
    return 2;
  }
  std::printf("all %zu criteria passed\n", results.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete approximations of metric measure spaces: exit times, local "
               "dimensions, and walk exponents"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (sets EXITDIM_THREADS)");

  GenerateArgs gen;
  CLI::App* c_gen = app.add_subcommand("generate", "Build a space snapshot from a generator spec");
  c_gen->add_option("--spec", gen.spec_path, "Spec json (space keys + optional measure)");
  c_gen->add_option("--kind", gen.kind, "koch|gasket|carpet|vicsek|euclidean_grid|path_graph");
  c_gen->add_option("--stage", gen.stage, "Subdivision stage");
  c_gen->add_option("--p1", gen.p1, "First generator parameter");
  c_gen->add_option("--p2", gen.p2, "Second generator parameter");
  c_gen->add_option("--dim", gen.dim, "Grid dimension (1 or 2)");
  c_gen->add_option("--R", gen.R, "Grid domain radius of interest");
  c_gen->add_option("--mesh", gen.h, "Grid mesh width (config key: h)");
  c_gen->add_option("--n", gen.n, "Path vertex count (0..n)");
  c_gen->add_option("--point-cap", gen.point_cap, "Refuse to build more points than this");
  c_gen->add_option("--measure", gen.measure, "uniform_cell or diameter_power");
  c_gen->add_option("--out", gen.out, "Output space snapshot (binary)")->required();
  c_gen->add_option("--export-csv", gen.export_csv, "Also write id,x,y,weight,diameter csv");

  NetArgs net;
  CLI::App* c_net = app.add_subcommand("net", "Greedy maximal epsilon-net over a space");
  c_net->add_option("--space", net.space_path, "Space snapshot")->required();
  c_net->add_option("--epsilon", net.epsilon, "Separation / covering scale")->required();
  c_net->add_option("--seed", net.seed, "Scan-order shuffle seed");
  c_net->add_option("--out", net.out, "Output net json")->required();

  GraphArgs graph;
  CLI::App* c_graph = app.add_subcommand("graph", "Approximation graph over a net");
  c_graph->add_option("--space", graph.space_path, "Space snapshot")->required();
  c_graph->add_option("--net", graph.net_path, "Net json")->required();
  c_graph->add_option("--kind", graph.kind, "proximity or covering");
  c_graph->add_option("--rho", graph.rho, "Proximity factor: edge iff d < rho*eps");
  c_graph->add_option("--eta", graph.eta, "Covering factor: edge iff d < 2*eta*eps");
  c_graph->add_flag("--no-self-loops", graph.no_self_loops, "Drop self loops");
  c_graph->add_option("--out", graph.out, "Output graph json")->required();

  KernelArgs kern;
  CLI::App* c_kern = app.add_subcommand("kernel", "Walk kernel snapshot at one scale");
  c_kern->add_option("--space", kern.space_path, "Space snapshot")->required();
  c_kern->add_option("--kind", kern.kind, "ball_w|ball_p|graph_symmetrized|graph_uniform")
      ->required();
  c_kern->add_option("--scale", kern.scale, "Jump radius (ball kinds) or net scale (graph kinds)");
  c_kern->add_option("--graph", kern.graph_path, "Existing graph json (graph kinds only)");
  c_kern->add_option("--beta", kern.beta, "Constant walk exponent (required for ball_p)");
  c_kern->add_option("--net-seed", kern.net_seed, "Net seed for graph kinds built from --scale");
  c_kern->add_option("--out", kern.out, "Output kernel snapshot (binary)")->required();
  c_kern->add_option("--dump-csv", kern.dump_csv, "Also write row,col,value csv");

  ExitArgs exit_args;
  CLI::App* c_exit = app.add_subcommand("exit", "Mean exit times from a metric ball");
  c_exit->add_option("--space", exit_args.space_path, "Space snapshot")->required();
  c_exit->add_option("--kernel", exit_args.kernel_path, "Kernel snapshot")->required();
  c_exit->add_option("--center", exit_args.center, "Ball center (point id)")->required();
  c_exit->add_option("--radius", exit_args.radius, "Ball radius")->required();
  c_exit->add_flag("--open", exit_args.open, "Open ball (default closed)");
  c_exit->add_option("--mc", exit_args.mc, "Also sample this many Monte Carlo paths");
  c_exit->add_option("--seed", exit_args.seed, "Monte Carlo seed");
  c_exit->add_option("--out", exit_args.out, "Output id,phi csv")->required();

  ExponentsArgs exp_args;
  CLI::App* c_exp = app.add_subcommand("exponents", "Alpha/beta sweep on a space snapshot");
  c_exp->add_option("--space", exp_args.space_path, "Space snapshot")->required();
  c_exp->add_option("--config", exp_args.config_path, "Sweep config json (no space section)");
  add_sweep_flags(c_exp, exp_args.flags);
  c_exp->add_option("--out", exp_args.out, "Output results json")->required();
  c_exp->add_option("--plot-data", exp_args.plot_data, "Also write the per-center series csv");

  RunArgs run_args;
  CLI::App* c_run = app.add_subcommand("run", "Full pipeline from a single config");
  c_run->add_option("--config", run_args.config_path, "Run config json");
  c_run->add_option("--kind", run_args.kind, "Space kind override");
  c_run->add_option("--stage", run_args.stage, "Space stage override");
  c_run->add_option("--p1", run_args.p1, "Space p1 override");
  c_run->add_option("--p2", run_args.p2, "Space p2 override");
  c_run->add_option("--dim", run_args.dim, "Grid dimension override");
  c_run->add_option("--R", run_args.R, "Grid radius override");
  c_run->add_option("--mesh", run_args.h, "Grid mesh override (config key: h)");
  c_run->add_option("--n", run_args.n, "Path vertex count override");
  c_run->add_option("--point-cap", run_args.point_cap, "Point cap override");
  add_sweep_flags(c_run, run_args.flags);
  c_run->add_option("--output-dir", run_args.flags.output_dir,
                    "Directory for results.json and series.csv");

  std::string report_path;
  CLI::App* c_ver = app.add_subcommand("verify", "Run the acceptance battery");
  c_ver->add_option("--report", report_path, "Also write the battery results as json");

  struct SpectrumArgs {
    std::string space_path, kernel_path, out;
    ed::Id center = -1;
    double radius = 0.0;
  } spec_args;
  CLI::App* c_spec = app.add_subcommand("spectrum", "Killed-walk spectral diagnostics on a ball");
  c_spec->add_option("--space", spec_args.space_path, "Space snapshot")->required();
  c_spec->add_option("--kernel", spec_args.kernel_path, "Kernel snapshot")->required();
  c_spec->add_option("--center", spec_args.center, "Ball center (point id)")->required();
  c_spec->add_option("--radius", spec_args.radius, "Ball radius")->required();
  c_spec->add_option("--out", spec_args.out, "Output diagnostics json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (threads > 0) {
    setenv("EXITDIM_THREADS", std::to_string(threads).c_str(), 1);
  }

  try {
    if (c_gen->parsed()) return cmd_generate(gen);
    if (c_net->parsed()) return cmd_net(net);
    if (c_graph->parsed()) return cmd_graph(graph);
    if (c_kern->parsed()) return cmd_kernel(kern);
    if (c_exit->parsed()) return cmd_exit(exit_args);
    if (c_exp->parsed()) return cmd_exponents(exp_args);
    if (c_run->parsed()) return cmd_run(run_args);
    if (c_ver->parsed()) return cmd_verify(report_path);
    if (c_spec->parsed()) {
      ed::FiniteSpace space = ed::read_space(spec_args.space_path);
      ed::WalkKernel kernel = ed::read_kernel(spec_args.kernel_path);
      ed::Id center = snap_center(space, kernel, spec_args.center);
      ed::BallRegion region = ed::ball_region(space, kernel, center, spec_args.radius);
      ed::KilledOperator op = ed::killed_operator(kernel, region);
      double lambda1 = ed::bottom_eigenvalue(op);
      double radius = ed::spectral_radius_killed(op);
      ed::ExitField field = ed::solve_exit_times(kernel, region);
      double e_plus = ed::exit_time_max(field);
      ed::GreenMatrix green = ed::green_matrix(op);
      double sym = 0.0;
      ed::Id m = green.size();
      if (m <= 512) {
        for (ed::Id i = 0; i < m; ++i)
          for (ed::Id j = i + 1; j < m; ++j)
            sym = std::max(sym,
                           std::abs(green.green_symmetric(i, j) - green.green_symmetric(j, i)));
      } else {
        // All-pairs is quadratic in the region size; spot-check a fixed
        // deterministic sample instead.
        auto rng = ed::make_rng(2026, 0);
        std::uniform_int_distribution<ed::Id> pick(0, m - 1);
        for (int k = 0; k < 2000; ++k) {
          ed::Id i = pick(rng), j = pick(rng);
          if (i == j) continue;
          sym = std::max(sym,
                         std::abs(green.green_symmetric(i, j) - green.green_symmetric(j, i)));
        }
      }
      ed::Json out;
      out["center"] = center;
      out["radius"] = spec_args.radius;
      out["states"] = region.size();
      out["lambda1"] = lambda1;
      out["spectral_radius"] = radius;
      out["e_plus"] = e_plus;
      out["faber_krahn"] = lambda1 * e_plus;
      out["green_symmetry_violation"] = sym;
      ed::write_json_file(spec_args.out, out);
      std::printf(
          "spectrum: states=%d lambda1=%s spectral_radius=%s faber_krahn=%s green_sym=%s -> %s\n",
          region.size(), ed::fmt_g17(lambda1).c_str(), ed::fmt_g17(radius).c_str(),
          ed::fmt_g17(lambda1 * e_plus).c_str(), ed::fmt_g17(sym).c_str(),
          spec_args.out.c_str());
      return 0;
    }
  } catch (const ed::InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ed::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
