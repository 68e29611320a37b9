// vng: command-line front end for validation, solving, certification,
// dual conversion, horizon sweeps and example generation.
//
// Exit codes: 0 success, 1 validation or bound failure, 2 infeasible,
// degenerate or uncertified, 3 IO, schema or usage error.

#include "vng/horizon.hpp"
#include "vng/model_io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;
using namespace vng;

enum Exit : int { kOk = 0, kValidation = 1, kUncertified = 2, kIoSchema = 3 };

struct Common {
  std::optional<double> tol_flag;
  std::string json_path;
  double tol = kCertificationTolerance;
};

// Error carrying its exit code; every failure path funnels through it.
struct CommandFailure : std::runtime_error {
  int code;
  CommandFailure(int c, const std::string& m) : std::runtime_error(m), code(c) {}
};

void write_sidecar(const Common& common, json report, int code) {
  if (common.json_path.empty()) return;
  report["exit_code"] = code;
  write_json_file(common.json_path, report);
}

double resolve_tolerance(const Common& common) {
  if (common.tol_flag) {
    if (!(*common.tol_flag > 0.0)) throw CommandFailure(kIoSchema, "--tol must be positive");
    return *common.tol_flag;
  }
  if (const char* env = std::getenv("VNG_TOL")) {
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0.0)) throw CommandFailure(kIoSchema, "VNG_TOL is not a positive number");
    return v;
  }
  return kCertificationTolerance;
}

int model_error_code(const ModelError& e) { return e.kind() == ModelError::Kind::schema ? kIoSchema : kValidation; }

Model read_model(const std::string& path) {
  json doc = read_json_file(path);
  return parse_model(doc);
}

ResultDocument read_result(const std::string& path, const ScenarioTree& tree) {
  return load_results(read_json_file(path), tree);
}

void print_check(const char* name, const CheckReport& c) {
  std::cout << "  " << name << ": " << (c.ok ? "ok" : "FAILED") << " (worst residual " << c.worst_residual << ", "
            << c.checked << " checked)\n";
  for (std::size_t i = 0; i < c.violations.size() && i < 5; ++i) {
    std::cout << "    " << c.violations[i].what << " at time " << c.violations[i].time << " residual "
              << c.violations[i].residual << '\n';
  }
}

json check_json(const CheckReport& c) {
  return {{"ok", c.ok}, {"worst_residual", c.worst_residual}, {"checked", c.checked}, {"violations", c.violations.size()}};
}

void print_constants(const GrowthConstants& gc) {
  std::cout << "constants: delta = " << gc.delta << ", D = " << gc.D << '\n';
  for (int t = 1; t <= gc.horizon; ++t) {
    std::cout << "  t=" << t << "  gamma=" << gc.gamma[t] << "  M=" << gc.M[t] << "  C=" << gc.C[t]
              << "  C^t=" << gc.C_cum[t] << "  M^t=" << gc.M_cum[t] << '\n';
  }
  std::cout << "  C^" << gc.horizon + 1 << "=" << gc.C_cum[gc.horizon + 1] << "  M^0=" << gc.M_cum[0] << '\n';
}

// The constructive lower bound settles most models; the LP runs only when
// it cannot.
bool degenerate(const Model& model, double& value) {
  auto lower = terminal_lower_bound(model);
  if (lower && *lower > kCertificationTolerance) {
    value = *lower;
    return false;
  }
  auto guard = max_terminal_value(model);
  value = guard.objective;
  return guard.status == SolveStatus::degenerate_model;
}

// Shared by solve and sweep: assumption verdicts without throwing.
int require_assumptions(const Model& model, json& report, bool need_initial_state) {
  AssumptionReport a = assess_assumptions(model);
  report["assumptions"] = {{"G1", a.g1}, {"G2", a.g2}, {"G3", a.g3}, {"initial_state", a.initial_state}};
  if (!a.g1 || !a.g2 || !a.g3 || (need_initial_state && !a.initial_state)) {
    for (const auto& m : a.messages) std::cout << m << '\n';
    report["messages"] = a.messages;
    return kValidation;
  }
  return kOk;
}

// ------------------------------------------------------------------ validate

int cmd_validate(const std::string& model_file, Common& common) {
  json report = {{"command", "validate"}, {"model", model_file}};
  Model model = read_model(model_file);
  AssumptionReport a = assess_assumptions(model, kMembershipTolerance);
  auto verdict = [](bool ok) { return ok ? "pass" : "FAIL"; };
  std::cout << "model " << model.name << ": n=" << model.dim() << ", N=" << model.horizon()
            << ", nodes=" << model.tree.size() << '\n';
  std::cout << "G1 (inputs span every unit vector): " << verdict(a.g1) << '\n';
  std::cout << "G2 (output bounded by input): " << verdict(a.g2) << '\n';
  std::cout << "G3 (uniform productivity): " << verdict(a.g3) << '\n';
  std::cout << "initial state (delta e <= x0 <= D e, delta > 0): " << verdict(a.initial_state) << '\n';
  for (const auto& m : a.messages) std::cout << "  " << m << '\n';
  report["assumptions"] = {{"G1", a.g1}, {"G2", a.g2}, {"G3", a.g3}, {"initial_state", a.initial_state}};
  report["messages"] = a.messages;
  if (a.constants) {
    print_constants(*a.constants);
    report["constants"] = constants_to_json(*a.constants);
  }
  int code = a.ok() ? kOk : kValidation;
  write_sidecar(common, report, code);
  return code;
}

// --------------------------------------------------------------------- solve

ResultDocument base_result(const Model& model, const Common& common) {
  ResultDocument r;
  r.model_name = model.name;
  r.provenance.certification_tolerance = common.tol;
  return r;
}

int cmd_solve(const std::string& model_file, std::optional<int> horizon, const std::string& out_file,
              Common& common) {
  json report = {{"command", "solve"}, {"model", model_file}};
  Model model = read_model(model_file);
  if (horizon) model = model_at_horizon(model, *horizon);

  // Degeneracy first: a model with no positive terminal value has nothing
  // to certify, whatever else is wrong with it.
  if (double value = 0.0; degenerate(model, value)) {
    std::cout << "degenerate model: max E[e . x_N] = " << value << " <= tolerance\n";
    report["status"] = "degenerate-model";
    write_sidecar(common, report, kUncertified);
    return kUncertified;
  }
  if (int code = require_assumptions(model, report, true); code != kOk) {
    report["status"] = "invalid-model";
    write_sidecar(common, report, code);
    return code;
  }

  RapidOptions opt;
  opt.certify.tolerance = common.tol;
  LogOptimalResult lo = solve_log_optimal(model, opt.log_optimal);
  RapidCertificate cert = certify_rapid(model, lo.path, opt.certify);
  ResultDocument r = base_result(model, common);
  r.path = lo.path;
  r.residuals["log_optimal_gap"] = lo.duality_gap;
  r.residuals["certification_slack"] = cert.total_slack;
  r.constants = compute_constants(model);
  report["certification_slack"] = cert.total_slack;

  int code = kOk;
  if (!cert.certified) {
    r.status = "uncertified";
    r.certificate = cert.certificate;
    std::cout << "path NOT certified rapid: total support slack " << cert.total_slack << '\n';
    code = kUncertified;
  } else {
    RadnerDual q = dynkin_to_radner(model.tree, cert.dual);
    CheckReport pc = check_path(model, lo.path);
    CheckReport dc = check_dynkin(model, cert.dual, common.tol);
    CheckReport sc = check_support(model.tree, lo.path, cert.dual, common.tol);
    CheckReport rs = check_support(model.tree, lo.path, q, common.tol);
    CheckReport rc = check_radner(model, q, common.tol);
    r.status = "certified";
    r.label = "rapid path with a supporting dual (uniqueness not claimed)";
    r.dynkin = cert.dual;
    r.radner = q;
    r.residuals["path"] = pc.worst_residual;
    r.residuals["dynkin"] = dc.worst_residual;
    r.residuals["support"] = sc.worst_residual;
    r.residuals["radner_support"] = rs.worst_residual;
    r.residuals["radner"] = rc.worst_residual;
    std::cout << "certified rapid path, N=" << model.horizon() << " (total support slack " << cert.total_slack
              << ")\n";
    print_check("path feasibility", pc);
    print_check("dual cone", dc);
    print_check("support", sc);
    print_check("R-dual support", rs);
    print_check("R-dual inequality", rc);
    report["checks"] = {{"path", check_json(pc)},
                        {"dynkin", check_json(dc)},
                        {"support", check_json(sc)},
                        {"radner_support", check_json(rs)},
                        {"radner", check_json(rc)}};
    if (!(pc.ok && dc.ok && sc.ok && rs.ok && rc.ok)) code = kUncertified;
  }
  report["status"] = r.status;
  if (!out_file.empty()) write_json_file(out_file, save_results(r, model.tree));
  write_sidecar(common, report, code);
  return code;
}

// ------------------------------------------------------------------- certify

int cmd_certify(const std::string& model_file, const std::string& path_file, const std::string& out_file,
                Common& common) {
  json report = {{"command", "certify"}, {"model", model_file}, {"path_file", path_file}};
  Model model = read_model(model_file);
  ResultDocument in = read_result(path_file, model.tree);
  if (!in.path) throw ModelError(ModelError::Kind::schema, "path", "path file has no path");
  if (int code = require_assumptions(model, report, false); code != kOk) {
    write_sidecar(common, report, code);
    return code;
  }
  CheckReport pc = check_path(model, *in.path);
  print_check("path feasibility", pc);
  report["checks"] = {{"path", check_json(pc)}};
  if (!pc.ok) {
    std::cout << "input is not a feasible path\n";
    report["status"] = "infeasible-path";
    write_sidecar(common, report, kValidation);
    return kValidation;
  }

  CertifyOptions opt;
  opt.tolerance = common.tol;
  RapidCertificate cert = certify_rapid(model, *in.path, opt);
  ResultDocument r = base_result(model, common);
  r.path = in.path;
  r.residuals["certification_slack"] = cert.total_slack;
  report["certification_slack"] = cert.total_slack;
  int code;
  if (cert.certified) {
    r.status = "certified";
    r.label = "a supporting dual (uniqueness not claimed)";
    r.dynkin = cert.dual;
    std::cout << "path is rapid: supporting dual found (total support slack " << cert.total_slack << ")\n";
    code = kOk;
  } else {
    r.status = "not-rapid";
    r.certificate = cert.certificate;
    std::cout << "path is NOT rapid: minimal total support slack " << cert.total_slack
              << "; infeasibility certificate with " << cert.certificate.size() << " multipliers\n";
    report["certificate"] = cert.certificate;
    code = kUncertified;
  }
  report["status"] = r.status;
  if (!out_file.empty()) write_json_file(out_file, save_results(r, model.tree));
  write_sidecar(common, report, code);
  return code;
}

// ------------------------------------------------------------------- convert

int cmd_convert(const std::string& direction, const std::string& model_file, const std::string& dual_file,
                const std::string& path_file, const std::string& out_file, Common& common) {
  json report = {{"command", "convert"}, {"direction", direction}, {"model", model_file}};
  Model model = read_model(model_file);
  ResultDocument in = read_result(dual_file, model.tree);
  std::optional<PrimalPath> path = in.path;
  if (!path_file.empty()) path = read_result(path_file, model.tree).path;

  ResultDocument r = base_result(model, common);
  r.path = path;
  int code = kOk;
  if (direction == "d2r") {
    if (!in.dynkin) throw ModelError(ModelError::Kind::schema, "dynkin", "dual file has no Dynkin dual");
    RadnerDual q = dynkin_to_radner(model.tree, *in.dynkin);
    r.radner = q;
    r.status = "converted";
    std::cout << "q_t = E_t p_{t+1} computed for t = 0.." << model.horizon() << '\n';
    if (path) {
      CheckReport sp = check_support(model.tree, *path, *in.dynkin, common.tol);
      CheckReport sq = check_support(model.tree, *path, q, common.tol);
      CheckReport rc = check_radner(model, q, common.tol);
      print_check("input support", sp);
      print_check("R-dual support", sq);
      print_check("R-dual inequality", rc);
      r.residuals["support"] = sp.worst_residual;
      r.residuals["radner_support"] = sq.worst_residual;
      r.residuals["radner"] = rc.worst_residual;
      report["checks"] = {{"support", check_json(sp)}, {"radner_support", check_json(sq)}, {"radner", check_json(rc)}};
      if (!(sp.ok && sq.ok && rc.ok)) {
        r.status = "inconsistent";
        code = kUncertified;
      }
    }
  } else {
    if (!in.radner) throw ModelError(ModelError::Kind::schema, "radner", "dual file has no R-dual");
    if (!path) throw ModelError(ModelError::Kind::schema, "path", "r2d needs the supported path");
    CheckReport sq = check_support(model.tree, *path, *in.radner, common.tol);
    print_check("R-dual support", sq);
    report["checks"] = {{"radner_support", check_json(sq)}};
    if (!sq.ok) {
      std::cout << "R-dual does not support the path\n";
      r.status = "inconsistent";
      code = kUncertified;
    } else {
      try {
        RadnerToDynkin conv = radner_to_dynkin(model, *in.radner, *path, common.tol);
        r.dynkin = conv.dual;
        r.multipliers = conv.multipliers;
        r.radner = in.radner;
        r.status = "converted";
        r.residuals["max_multiplier_mean"] = conv.report.max_multiplier_mean;
        r.residuals["support"] = conv.report.support.worst_residual;
        std::cout << "p_t = q_{t-1} + g_t recovered; max |E_{t-1} g_t| = " << conv.report.max_multiplier_mean << '\n';
        print_check("support of recovered dual", conv.report.support);
        if (!conv.report.support.ok) code = kUncertified;
      } catch (const SolverError& e) {
        std::cout << e.what() << '\n';
        r.status = "infeasible";
        code = kUncertified;
      }
    }
  }
  report["status"] = r.status;
  if (!out_file.empty()) write_json_file(out_file, save_results(r, model.tree));
  write_sidecar(common, report, code);
  return code;
}

// --------------------------------------------------------------------- sweep

int cmd_sweep(const std::string& model_file, int max_horizon, const std::string& csv_file, double constant_scale,
              Common& common) {
  json report = {{"command", "sweep"}, {"model", model_file}, {"max_horizon", max_horizon}};
  Model model = read_model(model_file);
  Model at_max = model_at_horizon(model, max_horizon);
  if (double value = 0.0; degenerate(model_at_horizon(model, 1), value)) {
    std::cout << "degenerate model: max E[e . x_1] = " << value << " <= tolerance\n";
    report["status"] = "degenerate-model";
    write_sidecar(common, report, kUncertified);
    return kUncertified;
  }
  if (int code = require_assumptions(at_max, report, true); code != kOk) {
    write_sidecar(common, report, code);
    return code;
  }
  RapidOptions opt;
  opt.certify.tolerance = common.tol;
  Sweep sweep = horizon_sweep(model, max_horizon, opt);

  GrowthConstants gc = sweep.constants;
  if (constant_scale != 1.0) {
    // Fault injection: shrink every bound so that the audit must trip.
    for (auto* v : {&gc.C, &gc.C_cum, &gc.M_cum}) {
      for (double& c : *v) c *= constant_scale;
    }
    gc.delta /= constant_scale;
  }
  BoundsReport bounds = bounds_check(sweep, gc);

  int failed = 0;
  for (const auto& row : sweep.rows) {
    std::cout << "N=" << row.horizon << ": ";
    if (row.completed) {
      std::cout << "certified (slack " << row.certification_slack << ")\n";
    } else {
      std::cout << "FAILED: " << row.failure << '\n';
      ++failed;
    }
  }
  std::cout << "bounds (worst slack, tolerance " << bounds.tolerance << "):\n"
            << "  E|p_t| <= C^t         " << bounds.worst_p_mean << '\n'
            << "  |x_t| <= M^t          " << bounds.worst_x << '\n'
            << "  |q_t| <= C_t |p_t|    " << bounds.worst_q << '\n'
            << "  |p_1| <= 1/delta      " << bounds.worst_p1 << '\n'
            << "  E|q_t| <= C^{t+1}     " << bounds.worst_q_mean << '\n';
  for (const auto& v : bounds.violations) std::cout << "  " << v << '\n';
  std::cout << "diameters over the trailing half (informational):\n";
  json diam = json::array();
  for (const auto& d : sweep.diameters) {
    std::cout << "  t=" << d.time << "  rows " << d.samples << " from N=" << d.first_horizon << "  x " << d.x
              << "  p " << d.p << "  q " << d.q << '\n';
    diam.push_back({{"t", d.time}, {"samples", d.samples}, {"x", d.x}, {"p", d.p}, {"q", d.q}});
  }
  if (!csv_file.empty()) {
    std::ofstream out(csv_file);
    if (!out) throw IoError("cannot write " + csv_file);
    write_sweep_csv(out, sweep, gc);
  }
  int code = !bounds.ok ? kValidation : failed ? kUncertified : kOk;
  report["rows"] = sweep.rows.size();
  report["failed_rows"] = failed;
  report["bounds_ok"] = bounds.ok;
  report["worst_slack"] = {{"p_mean", bounds.worst_p_mean}, {"x", bounds.worst_x}, {"q", bounds.worst_q},
                           {"p1", bounds.worst_p1}, {"q_mean", bounds.worst_q_mean}};
  report["violations"] = bounds.violations;
  report["diameters"] = diam;
  write_sidecar(common, report, code);
  return code;
}

// ------------------------------------------------------------------- example

int cmd_example(const std::string& kind, std::uint64_t seed, const ExampleParams& params, const std::string& out_file,
                Common& common) {
  json doc = generate_example(kind, params, seed);
  if (out_file.empty() || out_file == "-") {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_json_file(out_file, doc);
    std::cout << "wrote " << kind << " example (seed " << seed << ") to " << out_file << '\n';
  }
  write_sidecar(common, {{"command", "example"}, {"kind", kind}, {"seed", seed}}, kOk);
  return kOk;
}

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--tol", common.tol_flag,
                  "certification tolerance (default 1e-7; overrides the VNG_TOL environment variable)");
  sub->add_option("--json", common.json_path, "write a machine-readable report to this file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic von Neumann-Gale growth models: rapid paths and their dual prices"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Common common;
  std::string model_file, path_file, dual_file, out_file, csv_file, direction, kind;
  std::optional<int> horizon;
  int max_horizon = 0;
  double constant_scale = 1.0;
  std::uint64_t seed = 0;
  ExampleParams params;

  auto* validate = app.add_subcommand("validate", "check the model assumptions and print the growth constants");
  validate->add_option("model", model_file, "model JSON file")->required();
  add_common(validate, common);

  auto* solve = app.add_subcommand("solve", "compute a rapid path with its Dynkin and R-duals");
  solve->add_option("model", model_file, "model JSON file")->required();
  solve->add_option("--horizon", horizon, "truncate, or extend a stationary model, to this horizon")
      ->check(CLI::PositiveNumber);
  solve->add_option("--out", out_file, "result JSON file");
  add_common(solve, common);

  auto* certify = app.add_subcommand("certify", "decide whether a given path is rapid");
  certify->add_option("model", model_file, "model JSON file")->required();
  certify->add_option("path", path_file, "result JSON file holding the path")->required();
  certify->add_option("--out", out_file, "result JSON file (dual or certificate)");
  add_common(certify, common);

  auto* convert = app.add_subcommand("convert", "convert between Dynkin duals (d2r) and R-duals (r2d)");
  convert->add_option("--direction", direction, "d2r or r2d")->required()->check(CLI::IsMember({"d2r", "r2d"}));
  convert->add_option("model", model_file, "model JSON file")->required();
  convert->add_option("dual", dual_file, "result JSON file holding the dual")->required();
  convert->add_option("path", path_file, "result JSON file holding the path (default: the dual file's path)");
  convert->add_option("--out", out_file, "result JSON file");
  add_common(convert, common);

  auto* sweep = app.add_subcommand("sweep", "solve N = 1..max and audit the growth bounds");
  sweep->add_option("model", model_file, "model JSON file")->required();
  sweep->add_option("--max-horizon", max_horizon, "largest horizon")->required()->check(CLI::Range(1, 12));
  sweep->add_option("--csv", csv_file, "sweep table (CSV)");
  sweep->add_option("--constant-scale", constant_scale,
                    "diagnostic: multiply the bound constants by this factor (fault injection)")
      ->check(CLI::PositiveNumber);
  add_common(sweep, common);

  auto* example = app.add_subcommand("example", "generate a random model satisfying the assumptions");
  example->add_option("--kind", kind, "neumann or currency")->required()->check(CLI::IsMember({"neumann", "currency"}));
  example->add_option("--seed", seed, "random seed")->capture_default_str();
  example->add_option("--out", out_file, "output file (default: standard output)");
  example->add_option("--dim", params.dim, "number of goods or assets")->capture_default_str();
  example->add_option("--horizon", params.horizon, "tree depth")->capture_default_str();
  example->add_option("--branching", params.branching, "children per node")->capture_default_str();
  example->add_option("--productive", params.productive, "neumann: productive generators per node")
      ->capture_default_str();
  example->add_option("--cost", params.cost, "currency: proportional transaction cost in [0, 1)")
      ->capture_default_str();
  example->add_option("--return-low", params.return_low, "currency: lowest gross return")->capture_default_str();
  example->add_option("--return-high", params.return_high, "currency: highest gross return")->capture_default_str();
  example->add_flag("--stationary", params.stationary, "repeat one level template (allows sweeps past the horizon)");
  add_common(example, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kIoSchema;
  }

  try {
    common.tol = resolve_tolerance(common);
    if (*validate) return cmd_validate(model_file, common);
    if (*solve) return cmd_solve(model_file, horizon, out_file, common);
    if (*certify) return cmd_certify(model_file, path_file, out_file, common);
    if (*convert) return cmd_convert(direction, model_file, dual_file, path_file, out_file, common);
    if (*sweep) return cmd_sweep(model_file, max_horizon, csv_file, constant_scale, common);
    if (*example) return cmd_example(kind, seed, params, out_file, common);
  } catch (const CommandFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoSchema;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return model_error_code(e);
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUncertified;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kIoSchema;
}
