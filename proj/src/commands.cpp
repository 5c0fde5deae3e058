#include "gridplace/commands.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "gridplace/errors.hpp"
#include "gridplace/fixtures.hpp"
#include "gridplace/grid.hpp"
#include "gridplace/oracle.hpp"
#include "gridplace/placement.hpp"
#include "gridplace/reports.hpp"
#include "gridplace/response.hpp"
#include "gridplace/sensitivity.hpp"
#include "gridplace/spectral.hpp"

namespace gridplace {

namespace {

using json = nlohmann::json;

struct Loaded {
  GridModel grid;
  AnglesSolution angles;
  SwingSystem system;
};

Loaded load_system(const std::string& path) {
  GridModel grid = load_grid_file(path);
  AnglesSolution angles = solve_power_flow(grid);
  SwingSystem system = eliminate_inertialess(grid, angles);
  return Loaded{std::move(grid), std::move(angles), std::move(system)};
}

void emit(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    write_atomic(path, content);
  }
}

std::vector<double> to_std(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::vector<Index> fault_buses(const SwingSystem& system, const std::vector<std::string>& ids, bool all) {
  std::vector<Index> buses;
  if (all) {
    buses = system.generator_buses();
    if (buses.empty()) throw Error(ErrorCode::InvalidParameters, "grid has no generator buses to fault");
    return buses;
  }
  if (ids.empty()) throw Error(ErrorCode::InvalidParameters, "pass --bus <id> or --all");
  for (const auto& id : ids) {
    const auto index = system.index_of(id);
    if (!index) throw Error(ErrorCode::UnknownBus, "bus '" + id + "' is not a dynamic bus of this grid");
    buses.push_back(*index);
  }
  return buses;
}

std::optional<double> common_damping_ratio(const SwingSystem& system) {
  const VectorXd gamma = system.damping_ratio();
  const double hi = gamma.maxCoeff();
  const double lo = gamma.minCoeff();
  if (hi - lo > 1e-9 * std::abs(hi)) return std::nullopt;
  return gamma.mean();
}

// Homogeneous baseline shared by sensitivities, optimize and report.
struct Baseline {
  SwingSystem system;
  Spectrum spectrum;
  PerturbationParams params;
  FaultSet faults;
  VectorXd m0;
};

struct BaselineOptions {
  double mu = 0.1;
  double g = 0.1;
  double delta_p = 1.0;
  std::vector<std::string> buses;
  std::string weighting = "uniform";
  std::optional<double> m_thres;
};

Baseline make_baseline(const SwingSystem& system, const BaselineOptions& options) {
  Baseline base;
  base.system = homogenize(system);
  base.spectrum = laplacian_spectrum(base.system.laplacian);
  base.params.m = base.system.inertia(0);
  base.params.gamma = base.system.damping(0) / base.params.m;
  base.params.mu = options.mu;
  base.params.g = options.g;
  base.params.validate(base.system.size());
  base.faults = uniform_faults(fault_buses(base.system, options.buses, options.buses.empty()), options.delta_p);
  base.m0 = homogeneous_measures(base.spectrum, base.params, base.faults);
  const auto kind = parse_weight_kind(options.weighting);
  if (!kind) throw Error(ErrorCode::InvalidParameters, "unknown weighting '" + options.weighting + "'");
  base.faults.eta = weight_scheme(*kind, base.m0, options.m_thres);
  return base;
}

void add_baseline_options(CLI::App* cmd, BaselineOptions& opts) {
  cmd->add_option("--mu", opts.mu, "Inertia inhomogeneity amplitude")->capture_default_str();
  cmd->add_option("--g", opts.g, "Damping-ratio inhomogeneity amplitude")->capture_default_str();
  cmd->add_option("--delta-p", opts.delta_p, "Power loss per fault (per-unit)")->capture_default_str();
  cmd->add_option("--bus", opts.buses, "Fault buses (default: every generator)");
  cmd->add_option("--weighting", opts.weighting, "Fault weights eta: uniform, squared or threshold")
      ->check(CLI::IsMember({"uniform", "squared", "threshold"}))
      ->capture_default_str();
  cmd->add_option("--m-thres", opts.m_thres, "Threshold for the threshold weighting");
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const GridModel grid = load_grid_file(path);
  out << "buses: " << grid.size() << '\n';
  out << "lines: " << grid.lines().size() << '\n';
  out << "connected: yes\n";
  out << "balanced: yes\n";
  const AnglesSolution angles = solve_power_flow(grid);
  out << "powerflow: converged in " << angles.iterations << " iterations, residual " << angles.residual_norm << '\n';
  const SwingSystem system = eliminate_inertialess(grid, angles);
  out << "dynamic buses: " << system.size() << " (" << grid.size() - system.size() << " inertialess eliminated)\n";
  const Spectrum spec = laplacian_spectrum(system.laplacian);
  out << "lambda_2: " << (spec.size() > 1 ? spec.lambda(1) : 0.0) << '\n';
  out << "degenerate: " << (spec.degenerate ? "yes" : "no") << " (min gap " << spec.min_gap << ")\n";
  const Spectrum weighted = weighted_spectrum(system.laplacian, system.inertia);
  out << "weighted degenerate: " << (weighted.degenerate ? "yes" : "no") << " (min gap " << weighted.min_gap << ")\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inertia and primary-control placement on linearized swing models", "gridplace"};
  app.require_subcommand(0, 1);
  bool schema = false;
  app.add_flag("--schema", schema, "Print the CSV and JSON column documentation");

  std::function<int()> action;
  bool validation_command = false;

  std::string grid_path;
  std::string output;
  std::string format = "csv";
  auto add_grid = [&](CLI::App* cmd) {
    cmd->add_option("grid", grid_path, "Grid JSON file")->required()->check(CLI::ExistingFile);
  };
  auto add_output = [&](CLI::App* cmd, bool with_format) {
    cmd->add_option("-o,--output", output, "Output file (default: stdout)");
    if (with_format) {
      cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    }
  };

  // validate
  auto* validate = app.add_subcommand("validate", "Load, power-flow and eigendecompose a grid");
  add_grid(validate);
  validate->callback([&] {
    validation_command = true;
    action = [&] { return cmd_validate(grid_path, out); };
  });

  // powerflow
  PowerFlowOptions pf_options;
  auto* powerflow = app.add_subcommand("powerflow", "Solve the lossless power flow");
  add_grid(powerflow);
  add_output(powerflow, true);
  powerflow->add_option("--tol", pf_options.tol, "Mismatch tolerance")->capture_default_str();
  powerflow->add_option("--max-iter", pf_options.max_iter, "Newton iteration cap")->capture_default_str();
  powerflow->callback([&] {
    action = [&] {
      const GridModel grid = load_grid_file(grid_path);
      const AnglesSolution angles = solve_power_flow(grid, pf_options);
      std::ostringstream text;
      text.precision(17);
      if (format == "json") {
        json doc{{"format_version", kFormatVersion},
                 {"iterations", angles.iterations},
                 {"residual_norm", angles.residual_norm},
                 {"ids", grid.ids()},
                 {"theta", to_std(angles.theta)}};
        text << doc.dump(2) << '\n';
      } else {
        text << "id,theta\n";
        for (Index i = 0; i < grid.size(); ++i) text << grid.bus(i).id << ',' << angles.theta(i) << '\n';
      }
      emit(text.str(), output, out);
      return kExitOk;
    };
  });

  // spectrum
  bool weighted_flag = false;
  auto* spectrum = app.add_subcommand("spectrum", "Eigendecomposition of the operating-point Laplacian");
  add_grid(spectrum);
  add_output(spectrum, true);
  spectrum->add_flag("--weighted", weighted_flag, "Use the inertia-weighted Laplacian");
  spectrum->callback([&] {
    action = [&] {
      const Loaded loaded = load_system(grid_path);
      const Spectrum spec = weighted_flag ? weighted_spectrum(loaded.system.laplacian, loaded.system.inertia)
                                          : laplacian_spectrum(loaded.system.laplacian);
      std::ostringstream text;
      text.precision(17);
      if (format == "json") {
        json vectors = json::array();
        for (Index alpha = 0; alpha < spec.size(); ++alpha) vectors.push_back(to_std(spec.eigenvectors.row(alpha)));
        json doc{{"format_version", kFormatVersion},
                 {"weighting", weighted_flag ? "inertia" : "none"},
                 {"ids", loaded.system.ids},
                 {"eigenvalues", to_std(spec.eigenvalues)},
                 {"eigenvectors", vectors},
                 {"degenerate", spec.degenerate},
                 {"min_gap", spec.min_gap}};
        text << doc.dump(2) << '\n';
      } else {
        write_spectrum_csv(text, spec);
      }
      emit(text.str(), output, out);
      return kExitOk;
    };
  });

  // measure
  std::vector<std::string> measure_buses;
  bool measure_all = false;
  std::optional<double> measure_gamma;
  double measure_dp = 1.0;
  std::string method = "closed";
  bool measure_homogenize = false;
  auto* measure = app.add_subcommand("measure", "Per-fault performance measure");
  add_grid(measure);
  add_output(measure, true);
  measure->add_option("--bus", measure_buses, "Fault bus ids");
  measure->add_flag("--all", measure_all, "Fault every generator bus");
  measure->add_option("--gamma", measure_gamma, "Set every damping ratio to this value");
  measure->add_option("--delta-p", measure_dp, "Power loss (per-unit)")->capture_default_str();
  measure->add_option("--method", method, "closed, oracle or both")
      ->check(CLI::IsMember({"closed", "oracle", "both"}))
      ->capture_default_str();
  measure->add_flag("--homogenize", measure_homogenize, "Replace inertia and damping by their means");
  measure->callback([&] {
    action = [&] {
      const Loaded loaded = load_system(grid_path);
      SwingSystem system = measure_homogenize ? homogenize(loaded.system) : loaded.system;
      if (measure_gamma) {
        if (!(*measure_gamma > 0.0)) throw Error(ErrorCode::InvalidParameters, "--gamma must be positive");
        system.damping = *measure_gamma * system.inertia;
      }
      const std::vector<Index> buses = fault_buses(system, measure_buses, measure_all);
      std::vector<MeasureRow> rows(buses.size());
      for (std::size_t k = 0; k < buses.size(); ++k) {
        rows[k].bus = system.ids[static_cast<std::size_t>(buses[k])];
        rows[k].delta_p = measure_dp;
      }
      if (method != "oracle") {
        const auto gamma = common_damping_ratio(system);
        if (!gamma) {
          throw Error(ErrorCode::InvalidParameters,
                      "closed form needs one damping ratio on every bus; pass --gamma or --homogenize");
        }
        const Spectrum spec = weighted_spectrum(system.laplacian, system.inertia);
        for (std::size_t k = 0; k < buses.size(); ++k) {
          const FaultSpec fault{buses[k], measure_dp};
          rows[k].closed = measure_closed_form(spec, system.inertia(buses[k]), *gamma, fault);
        }
      }
      if (method != "closed") {
        std::vector<FaultSpec> faults;
        for (Index b : buses) faults.push_back(FaultSpec{b, measure_dp});
        const auto settings = default_settings(system.laplacian, system.inertia, system.damping);
        const auto estimates = oracle_measures(system.laplacian, system.inertia, system.damping, faults, settings);
        for (std::size_t k = 0; k < buses.size(); ++k) rows[k].oracle = estimates[k].value;
      }
      sort_rows(rows);
      emit(format == "json" ? measure_json(rows, method) : measure_csv(rows, method), output, out);
      return kExitOk;
    };
  });

  // sensitivities
  BaselineOptions sens_options;
  bool exclude_zero_mode = false;
  std::string aggregate_path;
  auto* sensitivities_cmd = app.add_subcommand("sensitivities", "Inertia and damping susceptibilities per fault");
  add_grid(sensitivities_cmd);
  add_output(sensitivities_cmd, false);
  add_baseline_options(sensitivities_cmd, sens_options);
  sensitivities_cmd->add_flag("--exclude-zero-mode", exclude_zero_mode,
                              "Drop the zero mode from the damping coupling sum");
  sensitivities_cmd->add_option("--aggregate", aggregate_path, "Also write the aggregated gradient CSV here");
  sensitivities_cmd->callback([&] {
    action = [&] {
      const Loaded loaded = load_system(grid_path);
      const Baseline base = make_baseline(loaded.system, sens_options);
      std::vector<SensitivityRows> rows;
      for (std::size_t k = 0; k < base.faults.buses.size(); ++k) {
        const FaultSpec fault{base.faults.buses[k], base.faults.delta_p(static_cast<Index>(k))};
        rows.push_back(SensitivityRows{base.system.ids[static_cast<std::size_t>(fault.bus)], fault.delta_p,
                                       susceptibilities(base.spectrum, base.params, fault, !exclude_zero_mode)});
      }
      emit(sensitivity_csv(rows, base.system.ids), output, out);
      if (!aggregate_path.empty()) {
        const Aggregated agg = aggregate_susceptibilities(base.spectrum, base.params, base.faults, !exclude_zero_mode);
        const VulnerabilityGradients grad =
            vulnerability_gradients(base.spectrum, base.params, base.faults, !exclude_zero_mode);
        write_atomic(aggregate_path, aggregate_csv(agg, grad, base.system.ids));
      }
      return kExitOk;
    };
  });

  // optimize
  BaselineOptions opt_options;
  std::string target = "combined";
  std::string csv_path;
  auto* optimize = app.add_subcommand("optimize", "Place inertia and primary control");
  add_grid(optimize);
  add_output(optimize, false);
  add_baseline_options(optimize, opt_options);
  optimize->add_option("--target", target, "inertia, damping or combined")
      ->check(CLI::IsMember({"inertia", "damping", "combined"}))
      ->capture_default_str();
  optimize->add_option("--csv", csv_path, "Per-bus CSV with aggregated sensitivities and placement");
  optimize->callback([&] {
    action = [&] {
      const Loaded loaded = load_system(grid_path);
      const Baseline base = make_baseline(loaded.system, opt_options);
      const VulnerabilityGradients grad = vulnerability_gradients(base.spectrum, base.params, base.faults);
      const Index n = base.system.size();
      PlacementResult result;
      if (target == "inertia") {
        result = make_placement(grad.d_r, grad.d_a, optimize_inertia(grad.d_r), VectorXd::Zero(n), "inertia");
      } else if (target == "damping") {
        result = make_placement(grad.d_r, grad.d_a, VectorXd::Zero(n), optimize_damping(grad.d_a), "damping");
      } else {
        result = optimize_combined(grad.d_r, grad.d_a);
      }
      result.weighting = opt_options.weighting;
      result.ids = base.system.ids;
      const double scale = std::abs(base.params.mu) * base.faults.eta.dot(base.m0);
      if (target != "damping" && grad.d_r.cwiseAbs().maxCoeff() <= 1e-9 * scale) {
        err << "warning: aggregated inertia sensitivities vanish for this weighting; "
               "the inertia placement is degenerate and brings no first-order change\n";
      }
      emit(placement_to_json(result) + "\n", output, out);
      if (!csv_path.empty()) write_atomic(csv_path, placement_csv(result, grad.d_r, grad.d_a, result.ids));
      return kExitOk;
    };
  });

  // report
  BaselineOptions report_options;
  std::string placement_path;
  auto* report = app.add_subcommand("report", "Oracle-evaluated vulnerability before and after a placement");
  add_grid(report);
  report->add_option("placement", placement_path, "PlacementResult JSON")->required()->check(CLI::ExistingFile);
  add_output(report, true);
  add_baseline_options(report, report_options);
  report->callback([&] {
    action = [&] {
      const Loaded loaded = load_system(grid_path);
      Baseline base = make_baseline(loaded.system, report_options);
      std::ifstream file(placement_path);
      std::stringstream buffer;
      buffer << file.rdbuf();
      const PlacementResult placement = placement_from_json(buffer.str());
      const Index n = base.system.size();
      if (placement.r.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "placement has " + std::to_string(placement.r.size()) +
                                                      " entries, grid has " + std::to_string(n) + " dynamic buses");
      }
      PerturbationParams params = base.params;
      params.r = placement.r;
      params.a = placement.a;
      params.validate(n);

      std::vector<FaultSpec> faults;
      for (std::size_t k = 0; k < base.faults.buses.size(); ++k) {
        faults.push_back(FaultSpec{base.faults.buses[k], base.faults.delta_p(static_cast<Index>(k))});
      }
      auto evaluate = [&](const VectorXd& inertia, const VectorXd& damping) {
        const auto settings = default_settings(base.system.laplacian, inertia, damping);
        const auto est = oracle_measures(base.system.laplacian, inertia, damping, faults, settings);
        VectorXd values(static_cast<Index>(est.size()));
        for (std::size_t k = 0; k < est.size(); ++k) values(static_cast<Index>(k)) = est[k].value;
        return values;
      };
      const VectorXd before = evaluate(base.system.inertia, base.system.damping);
      const VectorXd after = evaluate(params.inertia(n), params.damping(n));
      const double v_before = vulnerability(before, base.faults.eta);
      const double v_after = vulnerability(after, base.faults.eta);
      const double reduction = v_before != 0.0 ? 100.0 * (v_before - v_after) / v_before : 0.0;

      auto curve = [&](const VectorXd& values) {
        std::vector<MeasureRow> rows(faults.size());
        for (std::size_t k = 0; k < faults.size(); ++k) {
          rows[k].bus = base.system.ids[static_cast<std::size_t>(faults[k].bus)];
          rows[k].delta_p = faults[k].delta_p;
          rows[k].oracle = values(static_cast<Index>(k));
        }
        sort_rows(rows);
        return rows;
      };
      const auto rows_before = curve(before);
      const auto rows_after = curve(after);

      std::ostringstream text;
      text.precision(17);
      if (format == "json") {
        auto to_json = [](const std::vector<MeasureRow>& rows) {
          json list = json::array();
          for (const auto& row : rows) list.push_back({{"bus", row.bus}, {"measure", row.measure()}});
          return list;
        };
        json doc{{"format_version", kFormatVersion},
                 {"mu", params.mu},
                 {"g", params.g},
                 {"weighting", report_options.weighting},
                 {"algorithm", placement.algorithm},
                 {"before", to_json(rows_before)},
                 {"after", to_json(rows_after)},
                 {"V_before", v_before},
                 {"V_after", v_after},
                 {"reduction_percent", reduction},
                 {"strongest_before", before.maxCoeff()},
                 {"strongest_after", after.maxCoeff()}};
        text << doc.dump(2) << '\n';
      } else {
        text << "rank,bus_before,measure_before,bus_after,measure_after\n";
        for (std::size_t k = 0; k < rows_before.size(); ++k) {
          text << k + 1 << ',' << rows_before[k].bus << ',' << rows_before[k].measure() << ',' << rows_after[k].bus
               << ',' << rows_after[k].measure() << '\n';
        }
        err << "V_before " << v_before << ", V_after " << v_after << ", reduction " << reduction << "%\n";
      }
      emit(text.str(), output, out);
      return kExitOk;
    };
  });

  // simulate
  std::string sim_bus;
  double sim_dp = 1.0;
  std::optional<double> sim_dt;
  std::optional<double> sim_horizon;
  bool sim_modal = false;
  std::string sidecar_path;
  auto* simulate = app.add_subcommand("simulate", "Integrate the linearized swing equations after a fault");
  add_grid(simulate);
  add_output(simulate, false);
  simulate->add_option("--bus", sim_bus, "Fault bus id")->required();
  simulate->add_option("--delta-p", sim_dp, "Power loss (per-unit)")->capture_default_str();
  simulate->add_option("--dt", sim_dt, "Time step (s)");
  simulate->add_option("--horizon", sim_horizon, "Simulated time (s)");
  simulate->add_flag("--modal", sim_modal, "Export modal velocities of the inertia-weighted Laplacian");
  simulate->add_option("--sidecar", sidecar_path, "Settings JSON (default: <output>.json)");
  simulate->callback([&] {
    action = [&] {
      const Loaded loaded = load_system(grid_path);
      const SwingSystem& system = loaded.system;
      const Index bus = fault_buses(system, {sim_bus}, false).front();
      IntegratorSettings settings = default_settings(system.laplacian, system.inertia, system.damping);
      if (sim_dt) settings.dt = *sim_dt;
      if (sim_horizon) settings.horizon = *sim_horizon;
      const FaultSpec fault{bus, sim_dp};
      const Trajectory traj =
          integrate_swing(system.laplacian, system.inertia, system.damping, fault, settings.dt, settings.horizon);
      std::string csv;
      if (sim_modal) {
        const Spectrum spec = weighted_spectrum(system.laplacian, system.inertia);
        csv = modal_trajectory_csv(traj.times, project_modal(traj, spec.eigenvectors, system.inertia));
      } else {
        csv = trajectory_csv(traj, system.ids);
      }
      emit(csv, output, out);
      const std::string sidecar = !sidecar_path.empty() ? sidecar_path : (output.empty() ? "" : output + ".json");
      if (!sidecar.empty()) write_atomic(sidecar, trajectory_sidecar(traj.meta, sim_bus, sim_dp, system.size()));
      return kExitOk;
    };
  });

  // gen
  FixtureOptions fixture;
  std::string topology = "ring";
  long fixture_size = 10;
  auto* gen = app.add_subcommand("gen", "Write a seeded synthetic grid");
  add_output(gen, false);
  gen->add_option("--topology", topology, "ring, star or tree")
      ->check(CLI::IsMember({"ring", "star", "tree"}))
      ->capture_default_str();
  gen->add_option("-n,--size", fixture_size, "Number of buses")->capture_default_str();
  gen->add_option("--seed", fixture.seed, "Random seed")->capture_default_str();
  gen->add_option("--jitter", fixture.jitter, "Relative susceptance noise")->capture_default_str();
  gen->add_option("--injection", fixture.injection_scale, "Random balanced injections in [-s, s]")
      ->capture_default_str();
  gen->add_option("--inertia", fixture.inertia, "Mean inertia")->capture_default_str();
  gen->add_option("--gamma", fixture.gamma, "Damping ratio")->capture_default_str();
  gen->add_option("--inertia-spread", fixture.inertia_spread, "Relative inertia noise")->capture_default_str();
  gen->add_option("--susceptance", fixture.susceptance, "Line susceptance scale")->capture_default_str();
  gen->callback([&] {
    action = [&] {
      fixture.topology = *parse_topology(topology);
      fixture.size = fixture_size;
      emit(grid_to_json(make_fixture(fixture)) + "\n", output, out);
      return kExitOk;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (schema) {
    out << schema_text();
    return kExitOk;
  }
  if (!action) {
    out << app.help();
    return kExitUsage;
  }

  try {
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (validation_command) return kExitUsage;
    return is_numerical(e.code()) ? kExitNumerical : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace gridplace
