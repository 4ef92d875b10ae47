#include "kamred/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kamred/dynamics.hpp"
#include "kamred/homological.hpp"

namespace kamred {

using nlohmann::json;

Threshold threshold(double ell) {
  if (!(ell > 1.0)) throw Error(ErrorCode::Domain, "threshold: ell must exceed 1, got " + std::to_string(ell));
  const double first = ell - 2.0 / 3.0;
  const double second = 0.5 * (std::sqrt(4.0 * ell * ell - 2.0 * ell + 1.0) - 1.0);
  if (ell < 4.0 / 3.0) return {first, 1};
  return {second, 2};
}

// ---- config (de)serialization

namespace {

json schedule_json(const IterationSchedule& s) {
  return json{{"s0", s.s0},         {"gamma0", s.gamma0}, {"K_base", s.K_base},     {"tau", s.tau},
              {"a3_proxy", s.a3_proxy}, {"l_max", s.l_max}, {"stop_tol", s.stop_tol}, {"K_screen", s.K_screen}};
}

IterationSchedule schedule_from(const json& j) {
  IterationSchedule s;
  s.s0 = j.value("s0", s.s0);
  s.gamma0 = j.value("gamma0", s.gamma0);
  s.K_base = j.value("K_base", s.K_base);
  s.tau = j.value("tau", s.tau);
  s.a3_proxy = j.value("a3_proxy", s.a3_proxy);
  s.l_max = j.value("l_max", s.l_max);
  s.stop_tol = j.value("stop_tol", s.stop_tol);
  s.K_screen = j.value("K_screen", s.K_screen);
  return s;
}

json perturbation_json(const PerturbationSpec& W) {
  json terms = json::array();
  for (const TrigTerm& t : W.terms) {
    terms.push_back({{"amp", t.amp},
                     {"kx", t.kx},
                     {"x", t.x_sin ? "sin" : "cos"},
                     {"l", t.l},
                     {"phi", t.phi_cos ? "cos" : "sin"}});
  }
  return json{{"terms", terms}, {"nu", W.nu}, {"mu", W.mu}, {"eps", W.eps}};
}

PerturbationSpec perturbation_from(const json& j) {
  PerturbationSpec W;
  W.nu = j.value("nu", W.nu);
  W.mu = j.at("mu").get<double>();
  W.eps = j.at("eps").get<double>();
  for (const json& t : j.at("terms")) {
    TrigTerm term;
    term.amp = t.value("amp", 1.0);
    term.kx = t.at("kx").get<std::vector<int>>();
    term.l = t.at("l").get<Mode>();
    const std::string xs = t.value("x", std::string("sin"));
    const std::string ps = t.value("phi", std::string("cos"));
    if (xs != "sin" && xs != "cos") throw Error(ErrorCode::Config, "perturbation term: x must be \"sin\" or \"cos\"");
    if (ps != "sin" && ps != "cos") throw Error(ErrorCode::Config, "perturbation term: phi must be \"sin\" or \"cos\"");
    term.x_sin = xs == "sin";
    term.phi_cos = ps == "cos";
    W.terms.push_back(std::move(term));
  }
  return W;
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"schema_version", c.schema_version},
           {"potential", c.potential},
           {"grid", c.auto_grid ? json("auto") : json{{"L", c.grid.L}, {"n_pts", c.grid.n_pts}}},
           {"N", c.N},
           {"J", c.J},
           {"K_phi", c.K_phi},
           {"n_freq", c.n_freq},
           {"perturbation", perturbation_json(c.perturbation)},
           {"schedule", schedule_json(c.schedule)},
           {"omega", c.omega},
           {"measure",
            {{"enabled", c.measure.enabled},
             {"gamma", c.measure.gamma},
             {"K_max", c.measure.K_max},
             {"per_axis", c.measure.per_axis},
             {"select_omega", c.measure.select_omega}}},
           {"dynamics",
            {{"enabled", c.dynamics.enabled},
             {"x0_modes", c.dynamics.x0_modes},
             {"periods", c.dynamics.periods},
             {"dt", c.dynamics.dt},
             {"samples", c.dynamics.samples},
             {"sobolev_s", c.dynamics.sobolev_s}}},
           {"seed", c.seed},
           {"output_dir", c.output_dir}};
}

void from_json(const json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
  if (!j.contains("schema_version")) throw Error(ErrorCode::Config, "config: missing schema_version");
  c.schema_version = j.at("schema_version").get<int>();
  if (c.schema_version != kSchemaVersion) {
    throw Error(ErrorCode::Config, "config: unsupported schema_version " + std::to_string(c.schema_version));
  }
  static const char* known[] = {"schema_version", "potential", "grid",     "N",        "J",    "K_phi",     "n_freq",
                                "perturbation",   "schedule",  "omega",    "measure",  "dynamics", "seed", "output_dir"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw Error(ErrorCode::Config, "config: unknown key \"" + key + "\"");
    }
  }
  if (j.contains("potential")) c.potential = j.at("potential").get<PotentialSpec>();
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (g.is_string() && g.get<std::string>() == "auto") {
      c.auto_grid = true;
    } else {
      c.auto_grid = false;
      c.grid.L = g.at("L").get<double>();
      c.grid.n_pts = g.at("n_pts").get<int>();
    }
  }
  c.N = j.value("N", c.N);
  c.J = j.value("J", c.J);
  c.K_phi = j.value("K_phi", c.K_phi);
  c.n_freq = j.value("n_freq", c.n_freq);
  c.perturbation = j.contains("perturbation") ? perturbation_from(j.at("perturbation"))
                                              : default_perturbation(1.0, 1e-3, c.n_freq);
  if (j.contains("schedule")) c.schedule = schedule_from(j.at("schedule"));
  c.omega = j.value("omega", c.omega);
  if (j.contains("measure")) {
    const json& m = j.at("measure");
    c.measure.enabled = m.value("enabled", c.measure.enabled);
    c.measure.gamma = m.value("gamma", c.measure.gamma);
    c.measure.K_max = m.value("K_max", c.measure.K_max);
    c.measure.per_axis = m.value("per_axis", c.measure.per_axis);
    c.measure.select_omega = m.value("select_omega", c.measure.select_omega);
  }
  if (j.contains("dynamics")) {
    const json& d = j.at("dynamics");
    c.dynamics.enabled = d.value("enabled", c.dynamics.enabled);
    c.dynamics.x0_modes = d.value("x0_modes", c.dynamics.x0_modes);
    c.dynamics.periods = d.value("periods", c.dynamics.periods);
    c.dynamics.dt = d.value("dt", c.dynamics.dt);
    c.dynamics.samples = d.value("samples", c.dynamics.samples);
    c.dynamics.sobolev_s = d.value("sobolev_s", c.dynamics.sobolev_s);
  }
  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", c.output_dir);
}

void ExperimentConfig::validate() const {
  const Threshold th = threshold(potential.ell);
  const double mu = perturbation.mu;
  if (!(mu < th.value)) {
    std::ostringstream os;
    os.precision(6);
    os << "config: mu = " << mu << " must be below " << th.value << " at ell = " << potential.ell;
    throw Error(ErrorCode::Config, os.str());
  }
  if (!(perturbation.eps >= 0.0)) throw Error(ErrorCode::Config, "config: eps must be >= 0");
  if (N < 1 || J < N) throw Error(ErrorCode::Config, "config: need 1 <= N <= J");
  if (K_phi < 1) throw Error(ErrorCode::Config, "config: K_phi must be >= 1");
  if (n_freq < 1) throw Error(ErrorCode::Config, "config: n_freq must be >= 1");
  if (static_cast<int>(omega.size()) != n_freq) throw Error(ErrorCode::Config, "config: omega must have n_freq entries");
  for (const TrigTerm& t : perturbation.terms) {
    if (static_cast<int>(t.l.size()) != n_freq) throw Error(ErrorCode::Config, "config: term phi-mode length != n_freq");
    if (t.kx.size() != perturbation.nu.size()) throw Error(ErrorCode::Config, "config: term kx length != nu length");
  }
  if (!auto_grid) grid.validate();
  if (measure.enabled && (measure.per_axis < 2 || !(measure.gamma > 0.0))) {
    throw Error(ErrorCode::Config, "config: measure needs per_axis >= 2 and gamma > 0");
  }
  if (dynamics.enabled) {
    if (dynamics.x0_modes.empty()) throw Error(ErrorCode::Config, "config: dynamics.x0_modes is empty");
    for (int m : dynamics.x0_modes) {
      if (m < 1 || m > N) throw Error(ErrorCode::Config, "config: dynamics.x0_modes entry outside 1..N");
    }
    if (!(dynamics.dt > 0.0) || !(dynamics.periods > 0.0) || dynamics.samples < 1) {
      throw Error(ErrorCode::Config, "config: dynamics needs dt > 0, periods > 0, samples >= 1");
    }
    if (!(std::abs(omega[0]) > 0.0)) throw Error(ErrorCode::Config, "config: dynamics needs omega_1 != 0");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  try {
    c = json::parse(text).get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) { return json(c).dump(2) + "\n"; }

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

json error_json(const std::exception& e) {
  json j{{"message", e.what()}};
  if (const auto* se = dynamic_cast<const StageError*>(&e)) {
    j["error"] = std::string(to_string(se->code()));
    j["stage"] = se->stage();
    if (!se->details().is_null()) j["details"] = se->details();
  } else if (const auto* ke = dynamic_cast<const Error*>(&e)) {
    j["error"] = std::string(to_string(ke->code()));
  } else {
    j["error"] = "internal";
  }
  return j;
}

// ---- reports

void write_levels_csv(std::ostream& os, const IterationResult& r) {
  os << "l,eps_l,norm_Pl,s_l,K_l,min_divisor,contraction,hermitian_defect,drift_ok\n";
  os.precision(17);
  for (const LevelReport& L : r.levels) {
    os << L.l << ',' << L.eps_sched << ',' << L.norm_P << ',' << L.s << ',' << L.K << ',' << L.min_divisor << ','
       << L.contraction << ',' << L.hermitian_defect << ',' << (L.drift_ok ? 1 : 0) << '\n';
  }
}

json iteration_json(const IterationResult& r, double residual) {
  json levels = json::array();
  for (const LevelReport& L : r.levels) {
    levels.push_back({{"l", L.l},
                      {"eps_l", L.eps_sched},
                      {"norm_Pl", L.norm_P},
                      {"s_l", L.s},
                      {"K_l", L.K},
                      {"min_divisor", L.min_divisor},
                      {"contraction", L.contraction}});
  }
  return json{{"levels", levels},
              {"lambdas_inf", r.lambdas_inf},
              {"reducibility_residual", residual},
              {"U_deviation", r.U_deviation},
              {"unitarity_defect", r.unitarity},
              {"stop_reason", r.stop_reason},
              {"flags", r.flags},
              {"a3", r.a3},
              {"schedule_C", r.schedule_C}};
}

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ResonanceError& e) {
    json list = json::array();
    for (const Resonance& r : e.resonances()) {
      list.push_back({{"i", r.i}, {"j", r.j}, {"l", r.l}, {"divisor", r.divisor}});
    }
    throw StageError(name, e, json{{"resonances", list}});
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << text;
}

}  // namespace

ExperimentReport run(const ExperimentConfig& config) {
  stage("config", [&] { config.validate(); });
  const Threshold th = threshold(config.potential.ell);
  ExperimentReport rep;
  json& out = rep.json;
  out["config"] = config;
  out["threshold"] = {{"value", th.value}, {"branch", th.branch}};

  const Potential V = stage("potential", [&] { return Potential(config.potential); });
  const SpectralBasis basis = stage("spectrum", [&] {
    const Grid g = config.auto_grid ? auto_grid(V, config.J) : config.grid;
    return solve_spectrum(V, g, config.J);
  });
  {
    std::ostringstream os;
    write_eigenvalues_csv(os, basis);
    rep.eigenvalues_csv = os.str();
    json sp{{"grid", {{"L", basis.grid.L}, {"n_pts", basis.grid.n_pts}}}, {"lambdas", basis.lambdas}};
    if (config.J >= 16) {
      const WeylFit wf = weyl_fit(basis, config.J / 4, config.J);
      sp["weyl_exponent"] = wf.exponent;
      sp["weyl_prefactor"] = wf.prefactor;
    }
    out["spectrum"] = sp;
  }

  std::vector<double> omega = config.omega;
  const Problem pb = stage("assembly", [&] {
    return assemble_problem(basis, config.potential.ell, config.perturbation, config.N, config.n_freq, config.K_phi);
  });
  out["problem"] = {{"beta", pb.beta},
                    {"norm_beta", pb.norm_beta},
                    {"b3_surrogate", pb.b3_surrogate},
                    {"delta", pb.delta},
                    {"diophantine_margin", pb.diophantine}};

  if (config.measure.enabled) {
    const auto grid = omega_grid(config.n_freq, config.measure.per_axis);
    const FilterResult fr = stage("measure", [&] {
      return resonance_filter(pb.lambdas, grid, config.measure.gamma, config.schedule.tau, config.measure.K_max, spectral_iota(config.potential.ell));
    });
    out["measure"] = {{"accepted", fr.accepted.size()},
                      {"grid_points", grid.size()},
                      {"excluded_fraction", fr.excluded_fraction},
                      {"excluded_measure", fr.excluded_measure}};
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < config.n_freq; ++i) os << "omega" << i + 1 << ',';
    os << "accepted\n";
    for (size_t g = 0; g < grid.size(); ++g) {
      for (double w : grid[g]) os << w << ',';
      os << (fr.excluded[g] ? 0 : 1) << '\n';
    }
    rep.measure_csv = os.str();
    if (config.measure.select_omega) {
      double best = INFINITY;
      for (int g : fr.accepted) {
        double d = 0.0;
        for (int i = 0; i < config.n_freq; ++i) d += std::pow(grid[g][i] - config.omega[i], 2);
        if (d < best) {
          best = d;
          omega = grid[g];
        }
      }
      out["measure"]["selected_omega"] = omega;
    }
  }

  IterationSchedule sched = config.schedule;
  sched.beta = pb.beta;
  sched.iota = spectral_iota(config.potential.ell);
  const IterationResult it = stage("kam", [&] { return run_iteration(pb, omega, sched); });
  const double residual = stage("kam", [&] {
    return reducibility_residual(it.U, it.lambdas_inf, it.mus_inf, pb, omega,
                                 torus_samples(config.n_freq, config.n_freq == 1 ? 16 : 6));
  });
  out["kam"] = iteration_json(it, residual);
  out["kam"]["omega"] = omega;
  {
    std::ostringstream os;
    write_levels_csv(os, it);
    rep.levels_csv = os.str();
  }

  if (config.dynamics.enabled) {
    const DynamicsConfig& dc = config.dynamics;
    Eigen::VectorXcd x0 = Eigen::VectorXcd::Zero(config.N);
    for (int m : dc.x0_modes) x0(m - 1) += 1.0;
    x0.normalize();
    const double T = dc.periods * 2.0 * M_PI / std::abs(omega[0]);
    const FlowComparison cmp = stage("dynamics", [&] {
      DirectOptions opts;
      opts.samples = dc.samples;
      opts.sobolev_s = dc.sobolev_s;
      const Trajectory d = evolve_direct(pb.lambdas, pb.P, omega, x0, T, dc.dt, opts);
      const Trajectory y = evolve_reduced(it.lambdas_inf, it.mus_inf, omega, reduced_initial(it.U, x0), d.times,
                                          dc.sobolev_s);
      const FlowComparison c = compare_flows(d, y, it.U, omega);
      std::ostringstream os;
      write_flow_csv(os, d, c);
      rep.flow_csv = os.str();
      out["dynamics"] = {{"T", T}, {"dt_used", d.dt_used}, {"norm_drift", d.norm_drift}};
      return c;
    });
    out["dynamics"]["max_deviation"] = cmp.max_deviation;
    out["dynamics"]["sobolev_s"] = cmp.sobolev_s;
    out["dynamics"]["sobolev_sup"] = cmp.sobolev_sup;
  }

  if (!config.output_dir.empty()) {
    stage("output", [&] {
      namespace fs = std::filesystem;
      const fs::path dir(config.output_dir);
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
      write_file(dir / "report.json", dump_report(out));
      write_file(dir / "eigenvalues.csv", rep.eigenvalues_csv);
      write_file(dir / "levels.csv", rep.levels_csv);
      if (!rep.measure_csv.empty()) write_file(dir / "measure.csv", rep.measure_csv);
      if (!rep.flow_csv.empty()) write_file(dir / "flow.csv", rep.flow_csv);
    });
  }
  return rep;
}

}  // namespace kamred
