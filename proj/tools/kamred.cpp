// kamred command line: one subcommand per pipeline stage plus the full run.
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kamred/dynamics.hpp"
#include "kamred/harness.hpp"
#include "kamred/langer.hpp"
#include "kamred/oscint.hpp"

using namespace kamred;
using nlohmann::json;

namespace {

// "-" or empty: stdout
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PotentialFlags {
  double ell = 2.0;
  double c0 = 1.0;
  double R0 = 1.0;
};

void add_potential(CLI::App* app, PotentialFlags& p) {
  app->add_option("--ell", p.ell, "growth exponent, V ~ c0 |x|^{2 ell}")->capture_default_str();
  app->add_option("--c0", p.c0, "leading coefficient")->capture_default_str();
  app->add_option("--R0", p.R0, "radius of the inner blend")->capture_default_str();
}

PotentialSpec spec_of(const PotentialFlags& p) { return PotentialSpec::monomial(p.ell, p.c0, p.R0); }

struct KamFlags {
  PotentialFlags pot;
  double mu = 1.0, eps = 1e-3;
  int N = 40, n_freq = 1, kphi = 8, lmax = 8, omega_grid = 0;
  std::vector<double> omega;
  double gamma = 0.05, tau = 8.0, stop_tol = 1e-10;
  std::string out, csv;
};

ExperimentConfig kam_config(const KamFlags& f) {
  ExperimentConfig c;
  c.potential = spec_of(f.pot);
  c.N = f.N;
  c.J = f.N + 10;
  c.K_phi = f.kphi;
  c.n_freq = f.n_freq;
  c.perturbation = default_perturbation(f.mu, f.eps, f.n_freq);
  c.schedule.tau = f.tau;
  c.schedule.stop_tol = f.stop_tol;
  c.schedule.l_max = f.lmax;
  if (!f.omega.empty()) {
    c.omega = f.omega;
  } else {
    c.omega.assign(f.n_freq, 0.0);
    for (int i = 0; i < f.n_freq; ++i) c.omega[i] = std::fmod(0.6180339887498949 * (i + 1), 1.0);
  }
  if (f.omega_grid > 0) {
    c.measure.enabled = true;
    c.measure.select_omega = true;
    c.measure.per_axis = f.omega_grid;
    c.measure.gamma = f.gamma;
  }
  c.validate();
  return c;
}

std::vector<int> parse_modes(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw Error(ErrorCode::Validation, "--x0: expected comma-separated mode indices, got \"" + s + "\"");
    }
  }
  return out;
}

void print_error(const json& j) { std::cerr << j.dump() << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reducibility experiments for 1-D Schroedinger operators with quasi-periodic perturbations"};
  app.require_subcommand(1);
  std::function<void()> action;

  // spectrum
  PotentialFlags sp_pot;
  int sp_J = 50, sp_ppw = 40;
  double sp_L = 0.0;
  int sp_npts = 0;
  std::string sp_out, sp_funcs;
  auto* sp = app.add_subcommand("spectrum", "eigenvalues of -d^2/dx^2 + V (CSV j,lambda)");
  add_potential(sp, sp_pot);
  sp->add_option("--J", sp_J, "number of eigenpairs")->capture_default_str();
  sp->add_option("--L", sp_L, "half-width of the grid (0: automatic)");
  sp->add_option("--npts", sp_npts, "grid points (with --L)");
  sp->add_option("--ppw", sp_ppw, "points per wavelength for the automatic grid")->capture_default_str();
  sp->add_option("--out", sp_out, "eigenvalue CSV (default stdout)");
  sp->add_option("--eigenfunctions", sp_funcs, "also write eigenfunctions CSV here");
  sp->callback([&] {
    action = [&] {
      const Potential V(spec_of(sp_pot));
      const Grid g = sp_L > 0.0 ? Grid{sp_L, sp_npts > 0 ? sp_npts : 4001} : auto_grid(V, sp_J, sp_ppw);
      const SpectralBasis b = solve_spectrum(V, g, sp_J);
      std::ostringstream os;
      write_eigenvalues_csv(os, b);
      emit(sp_out, os.str());
      if (!sp_funcs.empty()) {
        std::ostringstream fs;
        write_eigenfunctions_csv(fs, b);
        emit(sp_funcs, fs.str());
      }
    };
  });

  // langer-check
  PotentialFlags la_pot;
  int la_nmin = 10, la_nmax = 80, la_step = 10, la_ppw = 60;
  std::string la_out;
  auto* la = app.add_subcommand("langer-check", "Langer approximation errors and turning-point constants (CSV)");
  add_potential(la, la_pot);
  la->add_option("--nmin", la_nmin)->capture_default_str();
  la->add_option("--nmax", la_nmax)->capture_default_str();
  la->add_option("--nstep", la_step)->capture_default_str();
  la->add_option("--ppw", la_ppw, "points per wavelength")->capture_default_str();
  la->add_option("--out", la_out, "CSV path (default stdout)");
  la->callback([&] {
    action = [&] {
      if (la_step < 1 || la_nmin < 1 || la_nmax < la_nmin) throw Error(ErrorCode::Validation, "need 1 <= nmin <= nmax, nstep >= 1");
      const Potential V(spec_of(la_pot));
      std::vector<int> ns;
      for (int n = la_nmin; n <= la_nmax; n += la_step) ns.push_back(n);
      const auto rows = langer_check(V, ns, la_ppw);
      std::ostringstream os;
      write_langer_csv(os, rows);
      emit(la_out, os.str());
    };
  });

  // oscint-scan
  PotentialFlags os_pot;
  double os_mu = 1.0, os_k = 1.0;
  int os_nmin = 20, os_nmax = 60;
  std::vector<int> os_offsets{0, 1, 2, 5};
  std::string os_out;
  auto* osc = app.add_subcommand("oscint-scan", "matrix elements of <x>^mu e^{ikx} along (n-d, n) lines (CSV)");
  add_potential(osc, os_pot);
  osc->add_option("--mu", os_mu)->capture_default_str();
  osc->add_option("--k", os_k)->capture_default_str();
  osc->add_option("--nmin", os_nmin)->capture_default_str();
  osc->add_option("--nmax", os_nmax)->capture_default_str();
  osc->add_option("--diag-offsets", os_offsets)->delimiter(',')->capture_default_str();
  osc->add_option("--out", os_out, "CSV path (default stdout)");
  osc->callback([&] {
    action = [&] {
      const Potential V(spec_of(os_pot));
      const SpectralBasis b = solve_spectrum(V, auto_grid(V, os_nmax), os_nmax);
      const auto rows = oscint_scan(WeightSpec::bracket(os_mu), os_k, os_pot.ell, b, os_nmin, os_nmax, os_offsets);
      std::ostringstream os;
      write_scan_csv(os, rows);
      emit(os_out, os.str());
    };
  });

  // kam-run
  KamFlags kf;
  auto* kr = app.add_subcommand("kam-run", "KAM reducibility iteration (JSON report, per-level CSV)");
  add_potential(kr, kf.pot);
  kr->add_option("--mu", kf.mu)->capture_default_str();
  kr->add_option("--eps", kf.eps)->capture_default_str();
  kr->add_option("--N", kf.N, "truncation size")->capture_default_str();
  kr->add_option("--n-freq", kf.n_freq)->capture_default_str();
  kr->add_option("--kphi", kf.kphi, "Fourier cutoff in phi")->capture_default_str();
  auto* om = kr->add_option("--omega", kf.omega, "frequency vector")->delimiter(',');
  kr->add_option("--omega-grid", kf.omega_grid, "pick omega from the accepted points of this grid (per axis)")
      ->excludes(om);
  kr->add_option("--gamma", kf.gamma, "Melnikov constant for --omega-grid")->capture_default_str();
  kr->add_option("--tau", kf.tau)->capture_default_str();
  kr->add_option("--stop-tol", kf.stop_tol)->capture_default_str();
  kr->add_option("--lmax", kf.lmax)->capture_default_str();
  kr->add_option("--out", kf.out, "JSON report path (default stdout)");
  kr->add_option("--csv", kf.csv, "per-level CSV path");
  kr->callback([&] {
    action = [&] {
      const ExperimentReport r = run(kam_config(kf));
      emit(kf.out, dump_report(r.json));
      if (!kf.csv.empty()) emit(kf.csv, r.levels_csv);
    };
  });

  // measure
  PotentialFlags me_pot;
  int me_N = 20, me_kmax = 30, me_per_axis = 100001, me_nfreq = 1;
  double me_gamma = 0.05, me_tau = 8.0, me_iota = 0.0;
  std::string me_out, me_summary;
  auto* me = app.add_subcommand("measure", "accepted/excluded frequencies on a grid (CSV)");
  add_potential(me, me_pot);
  me->add_option("--N", me_N)->capture_default_str();
  me->add_option("--n-freq", me_nfreq)->capture_default_str();
  me->add_option("--gamma", me_gamma)->capture_default_str();
  me->add_option("--tau", me_tau)->capture_default_str();
  me->add_option("--kmax", me_kmax)->capture_default_str();
  me->add_option("--per-axis", me_per_axis)->capture_default_str();
  me->add_option("--iota", me_iota, "gap exponent (0: 2 ell/(ell+1))");
  me->add_option("--out", me_out, "CSV path (default stdout)");
  me->add_option("--summary", me_summary, "JSON summary path");
  me->callback([&] {
    action = [&] {
      const Potential V(spec_of(me_pot));
      const SpectralBasis b = solve_spectrum(V, auto_grid(V, me_N), me_N);
      const double iota = me_iota > 0.0 ? me_iota : spectral_iota(me_pot.ell);
      const auto grid = omega_grid(me_nfreq, me_per_axis);
      const FilterResult fr = resonance_filter(b.lambdas, grid, me_gamma, me_tau, me_kmax, iota);
      std::ostringstream os;
      os.precision(17);
      for (int i = 0; i < me_nfreq; ++i) os << "omega" << i + 1 << ',';
      os << "accepted\n";
      for (size_t g = 0; g < grid.size(); ++g) {
        for (double w : grid[g]) os << w << ',';
        os << (fr.excluded[g] ? 0 : 1) << '\n';
      }
      emit(me_out, os.str());
      if (!me_summary.empty()) {
        emit(me_summary, json{{"gamma", me_gamma},
                              {"tau", me_tau},
                              {"K_max", me_kmax},
                              {"iota", iota},
                              {"grid_points", grid.size()},
                              {"accepted", fr.accepted.size()},
                              {"excluded_fraction", fr.excluded_fraction},
                              {"excluded_measure", fr.excluded_measure}}
                                 .dump(2) + "\n");
      }
    };
  });

  // dynamics
  std::string dy_from, dy_x0 = "4", dy_out;
  double dy_T = -1.0, dy_dt = 0.02;
  std::vector<double> dy_s{1.0, 2.0};
  auto* dy = app.add_subcommand("dynamics", "direct vs reduced flow for a kam-run report (CSV)");
  dy->add_option("--from-run", dy_from, "report written by kam-run or run")->required();
  dy->add_option("--x0", dy_x0, "initial state: comma-separated 1-based basis indices, normalized sum")
      ->capture_default_str();
  dy->add_option("--T", dy_T, "time horizon (default 1000 periods 2 pi/omega_1)");
  dy->add_option("--dt", dy_dt)->capture_default_str();
  dy->add_option("--sobolev-s", dy_s)->delimiter(',')->capture_default_str();
  dy->add_option("--out", dy_out, "CSV path (default stdout)");
  dy->callback([&] {
    action = [&] {
      json rep;
      try {
        rep = json::parse(read_file(dy_from));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("--from-run: ") + e.what());
      }
      if (!rep.contains("config")) throw Error(ErrorCode::Config, "--from-run: report has no config block");
      ExperimentConfig c = rep.at("config").get<ExperimentConfig>();
      if (rep.contains("kam") && rep["kam"].contains("omega")) {
        c.omega = rep["kam"]["omega"].get<std::vector<double>>();
        c.measure.enabled = false;
      }
      c.output_dir.clear();
      c.dynamics.enabled = true;
      c.dynamics.x0_modes = parse_modes(dy_x0);
      c.dynamics.dt = dy_dt;
      c.dynamics.sobolev_s = dy_s;
      if (dy_T > 0.0) c.dynamics.periods = dy_T * std::abs(c.omega.at(0)) / (2.0 * M_PI);
      c.validate();
      emit(dy_out, run(c).flow_csv);
    };
  });

  // run
  std::string ru_config, ru_out;
  auto* ru = app.add_subcommand("run", "full pipeline from a JSON config");
  ru->add_option("--config", ru_config, "experiment config (JSON)")->required();
  ru->add_option("--out", ru_out, "output directory (overrides output_dir)");
  ru->callback([&] {
    action = [&] {
      ExperimentConfig c = load_config(ru_config);
      if (!ru_out.empty()) c.output_dir = ru_out;
      const ExperimentReport r = run(c);
      if (c.output_dir.empty()) std::cout << dump_report(r.json);
    };
  });

  // threshold
  double th_ell = 2.0;
  auto* th = app.add_subcommand("threshold", "admissible bound on mu for a given ell (JSON)");
  th->add_option("--ell", th_ell)->required();
  th->callback([&] {
    action = [&] {
      const Threshold t = threshold(th_ell);
      std::cout << json{{"ell", th_ell}, {"threshold", t.value}, {"branch", t.branch}}.dump(2) << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error({{"error", "usage"}, {"message", e.what()}});
    return 2;
  }
  try {
    action();
  } catch (const std::exception& e) {
    print_error(error_json(e));
    return 1;
  }
  return 0;
}
