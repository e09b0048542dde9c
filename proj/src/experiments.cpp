#include "vemstokes/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vemstokes {

namespace {

const std::vector<Family> kAllFamilies = {Family::T1, Family::T2, Family::T3, Family::T4, Family::T5};

template <class T>
std::string join(const std::vector<T>& values, const char* sep, auto&& fmt) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += sep;
    s += fmt(values[i]);
  }
  return s;
}

std::string family_list(const std::vector<Family>& f) {
  return join(f, ",", [](Family x) { return to_string(x); });
}

/// Default initial level of an adaptive L-shape run, chosen so the starting
/// DOF counts are close for every family.
int default_start(Family family) {
  switch (family) {
    case Family::Tri: return 13;
    case Family::T2:
    case Family::T3: return 8;
    default: return 9;
  }
}

class Output {
 public:
  Output(const ExperimentSpec& spec, RunReport& report)
      : dir_(spec.out), hash_(config_hash(spec)), report_(report) {
    std::filesystem::create_directories(dir_);
    log_.open(dir_ / "run.log");
    log_ << "spec " << canonical(spec) << "\nconfig_hash " << hash_ << '\n';
    report_.files.push_back((dir_ / "run.log").string());
  }

  std::ofstream open(const std::string& name) {
    const auto path = dir_ / name;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    report_.files.push_back(path.string());
    return f;
  }

  const std::string& hash() const { return hash_; }
  std::ofstream& log() { return log_; }

  /// Runs one stage; failures are logged and stop later stages.
  template <class F>
  bool stage(const std::string& name, F&& body) {
    if (report_.failed) return false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      report_.failed = true;
      report_.failure = name + ": " + e.what();
      log_ << "stage " << name << " failed: " << e.what() << std::endl;
      return false;
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", s);
    log_ << "stage " << name << " ok " << buf << " s" << std::endl;
    return true;
  }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  RunReport& report_;
  std::ofstream log_;
};

void series_csv_header(std::ostream& out, const std::string& key, const std::vector<int>& N) {
  out << "config_hash," << key << ",i";
  for (int n : N) out << ",N" << n;
  out << ",order,extr,low_confidence\n";
}

void series_csv_rows(std::ostream& out, const std::string& hash, const std::string& key, const SeriesResult& s) {
  for (std::size_t i = 0; i < s.fits.size(); ++i) {
    out << hash << ',' << key << ',' << i + 1;
    for (const auto& level : s.lambdas) out << ',' << format_number(level[i]);
    const ConvergenceFit& f = s.fits[i];
    out << ',' << format_number(f.rate) << ',' << format_number(f.extrapolated) << ',' << (f.low_confidence ? 1 : 0)
        << '\n';
  }
}

void run_series_test(const ExperimentSpec& spec, Output& out, Domain domain, const std::string& file) {
  std::ofstream csv = out.open(file);
  series_csv_header(csv, "family", spec.N);
  for (Family family : spec.families) {
    out.stage("series " + to_string(family), [&] {
      SystemConfig system;
      system.vem.nu = spec.nu;
      system.vem.alpha = spec.alpha.front();
      system.bc = *spec.bc;
      const SeriesResult s = eigen_series(domain, family, spec.N, system, spec.k, spec.seed);
      series_csv_rows(csv, out.hash(), to_string(family), s);
      csv.flush();
    });
  }
}

void run_sweep(const ExperimentSpec& spec, Output& out) {
  std::ofstream csv = out.open("test3_sweep.csv");
  csv << "config_hash,family,alpha,i,lambda,suspect\n";
  for (Family family : spec.families) {
    out.stage("sweep " + to_string(family), [&] {
      const SweepResult s = alpha_sweep(family, spec.N.front(), spec.alpha, spec.k, spec.nu, spec.seed);
      for (std::size_t a = 0; a < s.alpha.size(); ++a)
        for (std::size_t i = 0; i < s.lambdas[a].size(); ++i)
          csv << out.hash() << ',' << to_string(family) << ',' << format_number(s.alpha[a]) << ',' << i + 1 << ','
              << format_number(s.lambdas[a][i]) << ',' << (s.suspect[a][i] ? 1 : 0) << '\n';
      csv.flush();
    });
  }
}

void run_order(const ExperimentSpec& spec, Output& out) {
  std::ofstream csv = out.open("test3_order.csv");
  series_csv_header(csv, "family,alpha", spec.N);
  for (Family family : spec.families)
    for (double alpha : spec.alpha) {
      out.stage("order " + to_string(family) + " alpha " + format_number(alpha), [&] {
        SystemConfig system;
        system.vem.nu = spec.nu;
        system.vem.alpha = alpha;
        system.bc = BoundaryCondition::Mixed;
        const SeriesResult s = eigen_series(Domain::UnitSquare, family, spec.N, system, spec.k, spec.seed);
        series_csv_rows(csv, out.hash(), to_string(family) + ',' + format_number(alpha), s);
        csv.flush();
      });
    }
}

struct AdaptiveRun {
  Family family;
  AdaptHistory history;
  std::vector<std::pair<std::string, std::string>> vtk;  // name, contents
};

void run_lshape(const ExperimentSpec& spec, Output& out) {
  SystemConfig system;
  system.vem.nu = spec.nu;
  system.vem.alpha = spec.alpha.front();

  auto uniform = std::async(std::launch::async, [&] { return uniform_lshape(spec.N, system); });
  std::vector<std::future<AdaptiveRun>> adaptive;
  for (Family family : spec.families) {
    adaptive.push_back(std::async(std::launch::async, [&spec, system, family] {
      AdaptiveRun run{family, {}, {}};
      AdaptConfig config;
      config.system = system;
      config.estimator.jump_nu = spec.jump_nu;
      config.max_steps = spec.steps;
      config.reference = kLShapeReference;
      const int level = spec.start > 0 ? spec.start : default_start(family);
      run.history = adaptive_loop(lshape_start(family, level, spec.seed), config, [&](const AdaptStep& s) {
        std::ostringstream vtk;
        write_vtk(vtk, s.mesh, solution_fields(s.disc, s.pair, s.indicators.eta2),
                  "lshape " + to_string(family) + " step " + std::to_string(s.step));
        char name[64];
        std::snprintf(name, sizeof name, "test4_%s_step%02d.vtk", to_string(family).c_str(), s.step);
        run.vtk.emplace_back(name, vtk.str());
      });
      return run;
    }));
  }

  std::vector<UniformRow> rows;
  out.stage("uniform", [&] { rows = uniform.get(); });
  {
    std::ofstream csv = out.open("test4_uniform.csv");
    csv << "config_hash,level,cells,dofs,lambda1,err\n";
    for (const UniformRow& r : rows)
      csv << out.hash() << ',' << r.level << ',' << r.cells << ',' << r.dofs << ',' << format_number(r.lambda1) << ','
          << format_number(r.err) << '\n';
  }

  std::ofstream orders = out.open("test4_orders.csv");
  orders << "config_hash,scheme,slope_vs_cells,slope_vs_dofs,final_lambda1,reference\n";
  auto slope_row = [&](const std::string& scheme, const std::vector<double>& cells, const std::vector<double>& dofs,
                       const std::vector<double>& err, double last) {
    if (err.size() < 2) return;
    orders << out.hash() << ',' << scheme << ',' << format_number(fit_slope(cells, err).slope) << ','
           << format_number(fit_slope(dofs, err).slope) << ',' << format_number(last) << ','
           << format_number(kLShapeReference) << '\n';
  };
  {
    std::vector<double> cells, dofs, err;
    for (const UniformRow& r : rows) {
      cells.push_back(r.cells);
      dofs.push_back(r.dofs);
      err.push_back(r.err);
    }
    if (!rows.empty()) slope_row("uniform", cells, dofs, err, rows.back().lambda1);
  }

  for (auto& future : adaptive) {
    AdaptiveRun run;
    if (!out.stage("adaptive", [&] { run = future.get(); })) continue;
    const std::string name = to_string(run.family);
    {
      std::ofstream csv = out.open("test4_adaptive_" + name + ".csv");
      std::ostringstream body;
      write_history_csv(body, run.history);
      // Prefix every line with the provenance hash.
      std::istringstream lines(body.str());
      std::string line;
      bool header = true;
      while (std::getline(lines, line)) {
        csv << (header ? std::string("config_hash") : out.hash()) << ',' << line << '\n';
        header = false;
      }
    }
    for (const auto& [file, contents] : run.vtk) out.open(file) << contents;
    std::vector<double> cells, dofs, err;
    for (const AdaptRow& r : run.history.rows) {
      cells.push_back(r.cells);
      dofs.push_back(r.dofs);
      err.push_back(*r.err);
    }
    if (!run.history.rows.empty()) slope_row("adaptive_" + name, cells, dofs, err, run.history.rows.back().lambda1);
    if (run.history.aborted)
      out.stage("adaptive " + name, [&] { throw std::runtime_error(run.history.failure); });
  }
}

}  // namespace

std::string to_string(TestId t) {
  switch (t) {
    case TestId::Test1: return "1";
    case TestId::Test2: return "2";
    case TestId::Test3Sweep: return "3-sweep";
    case TestId::Test3Order: return "3-order";
    case TestId::Test4: return "4";
  }
  return "?";
}

TestId parse_test(const std::string& s) {
  if (s == "1" || s == "test1") return TestId::Test1;
  if (s == "2" || s == "test2") return TestId::Test2;
  if (s == "3-sweep" || s == "test3-sweep") return TestId::Test3Sweep;
  if (s == "3-order" || s == "test3-order") return TestId::Test3Order;
  if (s == "4" || s == "test4") return TestId::Test4;
  throw std::invalid_argument("unknown test '" + s + "'");
}

ExperimentSpec resolve(ExperimentSpec spec) {
  auto fill = [](auto& list, auto defaults) {
    if (list.empty()) list = defaults;
  };
  switch (spec.test) {
    case TestId::Test1:
      fill(spec.families, kAllFamilies);
      fill(spec.N, std::vector<int>{16, 32, 64});
      fill(spec.alpha, std::vector<double>{1.0});
      if (spec.k == 0) spec.k = 4;
      if (!spec.bc) spec.bc = BoundaryCondition::Clamped;
      break;
    case TestId::Test2:
      fill(spec.families, std::vector<Family>{Family::T2});
      fill(spec.N, std::vector<int>{16, 32, 64});
      fill(spec.alpha, std::vector<double>{1.0});
      if (spec.k == 0) spec.k = 5;
      if (!spec.bc) spec.bc = BoundaryCondition::Clamped;
      break;
    case TestId::Test3Sweep:
      fill(spec.families, std::vector<Family>{Family::T1, Family::T2, Family::T5});
      fill(spec.N, std::vector<int>{11});
      fill(spec.alpha, std::vector<double>{0.1, 0.2, 1.0, 5.0, 10.0});
      if (spec.k == 0) spec.k = 10;
      if (!spec.bc) spec.bc = BoundaryCondition::Mixed;
      break;
    case TestId::Test3Order:
      fill(spec.families, std::vector<Family>{Family::T1});
      fill(spec.N, std::vector<int>{32, 64, 128});
      fill(spec.alpha, std::vector<double>{1.0 / 16, 0.25, 1.0, 4.0, 16.0});
      if (spec.k == 0) spec.k = 5;
      if (!spec.bc) spec.bc = BoundaryCondition::Mixed;
      break;
    case TestId::Test4:
      fill(spec.families, std::vector<Family>{Family::T1, Family::Tri, Family::T2});
      fill(spec.N, std::vector<int>{10, 20, 40, 80});
      fill(spec.alpha, std::vector<double>{1.0});
      if (spec.k == 0) spec.k = 1;
      if (!spec.bc) spec.bc = BoundaryCondition::Clamped;
      break;
  }
  if (!(spec.nu > 0)) throw std::invalid_argument("nu must be positive");
  if (spec.k < 1) throw std::invalid_argument("k must be at least 1");
  for (double a : spec.alpha)
    if (!(a > 0)) throw std::invalid_argument("alpha must be positive");
  for (int n : spec.N)
    if (n < 2) throw std::invalid_argument("N must be at least 2");
  const bool series = spec.test == TestId::Test1 || spec.test == TestId::Test2 || spec.test == TestId::Test3Order;
  if (series && spec.N.size() < 3) throw std::invalid_argument("order fits need at least three N values");
  if (spec.test == TestId::Test2)
    for (Family f : spec.families)
      if (f != Family::T2 && f != Family::T3) throw std::invalid_argument("the disk needs a Voronoi family (t2, t3)");
  if (spec.test == TestId::Test3Sweep || spec.test == TestId::Test3Order) spec.bc = BoundaryCondition::Mixed;
  if (spec.test == TestId::Test4) spec.bc = BoundaryCondition::Clamped;
  if (spec.steps < 1) throw std::invalid_argument("steps must be at least 1");
  return spec;
}

std::string canonical(const ExperimentSpec& spec) {
  std::ostringstream s;
  s << "test=" << to_string(spec.test) << ";families=" << family_list(spec.families)
    << ";N=" << join(spec.N, ",", [](int n) { return std::to_string(n); }) << ";nu=" << format_number(spec.nu)
    << ";alpha=" << join(spec.alpha, ",", format_number) << ";bc=" << (spec.bc ? to_string(*spec.bc) : "default")
    << ";k=" << spec.k << ";seed=" << spec.seed;
  if (spec.test == TestId::Test4) s << ";steps=" << spec.steps << ";start=" << spec.start << ";jump_nu=" << spec.jump_nu;
  return s.str();
}

std::string config_hash(const ExperimentSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical(spec)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double nominal_h(int N) { return 1.0 / N; }

SeriesResult eigen_series(Domain domain, Family family, const std::vector<int>& N, const SystemConfig& system,
                          int k, std::uint64_t seed) {
  struct Level {
    int cells;
    std::vector<double> lambdas;
  };
  std::vector<std::future<Level>> jobs;
  for (int n : N)
    jobs.push_back(std::async(std::launch::async, [=] {
      PolyMesh mesh = generate(domain, family, n, seed).with_boundary_condition(system.bc);
      const Discretization disc = assemble(mesh, system);
      return Level{mesh.num_cells(), solve_eigs(disc, k).eigenvalues()};
    }));

  SeriesResult result;
  result.N = N;
  for (auto& job : jobs) {
    Level level = job.get();
    if (static_cast<int>(level.lambdas.size()) < k) throw std::runtime_error("eigensolver returned too few pairs");
    result.cells.push_back(level.cells);
    result.lambdas.push_back(std::move(level.lambdas));
  }
  std::vector<double> h;
  for (int n : N) h.push_back(nominal_h(n));
  for (int i = 0; i < k; ++i) {
    std::vector<double> values;
    for (const auto& level : result.lambdas) values.push_back(level[i]);
    result.fits.push_back(fit_order(h, values, Abscissa::MeshSize));
  }
  return result;
}

std::vector<bool> suspect_flags(const std::vector<double>& values, const std::vector<double>& reference,
                                double tolerance) {
  std::vector<bool> flags;
  for (double v : values) {
    const bool matched = std::any_of(reference.begin(), reference.end(),
                                     [&](double r) { return std::abs(v - r) <= tolerance * std::abs(r); });
    flags.push_back(!matched);
  }
  return flags;
}

SweepResult alpha_sweep(Family family, int N, const std::vector<double>& alpha, int k, double nu,
                        std::uint64_t seed) {
  const PolyMesh mesh = generate(Domain::UnitSquare, family, N, seed).with_boundary_condition(BoundaryCondition::Mixed);
  std::vector<double> all = alpha;
  if (std::find(all.begin(), all.end(), kSweepReferenceAlpha) == all.end()) all.push_back(kSweepReferenceAlpha);

  std::vector<std::future<std::vector<double>>> jobs;
  for (double a : all)
    jobs.push_back(std::async(std::launch::async, [&mesh, a, k, nu] {
      SystemConfig system;
      system.vem.nu = nu;
      system.vem.alpha = a;
      system.bc = BoundaryCondition::Mixed;
      return solve_eigs(assemble(mesh, system), k).eigenvalues();
    }));
  std::map<double, std::vector<double>> spectra;
  for (std::size_t i = 0; i < all.size(); ++i) spectra[all[i]] = jobs[i].get();

  SweepResult result;
  result.family = family;
  result.alpha = alpha;
  const std::vector<double>& reference = spectra[kSweepReferenceAlpha];
  for (double a : alpha) {
    result.lambdas.push_back(spectra[a]);
    result.suspect.push_back(suspect_flags(spectra[a], reference));
  }
  return result;
}

std::vector<UniformRow> uniform_lshape(const std::vector<int>& levels, const SystemConfig& system, double reference) {
  std::vector<std::future<UniformRow>> jobs;
  for (int m : levels)
    jobs.push_back(std::async(std::launch::async, [=] {
      const PolyMesh mesh = generate(Domain::LShape, Family::T1, m);
      const Discretization disc = assemble(mesh, system);
      const double lambda = solve_eigs(disc, 1).pairs.front().lambda;
      return UniformRow{m, mesh.num_cells(), total_dofs(mesh), lambda, relative_error(reference, lambda)};
    }));
  std::vector<UniformRow> rows;
  for (auto& job : jobs) rows.push_back(job.get());
  return rows;
}

PolyMesh lshape_start(Family family, int level, std::uint64_t seed) {
  return generate(Domain::LShape, family, level, seed);
}

VtkFields solution_fields(const Discretization& disc, const EigenPair& pair, const std::vector<double>& eta2) {
  const PolyMesh& mesh = *disc.mesh;
  VtkFields fields;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    fields.point_vectors.emplace_back(pair.velocity[disc.dofs.vertex_dof(v, 0)], pair.velocity[disc.dofs.vertex_dof(v, 1)]);
  std::vector<double> pressure(pair.pressure.data(), pair.pressure.data() + pair.pressure.size());
  std::vector<double> ux(mesh.num_cells()), uy(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const LocalOperators& ops = disc.locals[c];
    const P1Coefficients coeffs = ops.Pi0 * cell_dofs(disc, c, pair.velocity);
    const Point u = eval_p1(ScaledMonomials(ops.centroid, ops.diameter), coeffs, ops.centroid);
    ux[c] = u.x();
    uy[c] = u.y();
  }
  fields.cell_scalars.emplace_back("pressure", std::move(pressure));
  fields.cell_scalars.emplace_back("pi0_velocity_x", std::move(ux));
  fields.cell_scalars.emplace_back("pi0_velocity_y", std::move(uy));
  if (!eta2.empty()) fields.cell_scalars.emplace_back("eta2", eta2);
  return fields;
}

RunReport run(const ExperimentSpec& raw) {
  const ExperimentSpec spec = resolve(raw);
  RunReport report;
  Output out(spec, report);
  switch (spec.test) {
    case TestId::Test1: run_series_test(spec, out, Domain::Square, "test1.csv"); break;
    case TestId::Test2: run_series_test(spec, out, Domain::Disk, "test2.csv"); break;
    case TestId::Test3Sweep: run_sweep(spec, out); break;
    case TestId::Test3Order: run_order(spec, out); break;
    case TestId::Test4: run_lshape(spec, out); break;
  }
  out.log() << "status " << (report.failed ? "failed: " + report.failure : std::string("ok")) << '\n';
  return report;
}

}  // namespace vemstokes
