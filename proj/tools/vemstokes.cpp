#include "vemstokes/experiments.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace vemstokes;

namespace {

struct MeshArgs {
  std::string domain = "square";
  std::string family = "t1";
  int N = 16;
  std::uint64_t seed = 42;
  std::string bc = "clamped";
  std::string mesh_file;
};

struct SolveArgs {
  MeshArgs mesh;
  double nu = 1.0;
  double alpha = 1.0;
  int k = 4;
  std::string vtk;
  std::string coo;
  std::optional<double> reference;
  std::string jump_nu = "on";
};

void add_mesh_options(CLI::App* app, MeshArgs& a) {
  app->add_option("--domain", a.domain, "square, unit_square, disk or lshape")->capture_default_str();
  app->add_option("--family", a.family, "t1..t5 or tri")->capture_default_str();
  app->add_option("--N", a.N, "mesh resolution")->capture_default_str();
  app->add_option("--seed", a.seed, "seed of the Voronoi families")->capture_default_str();
  app->add_option("--bc", a.bc, "clamped or mixed")->capture_default_str();
  app->add_option("--mesh", a.mesh_file, "read a plain-text mesh instead of generating one");
}

void add_solve_options(CLI::App* app, SolveArgs& a) {
  add_mesh_options(app, a.mesh);
  app->add_option("--nu", a.nu, "viscosity")->capture_default_str();
  app->add_option("--alpha", a.alpha, "stabilization scaling")->capture_default_str();
  app->add_option("--k", a.k, "number of eigenpairs")->capture_default_str();
  app->add_option("--vtk", a.vtk, "write the first eigenpair as VTK");
}

PolyMesh build_mesh(const MeshArgs& a) {
  const BoundaryCondition bc = parse_boundary_condition(a.bc);
  if (!a.mesh_file.empty()) {
    std::ifstream in(a.mesh_file);
    if (!in) throw std::runtime_error("cannot read " + a.mesh_file);
    return read_mesh(in).with_boundary_condition(bc);
  }
  return generate(parse_domain(a.domain), parse_family(a.family), a.N, a.seed).with_boundary_condition(bc);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

int cmd_mesh(const MeshArgs& a, const std::string& out) {
  const PolyMesh mesh = build_mesh(a);
  const MeshQualityReport q = quality(mesh);
  std::printf("cells %d vertices %d edges %d h %.6g area %.12g\n", mesh.num_cells(), mesh.num_vertices(),
              mesh.num_edges(), mesh.h(), mesh.total_area());
  std::printf("min rho/h %.6g min vertex spacing/h %.6g\n", q.min_kernel_radius_ratio, q.min_vertex_spacing_ratio);
  if (!out.empty()) {
    std::ofstream f = open_output(out);
    if (ends_with(out, ".vtk"))
      write_vtk(f, mesh);
    else
      write_mesh(f, mesh);
  }
  return 0;
}

int cmd_solve(const SolveArgs& a, bool estimate) {
  const PolyMesh mesh = build_mesh(a.mesh);
  SystemConfig system;
  system.vem.nu = a.nu;
  system.vem.alpha = a.alpha;
  system.bc = parse_boundary_condition(a.mesh.bc);
  const Discretization disc = assemble(mesh, system);
  const EigenSolution solution = solve_eigs(disc, estimate ? 1 : a.k);
  std::printf("cells %d system %d\n", mesh.num_cells(), disc.dofs.size());
  for (std::size_t i = 0; i < solution.pairs.size(); ++i)
    std::printf("lambda%zu %.10g residual %.3g\n", i + 1, solution.pairs[i].lambda, solution.pairs[i].residual);
  if (!a.coo.empty()) {
    std::ofstream fa = open_output(a.coo + "_A.txt");
    write_coo(fa, disc.system.A);
    std::ofstream fb = open_output(a.coo + "_B.txt");
    write_coo(fb, disc.system.B);
  }
  std::vector<double> eta2;
  if (estimate) {
    EstimatorOptions options;
    options.jump_nu = a.jump_nu != "off";
    const EigenPair& pair = solution.pairs.front();
    const IndicatorField f = global_estimate(disc, pair, options);
    std::printf("theta2 %.10g R2 %.10g J2 %.10g eta2 %.10g\n", f.total_theta2, f.total_R2, f.total_J2, f.total_eta2);
    if (a.reference) {
      std::printf("err %.10g eff %.10g\n", relative_error(*a.reference, pair.lambda),
                  effectivity(*a.reference, pair.lambda, f.total_eta2));
    }
    eta2 = f.eta2;
  }
  if (!a.vtk.empty()) {
    std::ofstream f = open_output(a.vtk);
    write_vtk(f, mesh, solution_fields(disc, solution.pairs.front(), eta2));
  }
  return 0;
}

std::vector<Family> parse_families(const std::vector<std::string>& names) {
  std::vector<Family> out;
  for (const auto& n : names) out.push_back(parse_family(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divergence-free virtual element Stokes eigenvalue solver"};
  app.require_subcommand(1);

  ExperimentSpec spec;
  std::string test = "1", bc, jump_nu = "on";
  std::vector<std::string> families;
  auto* run = app.add_subcommand("run", "run one of the benchmark experiments");
  run->add_option("--test", test, "1, 2, 3-sweep, 3-order or 4")->required();
  run->add_option("--family", families, "mesh families")->delimiter(',');
  run->add_option("--N", spec.N, "mesh resolutions (uniform levels for test 4)")->delimiter(',');
  run->add_option("--alpha", spec.alpha, "stabilization scalings")->delimiter(',');
  run->add_option("--nu", spec.nu, "viscosity")->capture_default_str();
  run->add_option("--bc", bc, "clamped or mixed");
  run->add_option("--k", spec.k, "eigenvalues per solve");
  run->add_option("--seed", spec.seed, "seed of the Voronoi families")->capture_default_str();
  run->add_option("--steps", spec.steps, "adaptive steps (test 4)")->capture_default_str();
  run->add_option("--start", spec.start, "initial cells per unit length (test 4)");
  run->add_option("--jump-nu", jump_nu, "include nu in the jump stress: on or off")->capture_default_str();
  run->add_option("--out", spec.out, "output directory")->capture_default_str();

  MeshArgs mesh_args;
  std::string mesh_out;
  auto* mesh = app.add_subcommand("mesh", "generate a mesh and report its quality");
  add_mesh_options(mesh, mesh_args);
  mesh->add_option("--out", mesh_out, "write .vtk or plain-text mesh");

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "solve for the lowest eigenpairs");
  add_solve_options(solve, solve_args);
  solve->add_option("--coo", solve_args.coo, "write the pencil as PREFIX_A.txt and PREFIX_B.txt");

  SolveArgs est_args;
  auto* est = app.add_subcommand("estimate", "solve and evaluate the error estimator for lambda1");
  add_solve_options(est, est_args);
  est->add_option("--reference", est_args.reference, "exact lambda1 for err and effectivity");
  est->add_option("--jump-nu", est_args.jump_nu, "include nu in the jump stress: on or off")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      spec.test = parse_test(test);
      spec.families = parse_families(families);
      if (!bc.empty()) spec.bc = parse_boundary_condition(bc);
      spec.jump_nu = jump_nu != "off";
      const RunReport report = vemstokes::run(spec);
      for (const auto& f : report.files) std::printf("wrote %s\n", f.c_str());
      if (report.failed) {
        std::fprintf(stderr, "failed: %s\n", report.failure.c_str());
        return 1;
      }
      return 0;
    }
    if (*mesh) return cmd_mesh(mesh_args, mesh_out);
    if (*solve) return cmd_solve(solve_args, false);
    if (*est) return cmd_solve(est_args, true);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
