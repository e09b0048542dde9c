#pragma once

#include "vemstokes/adapt.hpp"
#include "vemstokes/mesh_io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vemstokes {

enum class TestId { Test1, Test2, Test3Sweep, Test3Order, Test4 };

std::string to_string(TestId t);
TestId parse_test(const std::string& s);

/// Empty lists and unset fields take the per-test defaults of resolve().
struct ExperimentSpec {
  TestId test = TestId::Test1;
  std::vector<Family> families;
  std::vector<int> N;  // mesh parameters, or the uniform levels of test4
  double nu = 1.0;
  std::vector<double> alpha;
  std::optional<BoundaryCondition> bc;
  int k = 0;
  std::uint64_t seed = 42;
  int steps = 12;        // adaptive steps of test4
  int start = 0;         // initial cells per unit length of test4; 0 picks per family
  bool jump_nu = true;
  std::string out = ".";
};

/// Fills in the defaults and validates; throws std::invalid_argument.
ExperimentSpec resolve(ExperimentSpec spec);

/// Canonical one-line description of a resolved spec.
std::string canonical(const ExperimentSpec& spec);
/// 16 hex digits of the 64-bit FNV-1a hash of canonical(spec).
std::string config_hash(const ExperimentSpec& spec);

/// Formats a double with 10 significant digits.
std::string format_number(double v);

/// Nominal mesh size 1/N used as the abscissa of the order fits.
double nominal_h(int N);

struct SeriesResult {
  std::vector<int> N;
  std::vector<int> cells;
  std::vector<std::vector<double>> lambdas;  // [level][i]
  std::vector<ConvergenceFit> fits;          // per eigenvalue index
};

/// Lowest k eigenvalues on generate(domain, family, N, seed) for every N,
/// solved concurrently, with an order fit per eigenvalue index.
SeriesResult eigen_series(Domain domain, Family family, const std::vector<int>& N, const SystemConfig& system,
                          int k, std::uint64_t seed);

/// True where no entry of `reference` lies within `tolerance` relative.
std::vector<bool> suspect_flags(const std::vector<double>& values, const std::vector<double>& reference,
                                double tolerance = 0.02);

struct SweepResult {
  Family family = Family::T1;
  std::vector<double> alpha;
  std::vector<std::vector<double>> lambdas;  // [alpha][i]
  std::vector<std::vector<bool>> suspect;
};

inline constexpr double kSweepReferenceAlpha = 10.0;

/// k lowest eigenvalues on the unit square with mixed conditions for each
/// alpha; modes missing from the alpha = 10 spectrum are flagged.
SweepResult alpha_sweep(Family family, int N, const std::vector<double>& alpha, int k, double nu,
                        std::uint64_t seed);

struct UniformRow {
  int level = 0;  // cells per unit length
  int cells = 0;
  int dofs = 0;
  double lambda1 = 0.0;
  double err = 0.0;
};

inline constexpr double kLShapeReference = 32.1321;

/// Lowest eigenvalue on uniform T1 L-shape meshes.
std::vector<UniformRow> uniform_lshape(const std::vector<int>& levels, const SystemConfig& system,
                                       double reference = kLShapeReference);

/// Initial mesh of an adaptive L-shape run for the given family.
PolyMesh lshape_start(Family family, int level, std::uint64_t seed);

/// Vertex velocities and cell fields of one solved step for VTK output.
VtkFields solution_fields(const Discretization& disc, const EigenPair& pair, const std::vector<double>& eta2);

struct RunReport {
  std::vector<std::string> files;
  bool failed = false;
  std::string failure;
};

/// Runs one experiment and writes its CSV tables, VTK fields and run.log
/// under spec.out. Partial outputs are kept when a stage fails.
RunReport run(const ExperimentSpec& spec);

}  // namespace vemstokes
