#pragma once

#include "vemstokes/estimator.hpp"
#include "vemstokes/polymesh.hpp"
#include "vemstokes/system.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vemstokes {

/// Maximum marking: cells with eta_K >= theta * max eta. Returns ascending
/// cell indices; empty when every indicator is zero.
std::vector<int> mark(const std::vector<double>& eta, double theta = 0.5);

struct AdaptConfig {
  SystemConfig system;
  EstimatorOptions estimator;
  EigsOptions eigs;
  double theta = 0.5;
  int max_steps = 12;
  int dof_budget = 300000;
  std::optional<double> reference;  // exact lambda_1 for err and eff
};

struct AdaptRow {
  int step = 0;
  int cells = 0;
  int dofs = 0;  // total_dofs of the mesh
  double lambda1 = 0.0;
  double eta2 = 0.0;
  double theta2 = 0.0;
  double R2 = 0.0;
  double J2 = 0.0;
  std::optional<double> err;
  std::optional<double> eff;
};

/// Everything available after the estimate phase of one step.
struct AdaptStep {
  int step;
  const PolyMesh& mesh;
  const Discretization& disc;
  const EigenPair& pair;
  const IndicatorField& indicators;
};

struct AdaptHistory {
  std::vector<AdaptRow> rows;
  bool aborted = false;   // refinement or solve failed; rows are partial
  std::string failure;
};

/// Velocity DOFs including constrained ones plus one pressure per cell; the
/// count used for the history N column.
int total_dofs(const PolyMesh& mesh);

/// solve -> estimate -> mark -> refine, at most `max_steps` solves, stopping
/// early when the DOF budget would be exceeded or nothing is marked.
AdaptHistory adaptive_loop(const PolyMesh& initial, const AdaptConfig& config,
                           const std::function<void(const AdaptStep&)>& observer = {});

/// CSV with columns step,cells,dofs,lambda1,eta2,theta2,R2,J2,err,eff.
void write_history_csv(std::ostream& out, const AdaptHistory& history);

enum class Abscissa { MeshSize, CellCount };

struct ConvergenceFit {
  Abscissa kind = Abscissa::MeshSize;
  std::vector<double> x;
  std::vector<double> values;
  double rate = 0.0;          // t in lambda_i ~ lambda + C x_i^t (negative for cell counts)
  double constant = 0.0;      // C
  double extrapolated = 0.0;  // lambda
  double residual = 0.0;      // rms misfit of the model
  int iterations = 0;
  bool low_confidence = false;
};

/// Fits lambda_i ~ lambda + C x_i^t by successive substitution: for fixed
/// lambda, (t, log|C|) by log-log regression; for fixed (t, C), lambda by
/// averaging. Needs at least three distinct abscissae.
ConvergenceFit fit_order(const std::vector<double>& x, const std::vector<double>& values,
                         Abscissa kind = Abscissa::MeshSize);

/// Least-squares slope of log(err) against log(x).
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& err);

}  // namespace vemstokes
