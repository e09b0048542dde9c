#include "vemstokes/adapt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace vemstokes {

std::vector<int> mark(const std::vector<double>& eta, double theta) {
  if (eta.empty()) throw std::invalid_argument("empty indicator field");
  const double top = *std::max_element(eta.begin(), eta.end());
  std::vector<int> marked;
  if (!(top > 0.0)) return marked;
  const double threshold = theta * top;
  for (std::size_t c = 0; c < eta.size(); ++c)
    if (eta[c] >= threshold) marked.push_back(static_cast<int>(c));
  return marked;
}

int total_dofs(const PolyMesh& mesh) {
  return 2 * mesh.num_vertices() + mesh.num_edges() + mesh.num_cells();
}

AdaptHistory adaptive_loop(const PolyMesh& initial, const AdaptConfig& config,
                           const std::function<void(const AdaptStep&)>& observer) {
  AdaptHistory history;
  PolyMesh mesh = initial;
  for (int step = 0; step < config.max_steps; ++step) {
    try {
      const Discretization disc = assemble(mesh, config.system);
      if (step > 0 && disc.dofs.size() > config.dof_budget) break;
      const EigenSolution solution = solve_eigs(disc, 1, 0.0, config.eigs);
      const EigenPair& pair = solution.pairs.front();
      const IndicatorField indicators = global_estimate(disc, pair, config.estimator);

      AdaptRow row;
      row.step = step;
      row.cells = mesh.num_cells();
      row.dofs = total_dofs(mesh);
      row.lambda1 = pair.lambda;
      row.eta2 = indicators.total_eta2;
      row.theta2 = indicators.total_theta2;
      row.R2 = indicators.total_R2;
      row.J2 = indicators.total_J2;
      if (config.reference) {
        row.err = relative_error(*config.reference, pair.lambda);
        row.eff = effectivity(*config.reference, pair.lambda, indicators.total_eta2);
      }
      history.rows.push_back(row);
      if (observer) observer(AdaptStep{step, mesh, disc, pair, indicators});

      if (step + 1 == config.max_steps) break;
      const std::vector<int> marked = mark(indicators.eta(), config.theta);
      if (marked.empty()) break;
      mesh = refine(mesh, marked);
    } catch (const std::exception& e) {
      history.aborted = true;
      history.failure = e.what();
      break;
    }
  }
  return history;
}

void write_history_csv(std::ostream& out, const AdaptHistory& history) {
  out << "step,cells,dofs,lambda1,eta2,theta2,R2,J2,err,eff\n";
  out << std::setprecision(10);
  for (const AdaptRow& r : history.rows) {
    out << r.step << ',' << r.cells << ',' << r.dofs << ',' << r.lambda1 << ',' << r.eta2 << ',' << r.theta2 << ','
        << r.R2 << ',' << r.J2 << ',';
    if (r.err) out << *r.err;
    out << ',';
    if (r.eff) out << *r.eff;
    out << '\n';
  }
}

namespace {

struct LogLine {
  double slope;
  double intercept;
};

LogLine regress(const std::vector<double>& u, const std::vector<double>& v) {
  const double n = static_cast<double>(u.size());
  const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
  const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double suu = 0.0, suv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suu += (u[i] - mu) * (u[i] - mu);
    suv += (u[i] - mu) * (v[i] - mv);
  }
  if (suu == 0.0) throw std::invalid_argument("abscissae must be distinct");
  const double slope = suv / suu;
  return {slope, mv - slope * mu};
}

}  // namespace

ConvergenceFit fit_order(const std::vector<double>& x, const std::vector<double>& values, Abscissa kind) {
  if (x.size() != values.size()) throw std::invalid_argument("series lengths differ");
  if (x.size() < 3) throw std::invalid_argument("order fit needs at least three points");
  for (double xi : x)
    if (!(xi > 0.0)) throw std::invalid_argument("abscissae must be positive");

  // Sort by abscissa so the result does not depend on input order.
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  ConvergenceFit fit;
  fit.kind = kind;
  for (std::size_t i : idx) {
    fit.x.push_back(x[i]);
    fit.values.push_back(values[i]);
  }
  const std::size_t n = fit.x.size();
  for (std::size_t i = 1; i < n; ++i)
    if (fit.x[i] == fit.x[i - 1]) throw std::invalid_argument("abscissae must be distinct");

  // Aitken estimate from the three most resolved points as the starting limit.
  std::array<double, 3> l{};
  if (kind == Abscissa::MeshSize)
    l = {fit.values[0], fit.values[1], fit.values[2]};
  else
    l = {fit.values[n - 1], fit.values[n - 2], fit.values[n - 3]};
  const double d1 = l[1] - l[0];
  const double d2 = l[2] - l[1];
  double limit = (d2 != d1) ? l[0] - d1 * d1 / (d2 - d1) : l[0];

  std::vector<double> logx(n), loge(n);
  for (std::size_t i = 0; i < n; ++i) logx[i] = std::log(fit.x[i]);
  double sign = 1.0;
  double rate = 0.0, log_c = 0.0;
  bool converged = false;
  constexpr int kMaxIterations = 10000;
  for (int it = 0; it < kMaxIterations; ++it) {
    fit.iterations = it + 1;
    double mean_offset = 0.0;
    for (double v : fit.values) mean_offset += v - limit;
    sign = mean_offset >= 0.0 ? 1.0 : -1.0;
    bool degenerate = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::abs(fit.values[i] - limit);
      if (!(e > 0.0)) degenerate = true;
      loge[i] = std::log(std::max(e, 1e-300));
    }
    const LogLine line = regress(logx, loge);
    rate = line.slope;
    log_c = line.intercept;
    double next = 0.0;
    for (std::size_t i = 0; i < n; ++i) next += fit.values[i] - sign * std::exp(log_c + rate * logx[i]);
    next /= static_cast<double>(n);
    const double change = std::abs(next - limit);
    limit = next;
    if (!std::isfinite(limit)) break;
    if (change <= 1e-10 * std::max(1.0, std::abs(limit)) || degenerate) {
      converged = !degenerate;
      break;
    }
  }

  fit.rate = rate;
  fit.constant = sign * std::exp(log_c);
  fit.extrapolated = limit;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = fit.values[i] - (limit + fit.constant * std::pow(fit.x[i], rate));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(n));

  // Errors must shrink monotonically towards the resolved end.
  bool monotone = true;
  for (std::size_t i = 1; i < n; ++i) {
    const double a = std::abs(fit.values[i - 1] - limit);
    const double b = std::abs(fit.values[i] - limit);
    if (kind == Abscissa::MeshSize ? a > b : a < b) monotone = false;
  }
  fit.low_confidence = !converged || !monotone || !std::isfinite(limit);
  return fit;
}

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& err) {
  if (x.size() != err.size() || x.size() < 2) throw std::invalid_argument("slope fit needs matching series of length >= 2");
  std::vector<double> lx(x.size()), le(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(err[i] > 0.0)) throw std::invalid_argument("slope fit needs positive data");
    lx[i] = std::log(x[i]);
    le[i] = std::log(err[i]);
  }
  const LogLine line = regress(lx, le);
  SlopeFit fit{line.slope, line.intercept, 0.0};
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = le[i] - (line.intercept + line.slope * lx[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(x.size()));
  return fit;
}

}  // namespace vemstokes
