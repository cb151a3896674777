#include "npp/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>

namespace npp {

double smooth_truncate(double r, double k) {
  if (r < 0.0 || std::isnan(r)) throw std::invalid_argument("smooth_truncate: r must be >= 0");
  if (!(k >= 2.0)) throw std::invalid_argument("smooth_truncate: k must be >= 2");
  if (r <= k) return r;
  if (r >= k + 1.0) return k + 0.5;
  const double t = r - k;
  const double t2 = t * t;
  return k + t - t2 * t + 0.5 * t2 * t2;
}

namespace {

struct RunCapture {
  Trajectory trajectory;
  std::vector<EnergyReport> reports;
  std::string error;
};

RunCapture run_one(ProblemSpec spec, double eta, double dt, const SweepOptions& opts) {
  spec.regularization.eta = eta;
  RunCapture cap;
  size_t next_output = 0;
  Observer snapshotter = [&](const State& state, const StepReport&) {
    cap.reports.push_back(energy_report(state, spec));
    while (next_output < opts.output_times.size() &&
           state.t >= opts.output_times[next_output] - 1e-12) {
      cap.trajectory.times.push_back(state.t);
      cap.trajectory.concentrations.push_back(state.c);
      ++next_output;
    }
  };
  const Observer observers[] = {snapshotter};
  auto outcome = run(spec, dt, observers, opts.coupling);
  if (!outcome.completed) cap.error = outcome.error;
  return cap;
}

// Integral over the time cylinder of a per-snapshot spatial reduction,
// weighting each snapshot by its trailing time interval.
template <typename F>
double cylinder_integral(const Trajectory& a, const Trajectory& b, double cell_volume, F&& f) {
  double total = 0.0;
  double prev_t = 0.0;
  for (size_t s = 0; s < a.times.size(); ++s) {
    const double w = (a.times[s] - prev_t) * cell_volume;
    prev_t = a.times[s];
    for (size_t i = 0; i < a.concentrations[s].size(); ++i) {
      const auto& ca = a.concentrations[s][i];
      const auto& cb = b.concentrations[s][i];
      for (size_t c = 0; c < ca.size(); ++c) total += w * f(ca[c], cb[c]);
    }
  }
  return total;
}

}  // namespace

SweepReport eta_sweep(const ProblemSpec& spec, std::span<const double> eta_schedule, double dt,
                      const SweepOptions& opts) {
  for (size_t i = 0; i + 1 < eta_schedule.size(); ++i) {
    if (!(eta_schedule[i] > eta_schedule[i + 1]))
      throw std::invalid_argument("eta schedule must be strictly decreasing");
  }
  if (!eta_schedule.empty() && !(eta_schedule.front() < 1.0 && eta_schedule.back() >= 0.0))
    throw std::invalid_argument("eta schedule values must lie in [0,1)");

  SweepReport report;
  report.eta_schedule.assign(eta_schedule.begin(), eta_schedule.end());
  report.tk_levels = opts.tk_levels;

  const int n_runs = (int)eta_schedule.size();
  report.trajectories.resize(n_runs);
  report.reports.resize(n_runs);
  report.errors.assign(n_runs, "");

  int jobs = opts.jobs > 0 ? opts.jobs : (int)std::thread::hardware_concurrency();
  jobs = std::max(1, std::min(jobs, n_runs));

  // Independent runs, fanned out in waves of `jobs`.
  for (int base = 0; base < n_runs; base += jobs) {
    const int wave = std::min(jobs, n_runs - base);
    std::vector<std::future<RunCapture>> futures;
    futures.reserve(wave);
    for (int w = 0; w < wave; ++w)
      futures.push_back(std::async(std::launch::async, run_one, spec, eta_schedule[base + w], dt,
                                   std::cref(opts)));
    for (int w = 0; w < wave; ++w) {
      RunCapture cap = futures[w].get();
      report.trajectories[base + w] = std::move(cap.trajectory);
      report.reports[base + w] = std::move(cap.reports);
      report.errors[base + w] = std::move(cap.error);
      if (!report.errors[base + w].empty()) report.partial = true;
    }
  }

  std::vector<std::pair<double, std::vector<EnergyReport>>> labelled;
  for (int r = 0; r < n_runs; ++r) {
    if (report.errors[r].empty()) labelled.emplace_back(eta_schedule[r], report.reports[r]);
  }
  if (!labelled.empty()) report.uniform_bound = check_uniform_eta_bound(labelled);

  if (report.partial) return report;

  const double vol = spec.grid.cell_volume();
  for (int r = 0; r + 1 < n_runs; ++r) {
    const auto& a = report.trajectories[r];
    const auto& b = report.trajectories[r + 1];
    report.pairwise_l1.push_back(
        cylinder_integral(a, b, vol, [](double x, double y) { return std::abs(x - y); }));
    report.pairwise_sqrt_l2.push_back(std::sqrt(cylinder_integral(
        a, b, vol, [](double x, double y) {
          const double d = std::sqrt(x) - std::sqrt(y);
          return d * d;
        })));
    std::vector<double> tk_row;
    for (double k : opts.tk_levels) {
      tk_row.push_back(cylinder_integral(a, b, vol, [k](double x, double y) {
        return std::abs(smooth_truncate(x, k) - smooth_truncate(y, k));
      }));
    }
    report.tk_l1.push_back(std::move(tk_row));
  }
  return report;
}

std::vector<ContinuityProfile> l1_continuity_profile(const Trajectory& trajectory,
                                                     const Grid& grid,
                                                     std::span<const double> ks,
                                                     double entropy_l1_max) {
  const double vol = grid.cell_volume();
  std::vector<ContinuityProfile> table;
  for (double k : ks) {
    ContinuityProfile row;
    row.k = k;
    row.tail_bound = entropy_l1_max / std::log(k);
    for (size_t s = 0; s < trajectory.times.size(); ++s) {
      double tail = 0.0;
      for (const auto& c : trajectory.concentrations[s]) {
        for (double v : c)
          if (v >= k) tail += vol * v;
      }
      row.max_tail = std::max(row.max_tail, tail);
      if (s == 0) continue;
      double jump = 0.0;
      for (size_t i = 0; i < trajectory.concentrations[s].size(); ++i) {
        const auto& now = trajectory.concentrations[s][i];
        const auto& prev = trajectory.concentrations[s - 1][i];
        for (size_t c = 0; c < now.size(); ++c)
          jump += vol * std::abs(smooth_truncate(now[c], k) - smooth_truncate(prev[c], k));
      }
      row.max_jump = std::max(row.max_jump, jump);
    }
    table.push_back(row);
  }
  return table;
}

}  // namespace npp
