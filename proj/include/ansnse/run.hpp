#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ansnse/diagnostics.hpp"
#include "ansnse/error.hpp"
#include "ansnse/initial_data.hpp"
#include "ansnse/log.hpp"
#include "ansnse/snapshot.hpp"
#include "ansnse/solver.hpp"

namespace ansnse {

enum class InitialKind { taylor_green, random_solenoidal, snapshot };

struct InitialSpec {
  InitialKind type = InitialKind::taylor_green;
  double amplitude = 1.0;
  std::uint64_t seed = 0;
  int kmin = 1;
  int kmax = 4;
  double slope = -2.0;
  std::filesystem::path path;  // snapshot input
};

struct SolverConfig {
  Grid grid = make_grid(32);
  double dt = 1e-3;
  double t_end = 0.5;
  std::optional<double> cfl_limit;  // adaptive dt <= cfl * h / max|u| when set
  InitialSpec initial;
  int cadence = 1;
  std::vector<double> q_list = {1.75, 2.0, 3.0, 6.0};
  int snapshots_every = 0;  // 0 disables field output
  /// Test hook: overwrite one sample with NaN right after this step.
  std::optional<int> inject_nan_at_step;
};

inline void validate(const SolverConfig& c) {
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigError("dt: must be a positive number");
  if (!(c.t_end >= 0.0) || !std::isfinite(c.t_end)) throw ConfigError("t_end: must be >= 0");
  if (c.cadence < 1) throw ConfigError("cadence: must be >= 1");
  if (c.snapshots_every < 0) throw ConfigError("outputs.snapshots_every: must be >= 0");
  if (c.cfl_limit && !(*c.cfl_limit > 0.0)) throw ConfigError("cfl_limit: must be positive");
  for (double q : c.q_list) {
    if (!(q > 1.5) || !std::isfinite(q)) throw ConfigError("q_list: entries must lie in (3/2, inf)");
  }
}

/// Builds the initial velocity: solenoidal, zero-mean and 2/3-dealiased.
inline VectorField3 initial_velocity(const SolverConfig& c) {
  switch (c.initial.type) {
    case InitialKind::taylor_green:
      return taylor_green(c.grid, c.initial.amplitude);
    case InitialKind::random_solenoidal: {
      ShellSpectrum spec;
      spec.kmin = c.initial.kmin;
      spec.kmax = c.initial.kmax;
      spec.slope = c.initial.slope;
      spec.amplitude = c.initial.amplitude;
      spec.seed = c.initial.seed;
      return random_solenoidal(c.grid, spec);
    }
    case InitialKind::snapshot: {
      const VectorField3 raw = to_vector_field(read_snapshot(c.initial.path));
      if (!(raw.grid() == c.grid)) throw ConfigError("initial.path: snapshot grid differs from grid");
      if (!raw.is_finite()) throw InvalidFieldError("snapshot holds non-finite samples");
      require_solenoidal(raw, "initial snapshot");
      auto uh = spectra(raw);
      double before = 0.0, after = 0.0;
      for (auto& comp : uh) {
        before += spectral_l2_squared(c.grid, comp);
        comp[0] = 0.0;
        dealias_in_place(c.grid, comp);
        after += spectral_l2_squared(c.grid, comp);
      }
      if (before - after > 1e-12 * before) {
        log::warn("initial snapshot: mean and dealiased modes removed (" +
                  std::to_string(before - after) + " of squared L2 norm)");
      }
      return from_spectra(c.grid, std::move(uh));
    }
  }
  throw ConfigError("initial.type: unknown");
}

/// Everything except the balance residuals, which need neighbouring states.
inline DiagnosticsRecord instantaneous_record(const SolverState& s, std::span<const double> q_list) {
  DiagnosticsRecord r;
  r.t = s.t;
  r.kinetic_energy = kinetic_energy(s.u);
  r.grad_u_sq = gradient_l2_squared(s.u);
  const auto e = energy_functionals(s.u);
  r.E = e.E;
  r.E1 = e.E1;
  r.E2 = e.E2;
  const VectorField3 d3u = vertical_derivative(s.u);
  for (double q : q_list) r.criteria.push_back({q, lp_norm(d3u, q), serrin_exponent(q), 0.0});
  r.borderline = lp_norm(d3u, 1.5);
  r.decomp_residual = reconstruct_uh(s.u).residual;
  r.residuals.fill(std::numeric_limits<double>::quiet_NaN());
  return r;
}

struct RunObserver {
  std::function<void(const DiagnosticsRecord&)> on_record;
  std::function<void(long step, const SolverState&)> on_snapshot;
};

struct RunResult {
  SolverState final_state;
  std::vector<DiagnosticsRecord> records;
  double sup_borderline = 0.0;  // sup over records of ||d3 u||_{3/2}
  long steps = 0;
};

namespace detail {

// Emits records in order once the three states around them are available.
class RecordPipeline {
 public:
  RecordPipeline(std::vector<double> q_list, const RunObserver& obs, RunResult& out)
      : q_list_(std::move(q_list)), obs_(obs), out_(out) {}

  void add_state(long step, const SolverState& s, bool is_record, bool is_last) {
    ring_.push_back({step, s});
    if (ring_.size() > 3) ring_.pop_front();
    if (is_record) pending_.push_back({step, instantaneous_record(s, q_list_)});
    if (is_last) last_step_ = step;
    drain();
  }

  // Residuals of still-pending records are left as NaN (fewer than 3 states).
  void flush() {
    while (!pending_.empty()) emit();
  }

 private:
  struct Stored {
    long step;
    SolverState state;
  };
  struct Pending {
    long step;
    DiagnosticsRecord record;
  };

  void drain() {
    while (!pending_.empty() && ring_.size() == 3) {
      const long n = pending_.front().step;
      // Centered window [n-1, n+1]; one-sided at the first and last states.
      const long window = n == 0 ? 0 : (n == last_step_ ? n - 2 : n - 1);
      if (ring_.front().step != window) break;
      const std::array<SolverState, 3> w = {ring_[0].state, ring_[1].state, ring_[2].state};
      const int at = static_cast<int>(n - window);
      const auto dudt = time_derivative(std::span<const SolverState, 3>(w), at);
      const auto& u = w[at].u;
      const auto sides = balance_sides(u, dudt, production_integrals(u));
      for (std::size_t i = 0; i < sides.size(); ++i) pending_.front().record.residuals[i] = sides[i].residual();
      emit();
    }
  }

  void emit() {
    auto rec = std::move(pending_.front().record);
    pending_.pop_front();
    if (!out_.records.empty()) {
      const auto& prev = out_.records.back();
      for (std::size_t i = 0; i < rec.criteria.size(); ++i) {
        const auto& a = prev.criteria[i];
        auto& b = rec.criteria[i];
        b.accumulated = a.accumulated + 0.5 * (rec.t - prev.t) * (std::pow(a.norm, a.p) + std::pow(b.norm, b.p));
      }
    }
    out_.sup_borderline = std::max(out_.sup_borderline, rec.borderline);
    out_.records.push_back(rec);
    if (obs_.on_record) obs_.on_record(out_.records.back());
  }

  std::vector<double> q_list_;
  const RunObserver& obs_;
  RunResult& out_;
  std::deque<Stored> ring_;
  std::deque<Pending> pending_;
  long last_step_ = -1;
};

}  // namespace detail

/// Integrates from t = 0 to t_end. Records are produced every `cadence`
/// steps plus at t_end. On blow-up the records gathered so far are flushed
/// and the BlowUpError is rethrown.
inline RunResult run(const SolverConfig& config, const RunObserver& observer = {}) {
  validate(config);
  RunResult result;
  SolverState state{0.0, initial_velocity(config)};
  detail::RecordPipeline pipe(config.q_list, observer, result);

  const double h = std::min({config.grid.spacing(0), config.grid.spacing(1), config.grid.spacing(2)});
  auto next_dt = [&](const SolverState& s) {
    double dt = config.dt;
    if (config.cfl_limit) {
      const double umax = s.u.max_abs();
      if (umax > 0.0) dt = std::min(dt, *config.cfl_limit * h / umax);
    }
    return std::min(dt, config.t_end - s.t);
  };
  // Fixed dt: the step count is known up front and times are n*dt.
  const long fixed_steps =
      config.cfl_limit ? -1 : static_cast<long>(std::ceil(config.t_end / config.dt - 1e-9));

  long n = 0;
  auto done = [&](const SolverState& s) {
    return fixed_steps >= 0 ? n >= fixed_steps : !(s.t < config.t_end);
  };
  if (observer.on_snapshot && config.snapshots_every > 0) observer.on_snapshot(0, state);
  pipe.add_state(0, state, true, done(state));
  try {
    while (!done(state)) {
      const double dt = fixed_steps >= 0 ? (n + 1 == fixed_steps ? config.t_end - state.t : config.dt)
                                         : next_dt(state);
      SolverState next = step(state, dt);
      ++n;
      if (fixed_steps >= 0) next.t = n == fixed_steps ? config.t_end : static_cast<double>(n) * config.dt;
      if (config.inject_nan_at_step && *config.inject_nan_at_step == n) {
        std::vector<double> v(next.u[0].values().begin(), next.u[0].values().end());
        v[0] = std::numeric_limits<double>::quiet_NaN();
        next.u = VectorField3(ScalarField(next.u.grid(), std::move(v)), next.u[1], next.u[2]);
      }
      detail::check_blow_up(next.u, state);
      state = std::move(next);
      const bool last = done(state);
      if (observer.on_snapshot && config.snapshots_every > 0 && n % config.snapshots_every == 0) {
        observer.on_snapshot(n, state);
      }
      pipe.add_state(n, state, last || n % config.cadence == 0, last);
    }
  } catch (const BlowUpError&) {
    pipe.flush();
    throw;
  }
  pipe.flush();
  result.final_state = std::move(state);
  result.steps = n;
  return result;
}

}  // namespace ansnse
