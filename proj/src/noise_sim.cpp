#include "hfk/noise_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "hfk/errors.hpp"

namespace hfk {

std::uint64_t splitmix64(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

class NoiseStream {
 public:
  NoiseStream(const NoiseModel& model, std::uint64_t seed) : model_(model), engine_(seed) {}

  void next(Vector& w) {
    w.resize(model_.n_w);
    switch (model_.distribution) {
      case NoiseDistribution::kStandardNormal:
        for (int i = 0; i < model_.n_w; ++i) w(i) = normal_(engine_);
        break;
      case NoiseDistribution::kRademacher:
        for (int i = 0; i < model_.n_w; ++i) w(i) = (engine_() >> 63) ? 1.0 : -1.0;
        break;
      case NoiseDistribution::kZero:
        w.setZero();
        break;
    }
  }

 private:
  NoiseModel model_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

void check_finite(const Vector& eta, int step) {
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (!std::isfinite(eta(i)) || std::abs(eta(i)) > kDivergenceThreshold) {
      throw DivergenceError("state diverged at step " + std::to_string(step), step);
    }
  }
}

}  // namespace

std::vector<Vector> sample_noise(const NoiseModel& model, std::uint64_t seed, int horizon) {
  if (horizon < 0) throw PreconditionError("sample_noise: horizon must be non-negative");
  if (model.n_w <= 0) throw DimensionError("sample_noise: n_w must be positive");
  NoiseStream stream(model, seed);
  std::vector<Vector> out(static_cast<size_t>(horizon));
  for (auto& w : out) stream.next(w);
  return out;
}

DisturbanceSignal DisturbanceSignal::zero(int n_v) {
  if (n_v <= 0) throw DimensionError("disturbance dimension must be positive");
  DisturbanceSignal d;
  d.kind_ = Kind::kZero;
  d.n_v_ = n_v;
  return d;
}

DisturbanceSignal DisturbanceSignal::geometric(Vector amplitude, double ratio) {
  if (!(std::abs(ratio) < 1.0)) {
    throw PreconditionError("geometric disturbance needs |ratio| < 1 to be square-summable");
  }
  if (amplitude.size() == 0) throw DimensionError("disturbance dimension must be positive");
  DisturbanceSignal d;
  d.kind_ = Kind::kGeometric;
  d.n_v_ = static_cast<int>(amplitude.size());
  d.amplitude_ = std::move(amplitude);
  d.ratio_ = ratio;
  return d;
}

DisturbanceSignal DisturbanceSignal::geometric(double amplitude, double ratio) {
  return geometric(Vector::Constant(1, amplitude), ratio);
}

DisturbanceSignal DisturbanceSignal::state_feedback(Matrix gain) {
  if (gain.rows() == 0) throw DimensionError("disturbance dimension must be positive");
  DisturbanceSignal d;
  d.kind_ = Kind::kStateFeedback;
  d.n_v_ = static_cast<int>(gain.rows());
  d.gain_ = std::move(gain);
  return d;
}

DisturbanceSignal DisturbanceSignal::sequence(std::vector<Vector> values) {
  if (values.empty()) throw PreconditionError("explicit disturbance sequence is empty");
  const auto n = values.front().size();
  for (const auto& v : values) {
    if (v.size() != n) throw DimensionError("explicit disturbance entries differ in size");
  }
  DisturbanceSignal d;
  d.kind_ = Kind::kSequence;
  d.n_v_ = static_cast<int>(n);
  d.values_ = std::move(values);
  return d;
}

Vector DisturbanceSignal::at(int k, const Vector& eta) const {
  switch (kind_) {
    case Kind::kZero:
      return Vector::Zero(n_v_);
    case Kind::kGeometric:
      return amplitude_ * std::pow(ratio_, k);
    case Kind::kStateFeedback:
      if (eta.size() != gain_.cols()) throw DimensionError("feedback gain does not match state");
      return gain_ * eta;
    case Kind::kSequence:
      return k < static_cast<int>(values_.size()) ? values_[static_cast<size_t>(k)]
                                                  : Vector::Zero(n_v_);
  }
  return Vector::Zero(n_v_);
}

DisturbanceSignal DisturbanceSignal::scaled(double alpha) const {
  DisturbanceSignal d = *this;
  d.amplitude_ *= alpha;
  d.gain_ *= alpha;
  for (auto& v : d.values_) v *= alpha;
  return d;
}

Trajectory simulate_trajectory(const AugmentedSystem& aug, const DisturbanceSignal& dist,
                               const NoiseModel& noise, const Vector& eta0, int horizon,
                               std::uint64_t seed) {
  if (eta0.size() != aug.n_eta()) {
    throw DimensionError("initial state has size " + std::to_string(eta0.size()) +
                         ", expected " + std::to_string(aug.n_eta()));
  }
  if (dist.n_v() != aug.n_v()) throw DimensionError("disturbance dimension mismatch");
  if (noise.n_w != aug.n_w()) throw DimensionError("noise dimension mismatch");
  if (horizon < 0) throw PreconditionError("horizon must be non-negative");

  Trajectory tr;
  tr.seed = seed;
  tr.eta.reserve(static_cast<size_t>(horizon) + 1);
  tr.z_tilde.reserve(static_cast<size_t>(horizon) + 1);
  tr.v.reserve(static_cast<size_t>(horizon) + 1);

  NoiseStream stream(noise, seed);
  Vector eta = eta0;
  check_finite(eta, 0);
  Vector w;
  for (int k = 0;; ++k) {
    const Vector v = dist.at(k, eta);
    tr.eta.push_back(eta);
    tr.v.push_back(v);
    tr.z_tilde.push_back(aug.output(k, eta, v));
    if (k == horizon) break;
    stream.next(w);
    eta = aug.step(k, eta, w, v);
    check_finite(eta, k + 1);
  }
  return tr;
}

int worker_count() {
  if (const char* env = std::getenv("HFK_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_trials(int trials, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), std::max(trials, 1));
  if (workers <= 1) {
    for (int i = 0; i < trials; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  int first_error_index = trials;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < trials; i += workers) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          // Keep the lowest failing index so errors do not depend on scheduling.
          if (i < first_error_index) {
            first_error_index = i;
            first_error = std::current_exception();
          }
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

EnergyReport monte_carlo(const AugmentedSystem& aug, const DisturbanceSignal& dist,
                         const NoiseModel& noise, const Vector& eta0, int horizon, int trials,
                         std::uint64_t master_seed) {
  if (trials < 1) throw PreconditionError("monte_carlo: trials must be at least 1");
  if (horizon < 0) throw PreconditionError("monte_carlo: horizon must be non-negative");
  const size_t steps = static_cast<size_t>(horizon) + 1;
  // Per-trial cumulative energies, reduced afterwards in trial order.
  std::vector<std::vector<double>> cz(static_cast<size_t>(trials)), cv(static_cast<size_t>(trials));

  parallel_trials(trials, [&](int i) {
    Trajectory tr;
    try {
      tr = simulate_trajectory(aug, dist, noise, eta0, horizon, trial_seed(master_seed, i));
    } catch (const DivergenceError& e) {
      throw DivergenceError("trial " + std::to_string(i) + ": " + e.what(), e.step(), i);
    }
    auto& z = cz[static_cast<size_t>(i)];
    auto& v = cv[static_cast<size_t>(i)];
    z.resize(steps);
    v.resize(steps);
    double sz = 0.0, sv = 0.0;
    for (size_t k = 0; k < steps; ++k) {
      sz += tr.z_tilde[k].squaredNorm();
      sv += tr.v[k].squaredNorm();
      z[k] = sz;
      v[k] = sv;
    }
  });

  EnergyReport rep;
  rep.horizon = horizon;
  rep.trials = trials;
  rep.master_seed = master_seed;
  rep.cum_z.assign(steps, 0.0);
  rep.cum_v.assign(steps, 0.0);
  rep.stderr_z.assign(steps, 0.0);
  rep.stderr_v.assign(steps, 0.0);
  const double n = static_cast<double>(trials);
  for (size_t k = 0; k < steps; ++k) {
    double mz = 0.0, mv = 0.0;
    for (int i = 0; i < trials; ++i) {
      mz += cz[static_cast<size_t>(i)][k];
      mv += cv[static_cast<size_t>(i)][k];
    }
    mz /= n;
    mv /= n;
    double qz = 0.0, qv = 0.0;
    for (int i = 0; i < trials; ++i) {
      const double dz = cz[static_cast<size_t>(i)][k] - mz;
      const double dv = cv[static_cast<size_t>(i)][k] - mv;
      qz += dz * dz;
      qv += dv * dv;
    }
    rep.cum_z[k] = mz;
    rep.cum_v[k] = mv;
    if (trials > 1) {
      rep.stderr_z[k] = std::sqrt(qz / (n - 1.0) / n);
      rep.stderr_v[k] = std::sqrt(qv / (n - 1.0) / n);
    }
  }
  return rep;
}

GainCheck empirical_gain(const EnergyReport& report, double gamma) {
  if (!(gamma > 0)) throw PreconditionError("empirical_gain: gamma must be positive");
  if (report.cum_z.empty()) throw PreconditionError("empirical_gain: empty report");
  const double g2 = gamma * gamma;
  const double final_z = report.cum_z.back();
  const double final_v = report.cum_v.back();
  GainCheck out;
  if (final_v <= 0.0) {
    if (final_z > 0.0) {
      throw UndefinedRatioError("empirical_gain: zero disturbance energy with nonzero output");
    }
    out.ratio = 0.0;
  } else {
    out.ratio = final_z / (g2 * final_v);
  }
  out.satisfied = true;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < report.cum_z.size(); ++k) {
    const double se = std::hypot(report.stderr_z[k], g2 * report.stderr_v[k]);
    const double excess = report.cum_z[k] - g2 * report.cum_v[k] - kStatSlackSigmas * se;
    if (excess > out.worst_excess) {
      out.worst_excess = excess;
      out.worst_step = static_cast<int>(k);
    }
    if (excess > 0.0) out.satisfied = false;
  }
  return out;
}

DecayReport internal_stability_probe(const AugmentedSystem& aug, const NoiseModel& noise,
                                     const std::vector<Vector>& eta0_set, int horizon, int trials,
                                     std::uint64_t master_seed, double tol_decay) {
  if (trials < 1) throw PreconditionError("internal_stability_probe: trials must be at least 1");
  DecayReport rep;
  rep.horizon = horizon;
  rep.trials = trials;
  rep.tol_decay = tol_decay;
  const DisturbanceSignal zero = DisturbanceSignal::zero(aug.n_v());
  for (size_t e = 0; e < eta0_set.size(); ++e) {
    DecayEntry entry;
    entry.eta0 = eta0_set[e];
    entry.sup_norms.assign(static_cast<size_t>(trials), 0.0);
    std::vector<char> decayed(static_cast<size_t>(trials), 0);
    // Each initial state gets its own seed family.
    const std::uint64_t family = splitmix64(master_seed, 0x1000000ULL + e);
    parallel_trials(trials, [&](int i) {
      const auto slot = static_cast<size_t>(i);
      try {
        const Trajectory tr =
            simulate_trajectory(aug, zero, noise, entry.eta0, horizon, trial_seed(family, i));
        double sup = 0.0;
        for (const auto& eta : tr.eta) sup = std::max(sup, eta.norm());
        entry.sup_norms[slot] = sup;
        decayed[slot] = tr.eta.back().norm() < tol_decay ? 1 : 0;
      } catch (const DivergenceError&) {
        entry.sup_norms[slot] = std::numeric_limits<double>::infinity();
        decayed[slot] = 0;
      }
    });
    int count = 0;
    for (int i = 0; i < trials; ++i) {
      if (decayed[static_cast<size_t>(i)]) {
        ++count;
      } else if (std::isinf(entry.sup_norms[static_cast<size_t>(i)])) {
        ++entry.divergent;
      }
    }
    entry.decay_fraction = static_cast<double>(count) / trials;
    rep.entries.push_back(std::move(entry));
  }
  return rep;
}

}  // namespace hfk
