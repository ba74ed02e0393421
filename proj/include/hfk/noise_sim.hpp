#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hfk/model.hpp"

namespace hfk {

enum class NoiseDistribution {
  kStandardNormal,
  kRademacher,
  kZero,  ///< w ≡ 0, for deterministic passes
};

/// i.i.d. zero-mean unit-variance noise per component and step (kZero excepted).
struct NoiseModel {
  NoiseDistribution distribution = NoiseDistribution::kStandardNormal;
  int n_w = 1;
};

/// SplitMix64 finalizer applied to master ⊕ golden-ratio increments; used to
/// derive independent per-trial seeds.
std::uint64_t splitmix64(std::uint64_t master, std::uint64_t index);

/// `horizon` noise vectors of size n_w, fully determined by `seed`.
std::vector<Vector> sample_noise(const NoiseModel& model, std::uint64_t seed, int horizon);

/// Exogenous disturbance sequence v_k.
class DisturbanceSignal {
 public:
  enum class Kind { kZero, kGeometric, kStateFeedback, kSequence };

  static DisturbanceSignal zero(int n_v);
  /// v_k = amplitude · ratio^k (componentwise amplitude vector). |ratio| < 1.
  static DisturbanceSignal geometric(Vector amplitude, double ratio);
  static DisturbanceSignal geometric(double amplitude, double ratio);
  /// v_k = F η_k, evaluated on the current state before stepping.
  static DisturbanceSignal state_feedback(Matrix gain);
  /// Explicit finite sequence; zero after its last entry.
  static DisturbanceSignal sequence(std::vector<Vector> values);

  Kind kind() const { return kind_; }
  int n_v() const { return n_v_; }
  Vector at(int k, const Vector& eta) const;
  /// Same signal scaled by alpha.
  DisturbanceSignal scaled(double alpha) const;

  double ratio() const { return ratio_; }
  const Vector& amplitude() const { return amplitude_; }
  const Matrix& gain() const { return gain_; }

 private:
  Kind kind_ = Kind::kZero;
  int n_v_ = 0;
  Vector amplitude_;
  double ratio_ = 0.0;
  Matrix gain_;
  std::vector<Vector> values_;
};

/// One realization: eta[0..T], z_tilde[0..T], v[0..T].
struct Trajectory {
  std::vector<Vector> eta;
  std::vector<Vector> z_tilde;
  std::vector<Vector> v;
  std::uint64_t seed = 0;
};

/// Any |η_i| above this aborts the trial as divergent.
inline constexpr double kDivergenceThreshold = 1e12;

/// Iterates η_{k+1} = f̃_k(η_k, w_k, v_k) for k = 0..horizon-1 and records
/// z̃_k = m̃_k(η_k, v_k) for k = 0..horizon. Throws DivergenceError.
Trajectory simulate_trajectory(const AugmentedSystem& aug, const DisturbanceSignal& dist,
                               const NoiseModel& noise, const Vector& eta0, int horizon,
                               std::uint64_t seed);

/// Cumulative expected energies Σ_{i≤k} Ê‖z̃_i‖² and Σ_{i≤k} Ê‖v_i‖² with
/// standard errors of the trial means.
struct EnergyReport {
  int horizon = 0;
  int trials = 0;
  std::uint64_t master_seed = 0;
  std::vector<double> cum_z, cum_v, stderr_z, stderr_v;
};

/// Worker count: HFK_THREADS if set (≥1), otherwise hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, trials) on up to worker_count() threads. Results
/// must be written to per-index slots.
void parallel_trials(int trials, const std::function<void(int)>& fn);

/// Seed of trial i under `master_seed`.
inline std::uint64_t trial_seed(std::uint64_t master_seed, int i) {
  return splitmix64(master_seed, static_cast<std::uint64_t>(i));
}

/// Averages `trials` independent trajectories (seed_i = splitmix64(master, i)),
/// reducing in ascending trial order. DivergenceError carries the trial index.
EnergyReport monte_carlo(const AugmentedSystem& aug, const DisturbanceSignal& dist,
                         const NoiseModel& noise, const Vector& eta0, int horizon, int trials,
                         std::uint64_t master_seed);

struct GainCheck {
  double ratio = 0.0;       ///< cum_z[T] / (γ² cum_v[T])
  bool satisfied = false;   ///< cum_z[k] ≤ γ² cum_v[k] + 3·se_k for all k
  int worst_step = 0;       ///< step of the largest excess
  double worst_excess = 0;  ///< max_k cum_z[k] − γ² cum_v[k] − slack_k
};

/// Statistical slack multiplier on the combined standard error.
inline constexpr double kStatSlackSigmas = 3.0;

/// Throws UndefinedRatioError when the final disturbance energy is zero and
/// the output energy is not.
GainCheck empirical_gain(const EnergyReport& report, double gamma);

struct DecayEntry {
  Vector eta0;
  double decay_fraction = 0.0;   ///< trials with ‖η_T‖ < tol_decay
  std::vector<double> sup_norms; ///< sup_k ‖η_k‖ per trial (inf when divergent)
  int divergent = 0;
};

struct DecayReport {
  int horizon = 0;
  int trials = 0;
  double tol_decay = 0.0;
  std::vector<DecayEntry> entries;
};

/// Undisturbed runs from each initial state. Divergent trials count as not
/// decayed; no error is raised.
DecayReport internal_stability_probe(const AugmentedSystem& aug, const NoiseModel& noise,
                                     const std::vector<Vector>& eta0_set, int horizon, int trials,
                                     std::uint64_t master_seed, double tol_decay = 1e-3);

}  // namespace hfk
