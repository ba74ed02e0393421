#include "hfk/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "hfk/errors.hpp"
#include "hfk/fixtures.hpp"
#include "hfk/serialize.hpp"

namespace hfk {
namespace cli {
namespace {

using json = io::json;

class UsageError : public Error {
 public:
  using Error::Error;
};

// Check tags recorded in every artifact.
constexpr const char* kTagLmi = "lmi-certified";
constexpr const char* kTagFloors = "positivity-floors";
constexpr const char* kTagRecovery = "gain-recovery";
constexpr const char* kTagGari = "riccati-inequality";
constexpr const char* kTagQuadForm = "quadratic-form-negative";
constexpr const char* kTagStable = "closed-loop-spectral-radius";
constexpr const char* kTagGain = "l2-gain-monte-carlo";
constexpr const char* kTagDecay = "internal-stability-probe";
constexpr const char* kTagBlock = "block-diagonal-certificate";
constexpr const char* kTagHji = "hji-sampling";
constexpr const char* kTagWorst = "worst-case-law";
constexpr const char* kTagH2 = "h2-residual";

// The decay probe needs a longer horizon than the gain test: the plant of the
// vehicle fixture has spectral radius 0.99.
constexpr int kDecayHorizon = 500;

json config_json(const RunConfig& c) {
  // The output directory is left out so that reruns into different
  // directories produce identical files.
  json j{{"command", c.command},
         {"fixture", c.fixture},
         {"system", c.system_path},
         {"result", c.result_path},
         {"min_gamma", c.min_gamma},
         {"lo", c.lo},
         {"hi", c.hi},
         {"tol", c.tol},
         {"h2", c.h2},
         {"trials", c.trials},
         {"horizon", c.horizon},
         {"seed", c.seed},
         {"x0", c.x0},
         {"disturbance", c.disturbance},
         {"noise", c.noise},
         {"box", c.box},
         {"v_box", c.v_box},
         {"points", c.points}};
  j["gamma"] = c.gamma ? json(*c.gamma) : json(nullptr);
  j["synth_gamma"] = c.synth_gamma ? json(*c.synth_gamma) : json(nullptr);
  j["amplitude"] = c.amplitude ? json(*c.amplitude) : json(nullptr);
  j["ratio"] = c.ratio ? json(*c.ratio) : json(nullptr);
  return j;
}

json artifact(const RunConfig& c, const std::vector<std::string>& checks) {
  return json{{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
              {"config", config_json(c)},
              {"master_seed", c.seed},
              {"checks", checks}};
}

std::string out_path(const RunConfig& c, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + c.out_dir + ": " + ec.message());
  return (std::filesystem::path(c.out_dir) / name).string();
}

bool wants_nonlinear(const RunConfig& c, std::optional<io::LoadedSystem>& loaded) {
  if (c.fixture == "example51") return true;
  if (c.fixture == "example52") return false;
  loaded = io::load_system_file(c.system_path);
  return loaded->nonlinear.has_value();
}

LinearStochasticSystem linear_system(const RunConfig& c) {
  if (c.fixture == "example52") return fixtures::example52_system();
  if (c.fixture == "example51") throw UsageError(c.command + " needs a linear system");
  io::LoadedSystem loaded = io::load_system_file(c.system_path);
  if (!loaded.linear) throw UsageError(c.command + " needs a linear system");
  return *loaded.linear;
}

NoiseModel noise_model(const RunConfig& c, int n_w) {
  NoiseModel m;
  m.n_w = n_w;
  m.distribution =
      c.noise == "rademacher" ? NoiseDistribution::kRademacher : NoiseDistribution::kStandardNormal;
  return m;
}

DisturbanceSignal disturbance(const RunConfig& c, int n_v, double amplitude, double ratio) {
  if (c.disturbance == "zero") return DisturbanceSignal::zero(n_v);
  return DisturbanceSignal::geometric(Vector::Constant(n_v, c.amplitude.value_or(amplitude)),
                                      c.ratio.value_or(ratio));
}

Vector initial_plant_state(const RunConfig& c, int n_x, const Vector& fallback) {
  if (c.x0.empty()) return fallback.size() == n_x ? fallback : Vector::Zero(n_x);
  if (static_cast<int>(c.x0.size()) != n_x) {
    throw UsageError("--x0 needs " + std::to_string(n_x) + " entries");
  }
  return Eigen::Map<const Vector>(c.x0.data(), n_x);
}

// η0 = [x0; x0 − x̂0] with x̂0 = 0.
Vector linear_eta0(const Vector& x0) {
  Vector eta(2 * x0.size());
  eta << x0, x0;
  return eta;
}

struct Design {
  double gamma = 0.0;
  Matrix gain, p1, p2, p_k;
  std::optional<SynthesisResult> fresh;
};

Design obtain_design(const RunConfig& c, const LinearStochasticSystem& sys, double gamma) {
  Design d;
  if (!c.result_path.empty()) {
    const io::StoredSynthesis s = io::stored_synthesis_from_json(io::read_json_file(c.result_path));
    d.gamma = s.gamma;
    d.gain = s.gain;
    d.p1 = s.p1;
    d.p2 = s.p2;
    d.p_k = s.p_k;
    return d;
  }
  SynthesisResult r = c.h2 ? synthesize_h2_hinf(sys, gamma) : synthesize_hinf(sys, gamma);
  d.gamma = r.gamma;
  d.gain = r.gain.gain;
  d.p1 = r.p1;
  d.p2 = r.p2;
  d.p_k = r.p_k;
  d.fresh = std::move(r);
  return d;
}

struct Property {
  std::string tag;
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::vector<Property> certify_design(const LinearStochasticSystem& sys, const Design& d) {
  std::vector<Property> out;
  const SdpProblem problem = assemble_lmi(sys, d.gamma);
  const double delta = resolve_delta(problem, SdpOptions{});
  const double eps = SdpOptions{}.eps;
  const double lmi_top = linalg::max_eigenvalue(lmi_matrix(sys, d.gamma, d.p1, d.p2, d.p_k));
  out.push_back({kTagLmi, lmi_top <= -delta,
                 "lambda_max(LMI) = " + num(lmi_top) + ", delta = " + num(delta)});
  const double f1 = linalg::min_eigenvalue(d.p1), f2 = linalg::min_eigenvalue(d.p2);
  out.push_back({kTagFloors, f1 >= eps && f2 >= eps,
                 "lambda_min(P1) = " + num(f1) + ", lambda_min(P2) = " + num(f2)});
  const double rec = (d.p2 * d.gain - d.p_k).cwiseAbs().maxCoeff();
  out.push_back({kTagRecovery, rec <= 1e-8 * (1.0 + d.p_k.cwiseAbs().maxCoeff()),
                 "max |P2 K - PK| = " + num(rec)});
  const AugmentedSystem aug = augment_linear(sys, LinearFilter{d.gain});
  try {
    const GariReport g =
        gari_check(QuadraticLyapunov(linalg::block_diagonal(d.p1, d.p2)), aug, d.gamma);
    out.push_back({kTagGari, g.feasible,
                   "max residual eig = " + num(g.schur_eigs.maxCoeff()) +
                       ", max gate eig = " + num(g.gate_eigs.maxCoeff())});
    out.push_back({kTagQuadForm, g.quadratic_form_max_eig < 0.0,
                   "lambda_max = " + num(g.quadratic_form_max_eig)});
  } catch (const Error& e) {
    out.push_back({kTagGari, false, e.what()});
    out.push_back({kTagQuadForm, false, e.what()});
  }
  const double rho = linalg::spectral_radius(aug.tilde().a);
  out.push_back({kTagStable, rho < 1.0, "rho = " + num(rho)});
  return out;
}

std::string property_text(const std::vector<Property>& props) {
  std::ostringstream os;
  for (const Property& p : props) {
    os << (p.pass ? "PASS " : "FAIL ") << p.tag << "  " << p.detail << '\n';
  }
  return os.str();
}

json property_json(const std::vector<Property>& props) {
  json out = json::array();
  for (const Property& p : props) {
    out.push_back({{"tag", p.tag}, {"pass", p.pass}, {"detail", p.detail}});
  }
  return out;
}

std::vector<std::string> tags(const std::vector<Property>& props) {
  std::vector<std::string> out;
  for (const Property& p : props) out.push_back(p.tag);
  return out;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const RunConfig& c, std::ostream& out) {
  const LinearStochasticSystem sys = linear_system(c);
  json extra = json::object();
  SynthesisResult result = [&] {
    if (c.min_gamma) {
      MinGammaResult m = min_gamma(sys, c.lo, c.hi, c.tol);
      extra = {{"gamma_star", m.gamma_star},
               {"evaluations", m.evaluations},
               {"warnings", m.warnings}};
      for (const std::string& w : m.warnings) out << "warning: " << w << '\n';
      return c.h2 ? synthesize_h2_hinf(sys, m.gamma_star) : std::move(m.result);
    }
    const double g = c.gamma.value_or(1.0);
    return c.h2 ? synthesize_h2_hinf(sys, g) : synthesize_hinf(sys, g);
  }();

  Design d;
  d.gamma = result.gamma;
  d.gain = result.gain.gain;
  d.p1 = result.p1;
  d.p2 = result.p2;
  d.p_k = result.p_k;
  const std::vector<Property> props = certify_design(sys, d);

  json doc = artifact(c, tags(props));
  doc["system"] = io::to_json(sys);
  doc["result"] = io::to_json(result);
  doc["bisection"] = extra;
  doc["properties"] = property_json(props);
  io::write_text_file(out_path(c, "synth_result.json"), io::dump(doc));
  io::write_text_file(out_path(c, "synth_report.txt"), property_text(props));

  out << "gamma " << result.gamma << "\ntrace " << result.trace_value << "\ngain\n"
      << result.gain.gain << '\n';
  return kOk;
}

// ------------------------------------------------------------- simulate

struct ZStats {
  std::vector<Vector> mean;
  std::vector<Vector> max_abs;
};

// Per-step mean and max |z̃| across trials; reduction in trial order.
ZStats z_statistics(const AugmentedSystem& aug, const DisturbanceSignal& dist,
                    const NoiseModel& noise, const Vector& eta0, int horizon, int trials,
                    std::uint64_t seed, Trajectory& first) {
  std::vector<std::vector<Vector>> zs(static_cast<std::size_t>(trials));
  parallel_trials(trials, [&](int i) {
    Trajectory t = simulate_trajectory(aug, dist, noise, eta0, horizon, trial_seed(seed, i));
    zs[static_cast<std::size_t>(i)] = std::move(t.z_tilde);
    if (i == 0) first = std::move(t);
  });
  if (trials > 0) first.z_tilde = zs[0];
  ZStats s;
  for (int k = 0; k <= horizon; ++k) {
    Vector mean = Vector::Zero(aug.n_z());
    Vector mx = Vector::Zero(aug.n_z());
    for (int i = 0; i < trials; ++i) {
      const Vector& z = zs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      mean += z;
      mx = mx.cwiseMax(z.cwiseAbs());
    }
    s.mean.push_back(mean / trials);
    s.max_abs.push_back(mx);
  }
  return s;
}

std::string z_stats_csv(const ZStats& s) {
  std::ostringstream os;
  const Eigen::Index nz = s.mean.empty() ? 0 : s.mean.front().size();
  os << "k";
  for (Eigen::Index j = 1; j <= nz; ++j) os << ",mean_z" << j;
  for (Eigen::Index j = 1; j <= nz; ++j) os << ",max_abs_z" << j;
  os << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < s.mean.size(); ++k) {
    os << k;
    for (Eigen::Index j = 0; j < nz; ++j) os << ',' << s.mean[k](j);
    for (Eigen::Index j = 0; j < nz; ++j) os << ',' << s.max_abs[k](j);
    os << '\n';
  }
  return os.str();
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  std::optional<io::LoadedSystem> loaded;
  const bool nonlinear = wants_nonlinear(c, loaded);
  std::optional<AugmentedSystem> aug;
  std::optional<DisturbanceSignal> dist;
  Vector eta0;
  double gamma = 1.0;
  int n_w = 1;
  json design_json = nullptr;

  if (nonlinear) {
    const io::NonlinearModel model =
        c.fixture == "example51"
            ? io::NonlinearModel{fixtures::example51_system(), fixtures::example51_filter()}
            : *loaded->nonlinear;
    aug = augment_nonlinear(model.system, model.filter);
    const bool fixture = c.fixture == "example51";
    dist = disturbance(c, model.system.dims.n_v, fixture ? fixtures::kExample51Amplitude : 1.0,
                       fixture ? fixtures::kExample51Ratio : 0.9);
    gamma = c.gamma.value_or(fixtures::kExample51Gamma);
    n_w = model.system.dims.n_w;
    eta0 = Vector::Zero(aug->n_eta());
    if (!c.x0.empty()) {
      eta0.head(model.system.dims.n_x) =
          initial_plant_state(c, model.system.dims.n_x, Vector());
    }
  } else {
    const LinearStochasticSystem sys = loaded ? *loaded->linear : linear_system(c);
    const Design d = obtain_design(c, sys, c.gamma.value_or(1.0));
    aug = augment_linear(sys, LinearFilter{d.gain});
    const bool fixture = c.fixture == "example52";
    dist = disturbance(c, sys.dims().n_v, fixture ? fixtures::kExample52Amplitude : 1.0,
                       fixture ? fixtures::kExample52Ratio : 0.9);
    gamma = d.gamma;
    n_w = sys.dims().n_w;
    eta0 = c.x0.empty() ? Vector::Zero(aug->n_eta())
                        : linear_eta0(initial_plant_state(c, sys.dims().n_x, Vector()));
    design_json = {{"gamma", d.gamma}, {"gain", io::to_json(d.gain)}};
  }

  const NoiseModel noise = noise_model(c, n_w);
  const EnergyReport rep = monte_carlo(*aug, *dist, noise, eta0, c.horizon, c.trials, c.seed);
  // The energy inequality holds from rest; otherwise V(η0) enters the bound.
  json gain = nullptr;
  if (eta0.isZero(0.0)) {
    try {
      gain = io::to_json(empirical_gain(rep, gamma));
    } catch (const UndefinedRatioError&) {
      gain = nullptr;
    }
  }
  Trajectory first;
  const ZStats zs = z_statistics(*aug, *dist, noise, eta0, c.horizon, c.trials, c.seed, first);

  json doc = artifact(c, {kTagGain});
  doc["gamma"] = gamma;
  doc["eta0"] = io::to_json(eta0);
  doc["design"] = design_json;
  doc["energy"] = io::to_json(rep);
  doc["gain_check"] = gain;
  io::write_text_file(out_path(c, "simulate.json"), io::dump(doc));
  io::write_text_file(out_path(c, "energy.csv"), io::energy_csv(rep));
  io::write_text_file(out_path(c, "z_stats.csv"), z_stats_csv(zs));
  io::write_text_file(out_path(c, "trajectory.csv"), io::trajectory_csv(first));

  out << "cum_z[T] " << rep.cum_z.back() << "\ncum_v[T] " << rep.cum_v.back() << '\n';
  if (!gain.is_null()) {
    out << "gain ratio " << gain["ratio"].get<double>() << "  satisfied "
        << (gain["satisfied"].get<bool>() ? "yes" : "no") << '\n';
  }
  return kOk;
}

// --------------------------------------------------------------- verify

int cmd_verify(const RunConfig& c, std::ostream& out) {
  std::optional<io::LoadedSystem> loaded;
  const bool nonlinear = wants_nonlinear(c, loaded);
  json doc;
  bool violated = false;
  SamplingBudget hji_budget;
  hji_budget.points = std::max<long>(1000, std::min<long>(c.points, 4096));

  if (nonlinear) {
    const double gamma = c.gamma.value_or(fixtures::kExample51Gamma);
    const io::NonlinearModel model =
        c.fixture == "example51"
            ? io::NonlinearModel{fixtures::example51_system(), fixtures::example51_filter()}
            : *loaded->nonlinear;
    const AugmentedSystem aug = augment_nonlinear(model.system, model.filter);
    const int n = aug.n_eta(), nv = aug.n_v();
    std::vector<std::string> checks;
    json results = json::object();

    if (c.fixture == "example51") {
      const AffineStochasticSystem sys = fixtures::example51_affine_system();
      const AffineFilter filter = fixtures::example51_affine_filter();
      SamplingBudget budget;
      budget.points = c.points;
      const CheckOutcome block = check_block_diagonal_conditions(
          sys, filter, Matrix::Identity(2, 2), Matrix::Identity(2, 2), gamma, Box::cube(4, c.box),
          budget);
      results[kTagBlock] = io::to_json(block);
      checks.push_back(kTagBlock);
      violated = violated || block.violated();
      out << kTagBlock << ": " << (block.violated() ? "violated" : "no-violation-found") << '\n';
    }

    Box domain;
    domain.lower = Vector(n + nv);
    domain.lower << Vector::Constant(n, -c.box), Vector::Constant(nv, -c.v_box);
    domain.upper = -domain.lower;
    const CheckOutcome hji =
        check_hji_sampling(QuadraticLyapunov(Matrix::Identity(n, n)), aug, gamma, domain,
                           hji_budget, default_expectation(aug));
    results[kTagHji] = io::to_json(hji);
    checks.push_back(kTagHji);
    violated = violated || hji.violated();
    out << kTagHji << ": " << (hji.violated() ? "violated" : "no-violation-found") << '\n';
    for (const std::string& w : hji.warnings) out << "warning: " << w << '\n';

    doc = artifact(c, checks);
    doc["gamma"] = gamma;
    doc["lyapunov"] = "identity";
    doc["results"] = results;
  } else {
    const LinearStochasticSystem sys = loaded ? *loaded->linear : linear_system(c);
    const Design d = obtain_design(c, sys, c.gamma.value_or(1.0));
    const AugmentedSystem aug = augment_linear(sys, LinearFilter{d.gain});
    const QuadraticLyapunov P(linalg::block_diagonal(d.p1, d.p2));
    const GariReport gari = gari_check(P, aug, d.gamma);
    const int n = aug.n_eta(), nv = aug.n_v();
    Box domain;
    domain.lower = Vector(n + nv);
    domain.lower << Vector::Constant(n, -c.box), Vector::Constant(nv, -c.v_box);
    domain.upper = -domain.lower;
    const CheckOutcome hji = check_hji_sampling(P, aug, d.gamma, domain, hji_budget,
                                                ExpectationConfig::analytic_affine());
    violated = !gari.feasible || hji.violated();
    out << kTagGari << ": " << (gari.feasible ? "feasible" : "infeasible") << '\n'
        << kTagHji << ": " << (hji.violated() ? "violated" : "no-violation-found") << '\n';
    for (const std::string& w : hji.warnings) out << "warning: " << w << '\n';

    doc = artifact(c, {kTagGari, kTagQuadForm, kTagHji});
    doc["gamma"] = d.gamma;
    doc["gain"] = io::to_json(d.gain);
    doc["results"] = {{kTagGari, io::to_json(gari)}, {kTagHji, io::to_json(hji)}};
  }
  doc["status"] = violated ? "violated" : "no-violation-found";
  io::write_text_file(out_path(c, "verify.json"), io::dump(doc));
  return violated ? kCounterexample : kOk;
}

// ----------------------------------------------------------- worst-case

int cmd_worst_case(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const LinearStochasticSystem sys = linear_system(c);
  // A bare feasibility point need not make Ã + B̃F stable; the worst-case law
  // is taken against the minimum-trace design.
  RunConfig mixed = c;
  mixed.h2 = true;
  const Design d = obtain_design(mixed, sys, c.synth_gamma.value_or(1.0));
  const AugmentedSystem aug = augment_linear(sys, LinearFilter{d.gain});
  const QuadraticLyapunov P(linalg::block_diagonal(d.p1, d.p2));
  const double gamma = c.gamma.value_or(d.gamma);

  json doc = artifact(c, {kTagWorst, kTagH2});
  doc["synthesis_gamma"] = d.gamma;
  doc["gamma"] = gamma;
  WorstCaseLaw law;
  try {
    law = worst_case_disturbance(aug, P, gamma);
  } catch (const PreconditionError& e) {
    doc["status"] = "gate-not-negative-definite";
    doc["gate_eigs"] =
        io::to_json(linalg::symmetric_eigenvalues(linalg::symmetrize(gate_matrix(aug, P.p(), gamma))));
    io::write_text_file(out_path(c, "worst_case.json"), io::dump(doc));
    err << "error: " << e.what() << '\n';
    return kGateFailure;
  }
  const Vector x0 = initial_plant_state(
      c, sys.dims().n_x, c.fixture == "example52" ? fixtures::example52_x0() : Vector());
  const Vector eta0 = linear_eta0(x0);
  const H2CostReport cost = h2_cost_under_worst_case(aug, law, P, eta0, c.trials, c.horizon,
                                                     c.seed, noise_model(c, sys.dims().n_w));
  const double rho = linalg::spectral_radius(aug.tilde().a + aug.tilde().b * law.f_gain);
  const bool bound = cost.residual <= kStatSlackSigmas * cost.residual_stderr;

  doc["status"] = "ok";
  doc["law"] = io::to_json(law);
  doc["closed_loop_spectral_radius"] = rho;
  doc["eta0"] = io::to_json(eta0);
  doc["cost"] = io::to_json(cost);
  doc["residual_bound_satisfied"] = bound;
  io::write_text_file(out_path(c, "worst_case.json"), io::dump(doc));

  out << "gate condition " << law.gate_condition << "\nresidual " << cost.residual << " +/- "
      << cost.residual_stderr << "\nresidual <= 3 stderr: " << (bound ? "yes" : "no") << '\n';
  return kOk;
}

// --------------------------------------------------------------- report

int cmd_report(const RunConfig& c, std::ostream& out) {
  const LinearStochasticSystem sys = linear_system(c);
  const Design d = obtain_design(c, sys, c.gamma.value_or(1.0));
  std::vector<Property> props = certify_design(sys, d);
  const AugmentedSystem aug = augment_linear(sys, LinearFilter{d.gain});
  const NoiseModel noise = noise_model(c, sys.dims().n_w);
  const bool fixture = c.fixture == "example52";

  const DisturbanceSignal dist =
      disturbance(c, sys.dims().n_v, fixture ? fixtures::kExample52Amplitude : 1.0,
                  fixture ? fixtures::kExample52Ratio : 0.9);
  const EnergyReport rep =
      monte_carlo(aug, dist, noise, Vector::Zero(aug.n_eta()), c.horizon, c.trials, c.seed);
  try {
    const GainCheck g = empirical_gain(rep, d.gamma);
    props.push_back({kTagGain, g.satisfied,
                     "ratio = " + num(g.ratio) + ", worst excess = " + num(g.worst_excess)});
  } catch (const UndefinedRatioError& e) {
    props.push_back({kTagGain, false, e.what()});
  }

  const Vector x0 = initial_plant_state(c, sys.dims().n_x,
                                        fixture ? fixtures::example52_x0()
                                                : Vector::Ones(sys.dims().n_x));
  const DecayReport decay = internal_stability_probe(aug, noise, {linear_eta0(x0)},
                                                     std::max(c.horizon, kDecayHorizon), c.trials,
                                                     c.seed);
  const double frac = decay.entries.front().decay_fraction;
  props.push_back({kTagDecay, frac == 1.0, "decay fraction = " + num(frac)});

  const bool all = std::all_of(props.begin(), props.end(), [](const Property& p) { return p.pass; });
  json doc = artifact(c, tags(props));
  doc["gamma"] = d.gamma;
  doc["gain"] = io::to_json(d.gain);
  doc["properties"] = property_json(props);
  doc["energy"] = io::to_json(rep);
  doc["decay"] = io::to_json(decay);
  io::write_text_file(out_path(c, "report.json"), io::dump(doc));
  const std::string text = property_text(props);
  io::write_text_file(out_path(c, "report.txt"), text);
  out << text;
  return all ? kOk : kCounterexample;
}

void validate(const RunConfig& c) {
  const bool has_fixture = !c.fixture.empty();
  const bool has_system = !c.system_path.empty();
  if (has_fixture == has_system) throw UsageError("give exactly one of --fixture or --system");
  if (has_fixture && c.fixture != "example51" && c.fixture != "example52") {
    throw UsageError("unknown fixture " + c.fixture);
  }
  if (c.trials < 1) throw UsageError("--trials must be at least 1");
  if (c.horizon < 0) throw UsageError("--horizon must be non-negative");
  if (c.gamma && !(*c.gamma > 0.0)) throw UsageError("--gamma must be positive");
  if (c.synth_gamma && !(*c.synth_gamma > 0.0)) throw UsageError("--synth-gamma must be positive");
  if (c.disturbance != "geometric" && c.disturbance != "zero") {
    throw UsageError("--disturbance must be geometric or zero");
  }
  if (c.noise != "normal" && c.noise != "rademacher") {
    throw UsageError("--noise must be normal or rademacher");
  }
  if (!(c.box > 0.0) || !(c.v_box >= 0.0)) throw UsageError("sampling boxes must be positive");
  if (c.points < 1000) throw UsageError("--points must be at least 1000");
}

}  // namespace

int execute(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    validate(c);
    if (c.command == "synth") return cmd_synth(c, out);
    if (c.command == "simulate") return cmd_simulate(c, out);
    if (c.command == "verify") return cmd_verify(c, out);
    if (c.command == "worst-case") return cmd_worst_case(c, out, err);
    if (c.command == "report") return cmd_report(c, out);
    throw UsageError("unknown command " + c.command);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const SdpNotFoundError& e) {
    err << "infeasible: " << e.what() << " (best lambda_max " << e.best_max_eig() << ")\n";
    return kInfeasible;
  } catch (const NoBracketError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const IllConditionedError& e) {
    err << "ill-conditioned: " << e.what() << '\n';
    return kIllConditioned;
  } catch (const ConditioningError& e) {
    err << "ill-conditioned: " << e.what() << '\n';
    return kIllConditioned;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << " (step " << e.step() << ", trial " << e.trial()
        << ")\n";
    return kDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Filter synthesis and verification for stochastic systems with multiplicative "
               "noise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--fixture", c.fixture, "Built-in system: example51 or example52");
    sub->add_option("--system", c.system_path, "System JSON file");
    sub->add_option("--result", c.result_path, "Stored synthesis result to reuse");
    sub->add_option("--out", c.out_dir, "Output directory");
    sub->add_option("--gamma", c.gamma, "Attenuation level");
    sub->add_flag("--h2", c.h2, "Minimize trace(P1 + P2) instead of feasibility only");
    sub->add_option("--seed", c.seed, "Master seed");
    sub->add_option("--noise", c.noise, "normal or rademacher");
  };
  auto monte_carlo_opts = [&](CLI::App* sub) {
    sub->add_option("--trials", c.trials, "Monte Carlo trials");
    sub->add_option("--horizon", c.horizon, "Steps per trial");
    sub->add_option("--x0", c.x0, "Initial plant state, comma separated")->delimiter(',');
    sub->add_option("--disturbance", c.disturbance, "geometric or zero");
    sub->add_option("--amplitude", c.amplitude, "Geometric disturbance amplitude");
    sub->add_option("--ratio", c.ratio, "Geometric disturbance ratio");
  };

  CLI::App* synth = app.add_subcommand("synth", "Synthesize a filter gain");
  common(synth);
  synth->add_flag("--min-gamma", c.min_gamma, "Bisect for the smallest feasible gamma");
  synth->add_option("--lo", c.lo, "Bisection lower end");
  synth->add_option("--hi", c.hi, "Bisection upper end");
  synth->add_option("--tol", c.tol, "Bisection width");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo energy simulation");
  common(simulate);
  monte_carlo_opts(simulate);

  CLI::App* verify = app.add_subcommand("verify", "Riccati and HJI checks");
  common(verify);
  verify->add_option("--box", c.box, "Half-width of the state sampling box");
  verify->add_option("--v-box", c.v_box, "Half-width of the disturbance sampling box");
  verify->add_option("--points", c.points, "Low-discrepancy sample points");

  CLI::App* worst = app.add_subcommand("worst-case", "Worst-case disturbance and H2 residual");
  common(worst);
  monte_carlo_opts(worst);
  worst->add_option("--synth-gamma", c.synth_gamma, "Level used to synthesize P");

  CLI::App* report = app.add_subcommand("report", "Recheck every certified property");
  common(report);
  monte_carlo_opts(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  for (CLI::App* sub : {synth, simulate, verify, worst, report}) {
    if (sub->parsed()) c.command = sub->get_name();
  }
  return execute(c, out, err);
}

}  // namespace cli
}  // namespace hfk
