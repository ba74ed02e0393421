#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "hfk/hji.hpp"
#include "hfk/noise_sim.hpp"
#include "hfk/sdp.hpp"
#include "hfk/synth.hpp"

namespace hfk {
namespace io {

using json = nlohmann::json;

/// Row-major nested arrays.
json to_json(const Matrix& m);
json to_json(const Vector& v);
/// `what` names the field in error messages. Throws ParseError.
Matrix matrix_from_json(const json& j, const std::string& what);
Vector vector_from_json(const json& j, const std::string& what);

/// Throws IoError when the file cannot be read, ParseError on bad JSON.
json read_json_file(const std::string& path);
/// Throws IoError.
void write_text_file(const std::string& path, const std::string& content);
/// Pretty-printed with a trailing newline.
std::string dump(const json& j);

/// {"dims": {"n_x", "n_y", "n_v", "n_z"[, "n_w"]}, "A", "B", "C", "D",
/// "K" (or "H"), "L", "G", "M"}. Missing C, D, M default to zero.
LinearStochasticSystem linear_system_from_json(const json& j);
json to_json(const LinearStochasticSystem& sys);

/// Lowercase parameter names: c_r, m_s, h_cr, i_xx, k_r, d_n, t_s.
VehicleParams vehicle_params_from_json(const json& j);
/// {"params": {...}, "H", "B", "L", "G"[, "gravity_variant"]}.
LinearStochasticSystem vehicle_system_from_json(const json& j);

/// Plant and filter given as expression strings:
///   f: n_x strings over x1.., w1.., v1.., k;  g: n_y over x.., v.., k;
///   m: n_z over x.., v.., k;
///   filter.f_hat / m_hat over xh1.., k;  filter.g_hat over y1.., k.
struct NonlinearModel {
  NonlinearStochasticSystem system;
  NonlinearFilter filter;
};
NonlinearModel nonlinear_model_from_json(const json& j);

/// A system file is one of {"kind": "linear" | "vehicle" | "nonlinear"};
/// "linear" is the default.
struct LoadedSystem {
  std::optional<LinearStochasticSystem> linear;
  std::optional<NonlinearModel> nonlinear;
};
LoadedSystem load_system_file(const std::string& path);

json to_json(const SdpSolution& s);
json to_json(const SdpProblem& p);
json to_json(const GariReport& r);
json to_json(const SynthesisResult& r);

/// The parts of a stored synthesis result needed to rebuild the filter.
struct StoredSynthesis {
  double gamma = 0.0;
  Matrix gain, p1, p2, p_k;
};
StoredSynthesis stored_synthesis_from_json(const json& j);

json to_json(const EnergyReport& r);
/// Header plus one row per step: k,cum_z,cum_v,stderr_z,stderr_v.
std::string energy_csv(const EnergyReport& r);
json to_json(const GainCheck& g);
json to_json(const DecayReport& r);
/// Header plus one row per step: k, eta_1.., z_1.., v_1..
std::string trajectory_csv(const Trajectory& t);

json to_json(const CheckOutcome& c);
json to_json(const WorstCaseLaw& w);
json to_json(const H2CostReport& r);

}  // namespace io
}  // namespace hfk
