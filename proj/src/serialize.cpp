#include "hfk/serialize.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "hfk/errors.hpp"
#include "hfk/expr.hpp"

namespace hfk {
namespace io {

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw ParseError(what + ": expected nested arrays");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ParseError(what + ": ragged rows");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw ParseError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + ": non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

namespace {

const json& require(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError("missing field '" + key + "'");
  return j.at(key);
}

int dim_field(const json& dims, const std::string& key, int fallback = -1) {
  if (!dims.contains(key)) {
    if (fallback >= 0) return fallback;
    throw ParseError("dims: missing '" + key + "'");
  }
  if (!dims.at(key).is_number_integer()) throw ParseError("dims: '" + key + "' must be an integer");
  return dims.at(key).get<int>();
}

Dims dims_from_json(const json& j) {
  const json& d = require(j, "dims");
  Dims dims{dim_field(d, "n_x"), dim_field(d, "n_y"), dim_field(d, "n_v"), dim_field(d, "n_z"),
            dim_field(d, "n_w", 1)};
  dims.validate();
  return dims;
}

double number_field(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw ParseError("'" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

LinearStochasticSystem linear_system_from_json(const json& j) {
  const Dims dims = dims_from_json(j);
  LinearStochasticSystem::Matrices m;
  auto get = [&](const char* key, int rows, int cols, bool optional) -> Matrix {
    if (!j.contains(key)) {
      if (optional) return Matrix::Zero(rows, cols);
      throw ParseError(std::string("missing matrix '") + key + "'");
    }
    return matrix_from_json(j.at(key), key);
  };
  m.a = get("A", dims.n_x, dims.n_x, false);
  m.b = get("B", dims.n_x, dims.n_v, false);
  m.c = get("C", dims.n_x, dims.n_x, true);
  m.d = get("D", dims.n_x, dims.n_v, true);
  if (j.contains("K") && j.contains("H")) throw ParseError("give the measurement matrix as K or H");
  m.k_meas = get(j.contains("H") ? "H" : "K", dims.n_y, dims.n_x, false);
  m.l_meas = get("L", dims.n_y, dims.n_v, false);
  m.g_out = get("G", dims.n_z, dims.n_x, false);
  m.m_out = get("M", dims.n_z, dims.n_v, true);
  return build_linear_system(std::move(m), dims);
}

json to_json(const LinearStochasticSystem& sys) {
  const Dims& d = sys.dims();
  return json{{"dims", {{"n_x", d.n_x}, {"n_y", d.n_y}, {"n_v", d.n_v}, {"n_z", d.n_z},
                        {"n_w", d.n_w}}},
              {"A", to_json(sys.a())},      {"B", to_json(sys.b())},
              {"C", to_json(sys.c())},      {"D", to_json(sys.d())},
              {"K", to_json(sys.k_meas())}, {"L", to_json(sys.l_meas())},
              {"G", to_json(sys.g_out())},  {"M", to_json(sys.m_out())}};
}

VehicleParams vehicle_params_from_json(const json& j) {
  VehicleParams p;
  p.c_r = number_field(j, "c_r");
  p.m_s = number_field(j, "m_s");
  p.h_cr = number_field(j, "h_cr");
  p.i_xx = number_field(j, "i_xx");
  p.k_r = number_field(j, "k_r");
  p.d_n = number_field(j, "d_n");
  p.t_s = number_field(j, "t_s");
  p.validate();
  return p;
}

LinearStochasticSystem vehicle_system_from_json(const json& j) {
  const VehicleParams p = vehicle_params_from_json(require(j, "params"));
  VehicleMeasurement m;
  m.h = matrix_from_json(require(j, "H"), "H");
  m.b = matrix_from_json(require(j, "B"), "B");
  m.l = matrix_from_json(require(j, "L"), "L");
  m.g_out = matrix_from_json(require(j, "G"), "G");
  const bool gravity = j.value("gravity_variant", false);
  return discretize_vehicle(p, m, gravity);
}

namespace {

std::vector<std::string> names(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// A vector-valued map compiled from expression strings.
class ExprMap {
 public:
  ExprMap(const json& j, const std::string& what, int out_dim, std::vector<std::string> vars) {
    if (!j.is_array() || static_cast<int>(j.size()) != out_dim) {
      throw ParseError(what + ": expected " + std::to_string(out_dim) + " expressions");
    }
    for (const json& e : j) {
      if (!e.is_string()) throw ParseError(what + ": expressions must be strings");
      exprs_.push_back(Expression::parse(e.get<std::string>(), vars));
    }
  }

  Vector operator()(const std::vector<double>& values) const {
    Vector out(static_cast<Eigen::Index>(exprs_.size()));
    for (std::size_t i = 0; i < exprs_.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) = exprs_[i].eval(values);
    }
    return out;
  }

 private:
  std::vector<Expression> exprs_;
};

void append(std::vector<double>& dst, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) dst.push_back(v(i));
}

}  // namespace

NonlinearModel nonlinear_model_from_json(const json& j) {
  const Dims d = dims_from_json(j);
  const auto xs = names("x", d.n_x), ws = names("w", d.n_w), vs = names("v", d.n_v);
  const std::vector<std::string> k{"k"};
  auto f = std::make_shared<ExprMap>(require(j, "f"), "f", d.n_x, concat({xs, ws, vs, k}));
  auto g = std::make_shared<ExprMap>(require(j, "g"), "g", d.n_y, concat({xs, vs, k}));
  auto m = std::make_shared<ExprMap>(require(j, "m"), "m", d.n_z, concat({xs, vs, k}));

  const json& fj = require(j, "filter");
  const int n_xh = fj.is_object() && fj.contains("n_xhat") ? fj.at("n_xhat").get<int>() : d.n_x;
  const auto xhs = names("xh", n_xh), ys = names("y", d.n_y);
  auto fh = std::make_shared<ExprMap>(require(fj, "f_hat"), "f_hat", n_xh, concat({xhs, k}));
  auto gh = std::make_shared<ExprMap>(require(fj, "g_hat"), "g_hat", n_xh, concat({ys, k}));
  auto mh = std::make_shared<ExprMap>(require(fj, "m_hat"), "m_hat", d.n_z, concat({xhs, k}));

  StateMap fs = [f](int step, const Vector& x, const Vector& w, const Vector& v) {
    std::vector<double> vals;
    append(vals, x);
    append(vals, w);
    append(vals, v);
    vals.push_back(step);
    return (*f)(vals);
  };
  auto out_map = [](std::shared_ptr<ExprMap> e) -> OutputMap {
    return [e](int step, const Vector& x, const Vector& v) {
      std::vector<double> vals;
      append(vals, x);
      append(vals, v);
      vals.push_back(step);
      return (*e)(vals);
    };
  };
  auto filter_map = [](std::shared_ptr<ExprMap> e) -> FilterMap {
    return [e](int step, const Vector& a) {
      std::vector<double> vals;
      append(vals, a);
      vals.push_back(step);
      return (*e)(vals);
    };
  };
  NonlinearModel model{make_nonlinear_system(fs, out_map(g), out_map(m), d),
                       make_nonlinear_filter(filter_map(fh), filter_map(gh), filter_map(mh), n_xh,
                                             d.n_y, d.n_z)};
  return model;
}

LoadedSystem load_system_file(const std::string& path) {
  const json j = read_json_file(path);
  const std::string kind = j.is_object() ? j.value("kind", std::string("linear")) : "";
  LoadedSystem out;
  if (kind == "linear") {
    out.linear = linear_system_from_json(j);
  } else if (kind == "vehicle") {
    out.linear = vehicle_system_from_json(j);
  } else if (kind == "nonlinear") {
    out.nonlinear = nonlinear_model_from_json(j);
  } else {
    throw ParseError(path + ": unknown system kind '" + kind + "'");
  }
  return out;
}

json to_json(const SdpSolution& s) {
  json blocks = json::object();
  for (const auto& [name, m] : s.blocks) blocks[name] = to_json(m);
  return json{{"status", to_string(s.status)},
              {"x", to_json(s.x)},
              {"blocks", blocks},
              {"objective", s.objective},
              {"lmi_max_eigs", s.lmi_max_eigs},
              {"floor_min_eigs", s.floor_min_eigs},
              {"eps", s.eps},
              {"delta", s.delta},
              {"iterations", s.iterations},
              {"gap", s.gap},
              {"objective_trace", s.objective_trace},
              {"best_max_eig", s.best_max_eig}};
}

json to_json(const SdpProblem& p) {
  json layout = json::array();
  for (const VariableBlock& b : p.layout.blocks()) {
    layout.push_back({{"name", b.name},
                      {"symmetric", b.symmetric},
                      {"rows", b.rows},
                      {"cols", b.cols},
                      {"offset", b.offset}});
  }
  json lmis = json::array();
  for (const AffineSymmetricMap& m : p.lmis) {
    json basis = json::array();
    for (const Matrix& fi : m.fi) basis.push_back(to_json(fi));
    lmis.push_back({{"side", m.side()}, {"F0", to_json(m.f0)}, {"F", basis}});
  }
  return json{{"layout", layout},
              {"lmis", lmis},
              {"floor_blocks", p.floor_blocks},
              {"objective", to_json(p.objective)}};
}

json to_json(const GariReport& r) {
  return json{{"feasible", r.feasible},
              {"riccati_residual_eigs", to_json(r.schur_eigs)},
              {"gate_eigs", to_json(r.gate_eigs)},
              {"quadratic_form_max_eig", r.quadratic_form_max_eig},
              {"schur_agrees", r.schur_agrees}};
}

json to_json(const SynthesisResult& r) {
  return json{{"gamma", r.gamma},
              {"gain", to_json(r.gain.gain)},
              {"P1", to_json(r.p1)},
              {"P2", to_json(r.p2)},
              {"PK", to_json(r.p_k)},
              {"trace", r.trace_value},
              {"p2_condition", r.p2_condition},
              {"solver", to_json(r.solution)},
              {"gari", to_json(r.gari)}};
}

StoredSynthesis stored_synthesis_from_json(const json& j) {
  const json& r = j.is_object() && j.contains("result") ? j.at("result") : j;
  StoredSynthesis s;
  s.gamma = number_field(r, "gamma");
  s.gain = matrix_from_json(require(r, "gain"), "gain");
  s.p1 = matrix_from_json(require(r, "P1"), "P1");
  s.p2 = matrix_from_json(require(r, "P2"), "P2");
  s.p_k = matrix_from_json(require(r, "PK"), "PK");
  return s;
}

json to_json(const EnergyReport& r) {
  return json{{"horizon", r.horizon}, {"trials", r.trials},     {"master_seed", r.master_seed},
              {"cum_z", r.cum_z},     {"cum_v", r.cum_v},       {"stderr_z", r.stderr_z},
              {"stderr_v", r.stderr_v}};
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string energy_csv(const EnergyReport& r) {
  std::ostringstream os;
  os << "k,cum_z,cum_v,stderr_z,stderr_v\n";
  for (std::size_t k = 0; k < r.cum_z.size(); ++k) {
    os << k << ',' << fmt(r.cum_z[k]) << ',' << fmt(r.cum_v[k]) << ',' << fmt(r.stderr_z[k])
       << ',' << fmt(r.stderr_v[k]) << '\n';
  }
  return os.str();
}

json to_json(const GainCheck& g) {
  return json{{"ratio", g.ratio},
              {"satisfied", g.satisfied},
              {"worst_step", g.worst_step},
              {"worst_excess", g.worst_excess}};
}

json to_json(const DecayReport& r) {
  json entries = json::array();
  for (const DecayEntry& e : r.entries) {
    json sup = json::array();
    for (double s : e.sup_norms) sup.push_back(std::isfinite(s) ? json(s) : json("inf"));
    entries.push_back({{"eta0", to_json(e.eta0)},
                       {"decay_fraction", e.decay_fraction},
                       {"divergent", e.divergent},
                       {"sup_norms", sup}});
  }
  return json{{"horizon", r.horizon},
              {"trials", r.trials},
              {"tol_decay", r.tol_decay},
              {"entries", entries}};
}

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream os;
  const Eigen::Index ne = t.eta.empty() ? 0 : t.eta.front().size();
  const Eigen::Index nz = t.z_tilde.empty() ? 0 : t.z_tilde.front().size();
  const Eigen::Index nv = t.v.empty() ? 0 : t.v.front().size();
  os << "k";
  for (Eigen::Index i = 1; i <= ne; ++i) os << ",eta" << i;
  for (Eigen::Index i = 1; i <= nz; ++i) os << ",z" << i;
  for (Eigen::Index i = 1; i <= nv; ++i) os << ",v" << i;
  os << '\n';
  for (std::size_t k = 0; k < t.eta.size(); ++k) {
    os << k;
    for (Eigen::Index i = 0; i < ne; ++i) os << ',' << fmt(t.eta[k](i));
    for (Eigen::Index i = 0; i < nz; ++i) os << ',' << fmt(t.z_tilde[k](i));
    for (Eigen::Index i = 0; i < nv; ++i) os << ',' << fmt(t.v[k](i));
    os << '\n';
  }
  return os.str();
}

json to_json(const CheckOutcome& c) {
  json out{{"status", c.violated() ? "violated" : "no-violation-found"},
           {"points_checked", c.points_checked},
           {"max_margin", c.max_margin},
           {"condition_margins", c.condition_margins},
           {"warnings", c.warnings}};
  if (c.counterexample) {
    out["counterexample"] = {{"eta", to_json(c.counterexample->eta)},
                             {"v", to_json(c.counterexample->v)},
                             {"margin", c.counterexample->value},
                             {"condition", c.counterexample->condition}};
  } else {
    out["counterexample"] = nullptr;
  }
  return out;
}

json to_json(const WorstCaseLaw& w) {
  return json{{"gamma", w.gamma},
              {"F", to_json(w.f_gain)},
              {"gate", to_json(w.gate)},
              {"gate_condition", w.gate_condition}};
}

json to_json(const H2CostReport& r) {
  return json{{"trials", r.trials},
              {"horizon", r.horizon},
              {"master_seed", r.master_seed},
              {"sum_z", r.sum_z},
              {"sum_v_weighted", r.sum_v_weighted},
              {"v0", r.v0},
              {"residual", r.residual},
              {"residual_stderr", r.residual_stderr}};
}

}  // namespace io
}  // namespace hfk
