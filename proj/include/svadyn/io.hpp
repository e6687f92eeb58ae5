#pragma once

// Text formats: model files, scenario files, sample/controller CSV logs,
// fit results, metrics and run manifests. All numeric output is printed with
// 17 significant digits so files round-trip losslessly, and every format
// starts with a format_version field.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svadyn/model.hpp"
#include "svadyn/identify.hpp"
#include "svadyn/sim.hpp"

namespace svadyn {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_number(line) {}
  std::size_t line_number;
};

namespace detail {

struct Tokenizer {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  std::size_t line = 0;

  bool done() const { return pos >= tokens.size(); }

  const std::string& next(const char* what) {
    if (done()) throw ParseError(std::string("expected ") + what, line);
    return tokens[pos++];
  }

  double next_double(const char* what) {
    const std::string& tok = next(what);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ParseError(std::string("expected number for ") + what + ", got '" + tok + "'", line);
    }
    if (used != tok.size())
      throw ParseError(std::string("expected number for ") + what + ", got '" + tok + "'", line);
    return v;
  }

  Vec3 next_vec3(const char* what) {
    return {next_double(what), next_double(what), next_double(what)};
  }
};

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

/// Lines of a document as token lists, with '#' comments stripped.
inline std::vector<Tokenizer> tokenize_lines(const std::string& text) {
  std::vector<Tokenizer> out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    Tokenizer t;
    t.tokens = std::move(toks);
    t.line = lineno;
    out.push_back(std::move(t));
  }
  return out;
}

inline void expect_format_version(std::vector<Tokenizer>& lines, const char* kind) {
  if (lines.empty()) throw ParseError(std::string("empty ") + kind + " document", 0);
  auto& first = lines.front();
  if (first.next("format_version") != "format_version")
    throw ParseError(std::string(kind) + " document must start with format_version", first.line);
  const double v = first.next_double("format version");
  if (v != kFormatVersion)
    throw ParseError("unsupported format_version " + format_double(v), first.line);
  if (!first.done()) throw ParseError("trailing tokens after format_version", first.line);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model files.
//
//   format_version 1
//   gravity <gx> <gy> <gz>
//   vertical <x> <y> <z>
//   link <name> axis <x y z> offset <x y z> theta <10 floats>
//   link <name> axis <x y z> offset <x y z> physical m <m> com <x y z> \
//        inertia <xx yy zz xy xz yz>

inline ChainModel parse_model(const std::string& text) {
  auto lines = detail::tokenize_lines(text);
  detail::expect_format_version(lines, "model");

  ChainModel model;
  bool have_gravity = false, have_vertical = false;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto& t = lines[li];
    const std::string key = t.next("keyword");
    if (key == "gravity") {
      model.base_gravity = t.next_vec3("gravity vector");
      have_gravity = true;
    } else if (key == "vertical") {
      model.vertical_axis = t.next_vec3("vertical axis");
      have_vertical = true;
    } else if (key == "link") {
      LinkSpec spec;
      spec.name = t.next("link name");
      if (t.next("'axis'") != "axis") throw ParseError("expected 'axis' after link name", t.line);
      spec.joint_axis = t.next_vec3("axis");
      if (t.next("'offset'") != "offset") throw ParseError("expected 'offset'", t.line);
      spec.offset = t.next_vec3("offset");
      if (std::abs(spec.joint_axis.norm() - 1.0) > 1e-6)
        throw ParseError("link '" + spec.name + "': axis is not unit length", t.line);
      spec.joint_axis.normalize();

      LinkParams params;
      const std::string form = t.next("'theta' or 'physical'");
      if (form == "theta") {
        for (int j = 0; j < kParamsPerLink; ++j) params.theta[j] = t.next_double("theta entry");
      } else if (form == "physical") {
        if (t.next("'m'") != "m") throw ParseError("expected 'm'", t.line);
        const double mass = t.next_double("mass");
        if (t.next("'com'") != "com") throw ParseError("expected 'com'", t.line);
        const Vec3 com = t.next_vec3("com");
        if (t.next("'inertia'") != "inertia") throw ParseError("expected 'inertia'", t.line);
        const double xx = t.next_double("inertia xx"), yy = t.next_double("inertia yy"),
                     zz = t.next_double("inertia zz"), xy = t.next_double("inertia xy"),
                     xz = t.next_double("inertia xz"), yz = t.next_double("inertia yz");
        Mat3 inertia;
        inertia << xx, xy, xz, xy, yy, yz, xz, yz, zz;
        if (mass < 0.0) throw ParseError("link '" + spec.name + "': negative mass", t.line);
        params = params_from_physical(mass, com, inertia);
      } else {
        throw ParseError("link '" + spec.name + "': unknown parameter form '" + form + "'",
                         t.line);
      }
      model.links.push_back(std::move(spec));
      model.params.push_back(params);
    } else {
      throw ParseError("unknown key '" + key + "'", t.line);
    }
    if (!t.done()) throw ParseError("trailing tokens after " + key, t.line);
  }

  if (!have_gravity) throw ParseError("missing 'gravity' line", 0);
  if (!have_vertical) throw ParseError("missing 'vertical' line", 0);
  if (model.links.empty()) throw ParseError("model declares no links", 0);
  if (std::abs(model.vertical_axis.norm() - 1.0) > 1e-6)
    throw ParseError("vertical: axis is not unit length", 0);
  model.vertical_axis.normalize();
  const double g = model.base_gravity.norm();
  if (g > 0.0 && (model.vertical_axis + model.base_gravity / g).norm() > 1e-6)
    throw ParseError("vertical axis must oppose the gravity direction", 0);
  check_model(model);
  return model;
}

inline std::string serialize_model(const ChainModel& model) {
  std::ostringstream os;
  os << "format_version " << kFormatVersion << "\n";
  os << "gravity " << format_double(model.base_gravity.x()) << ' '
     << format_double(model.base_gravity.y()) << ' ' << format_double(model.base_gravity.z())
     << "\n";
  os << "vertical " << format_double(model.vertical_axis.x()) << ' '
     << format_double(model.vertical_axis.y()) << ' ' << format_double(model.vertical_axis.z())
     << "\n";
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const auto& spec = model.links[i];
    os << "link " << spec.name;
    os << " axis " << format_double(spec.joint_axis.x()) << ' '
       << format_double(spec.joint_axis.y()) << ' ' << format_double(spec.joint_axis.z());
    os << " offset " << format_double(spec.offset.x()) << ' ' << format_double(spec.offset.y())
       << ' ' << format_double(spec.offset.z());
    os << " theta";
    for (int j = 0; j < kParamsPerLink; ++j)
      os << ' ' << format_double(model.params[i].theta[j]);
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Sample CSV: t,q1..qn,dq1..dqn,ddq1..ddqn,u1..un

inline std::string sample_csv_header(Eigen::Index n) {
  std::ostringstream os;
  os << 't';
  const char* groups[] = {"q", "dq", "ddq", "u"};
  for (const char* g : groups)
    for (Eigen::Index i = 1; i <= n; ++i) os << ',' << g << i;
  return os.str();
}

inline std::string write_samples_csv(const std::vector<Sample>& samples, Eigen::Index n) {
  std::ostringstream os;
  os << sample_csv_header(n) << "\n";
  for (const auto& s : samples) {
    os << format_double(s.t);
    for (const VecX* v : {&s.state.q, &s.state.dq, &s.state.ddq, &s.u})
      for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double((*v)[i]);
    os << "\n";
  }
  return os.str();
}

inline std::vector<Sample> read_samples_csv(const std::string& text, Eigen::Index n) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty samples CSV", 0);
  if (line == sample_csv_header(n) + "\r") line.pop_back();
  if (line != sample_csv_header(n))
    throw ParseError("samples CSV header does not match a " + std::to_string(n) + "-joint model",
                     1);
  std::vector<Sample> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto comma = line.find(',', start);
      const std::string tok = line.substr(start, comma == std::string::npos ? comma : comma - start);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + tok + "'", lineno);
      }
      if (used != tok.size()) throw ParseError("bad number '" + tok + "'", lineno);
      vals.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (vals.size() != static_cast<std::size_t>(1 + 4 * n))
      throw ParseError("expected " + std::to_string(1 + 4 * n) + " columns", lineno);
    Sample s;
    s.t = vals[0];
    s.state.q = Eigen::Map<VecX>(vals.data() + 1, n);
    s.state.dq = Eigen::Map<VecX>(vals.data() + 1 + n, n);
    s.state.ddq = Eigen::Map<VecX>(vals.data() + 1 + 2 * n, n);
    s.u = Eigen::Map<VecX>(vals.data() + 1 + 3 * n, n);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Controller CSV: t,model_used,q_des_1..n,q_1..n,u_cmd_1..n,saturated

inline std::string write_controller_csv(const std::vector<ControllerLogRow>& rows,
                                        Eigen::Index n) {
  std::ostringstream os;
  os << "t,model_used";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",q_des" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",q" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",u_cmd" << i;
  os << ",saturated\n";
  for (const auto& r : rows) {
    os << format_double(r.t) << ','
       << (r.model_used == ModelSource::identified ? "identified" : "nominal");
    for (const VecX* v : {&r.q_des, &r.q, &r.u_cmd})
      for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double((*v)[i]);
    os << ',' << (r.saturated ? 1 : 0) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Fit results. The theta line can be fed back as a --theta0 input.

inline std::string write_fit_result(const FitResult& fr, const VecX& per_joint_r2) {
  std::ostringstream os;
  os << "format_version " << kFormatVersion << "\n";
  os << "theta";
  for (Eigen::Index i = 0; i < fr.theta_hat.size(); ++i)
    os << ' ' << format_double(fr.theta_hat.values[i]);
  os << "\n";
  os << "r_squared " << format_double(fr.r_squared) << "\n";
  for (Eigen::Index j = 0; j < per_joint_r2.size(); ++j)
    os << "r_squared_joint_" << (j + 1) << ' ' << format_double(per_joint_r2[j]) << "\n";
  os << "residual_norm " << format_double(fr.residual_norm) << "\n";
  os << "singular_values";
  for (Eigen::Index i = 0; i < fr.singular_values.size(); ++i)
    os << ' ' << format_double(fr.singular_values[i]);
  os << "\n";
  return os.str();
}

/// Reads a theta vector from either a fit-result document (its `theta` line)
/// or a bare whitespace-separated list of numbers.
inline VecX read_theta(const std::string& text) {
  auto lines = detail::tokenize_lines(text);
  std::vector<double> vals;
  for (auto& t : lines) {
    if (t.tokens[0] == "theta") {
      vals.clear();
      ++t.pos;
      while (!t.done()) vals.push_back(t.next_double("theta entry"));
      return Eigen::Map<VecX>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    }
    if (t.tokens[0] == "format_version" || t.tokens[0] == "r_squared" ||
        t.tokens[0].rfind("r_squared_joint", 0) == 0 || t.tokens[0] == "residual_norm" ||
        t.tokens[0] == "singular_values")
      continue;
    while (!t.done()) vals.push_back(t.next_double("theta entry"));
  }
  if (vals.empty()) throw ParseError("no theta values found", 0);
  return Eigen::Map<VecX>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// ---------------------------------------------------------------------------
// Scenario files.

inline Scenario parse_scenario(const std::string& text, const ChainModel& plant) {
  auto lines = detail::tokenize_lines(text);
  detail::expect_format_version(lines, "scenario");

  Scenario scn;
  scn.plant = plant;
  const auto n = static_cast<Eigen::Index>(plant.dof());
  scn.theta_nominal = theta_from_model(plant);

  SimConfig defaults;  // parsed sim settings are carried on the scenario
  scn.sim = defaults;

  const auto read_vecn = [&](detail::Tokenizer& t, const char* what) {
    VecX v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = t.next_double(what);
    return v;
  };

  bool have_name = false;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto& t = lines[li];
    const std::string key = t.next("keyword");
    if (key == "name") {
      const std::string name = t.next("scenario name");
      scn.name = name;
      if (name == "double_pendulum_offline") scn.kind = ScenarioKind::double_pendulum_offline;
      else if (name == "leg_offline_growing") scn.kind = ScenarioKind::leg_offline_growing;
      else if (name == "arm_online_gated") scn.kind = ScenarioKind::arm_online_gated;
      else throw ParseError("unknown scenario name '" + name + "'", t.line);
      have_name = true;
    } else if (key == "model") {
      scn.model_path = t.next("model path");  // informational; the CLI passes the model
    } else if (key == "duration") {
      scn.sim.duration = t.next_double("duration");
    } else if (key == "dt") {
      scn.sim.dt = t.next_double("dt");
      if (!(scn.sim.dt > 0.0)) throw ParseError("dt must be positive", t.line);
    } else if (key == "integrator") {
      const std::string which = t.next("integrator");
      if (which == "rk4") scn.sim.integrator = Integrator::rk4;
      else if (which == "semi_implicit_euler") scn.sim.integrator = Integrator::semi_implicit_euler;
      else throw ParseError("unknown integrator '" + which + "'", t.line);
    } else if (key == "seed") {
      scn.sim.seed = static_cast<std::uint64_t>(t.next_double("seed"));
    } else if (key == "noise_std_q") {
      scn.sim.noise_std_q = t.next_double("noise std");
    } else if (key == "noise_std_dq") {
      scn.sim.noise_std_dq = t.next_double("noise std");
    } else if (key == "noise_std_u") {
      scn.sim.noise_std_u = t.next_double("noise std");
    } else if (key == "accel_source") {
      const std::string which = t.next("accel source");
      if (which == "true") scn.accel_source = AccelSource::ground_truth;
      else if (which == "filtered") scn.accel_source = AccelSource::filtered;
      else throw ParseError("unknown accel_source '" + which + "'", t.line);
    } else if (key == "trajectory") {
      const std::string which = t.next("trajectory kind");
      if (which == "sinusoid") scn.traj_kind = TrajKind::sinusoid;
      else if (which == "ticktock") scn.traj_kind = TrajKind::ticktock;
      else throw ParseError("unknown trajectory '" + which + "'", t.line);
    } else if (key == "traj_amplitude") {
      scn.sinusoid.amplitude = read_vecn(t, "amplitude");
    } else if (key == "traj_frequency") {
      scn.sinusoid.frequency = read_vecn(t, "frequency");
    } else if (key == "traj_phase") {
      scn.sinusoid.phase = read_vecn(t, "phase");
    } else if (key == "traj_offset") {
      scn.sinusoid.offset = read_vecn(t, "offset");
    } else if (key == "traj_pose_a") {
      scn.ticktock.pose_a = read_vecn(t, "pose");
    } else if (key == "traj_pose_b") {
      scn.ticktock.pose_b = read_vecn(t, "pose");
    } else if (key == "traj_period") {
      scn.ticktock.period = t.next_double("period");
    } else if (key == "controller_kp") {
      scn.controller.kp = read_vecn(t, "kp");
    } else if (key == "controller_kd") {
      scn.controller.kd = read_vecn(t, "kd");
    } else if (key == "torque_limits") {
      scn.controller.torque_limits = read_vecn(t, "torque limit");
    } else if (key == "r2_threshold") {
      scn.controller.r2_threshold = t.next_double("threshold");
      scn.estimator.r2_threshold = scn.controller.r2_threshold;
    } else if (key == "buffer_capacity") {
      scn.estimator.buffer_capacity = static_cast<std::size_t>(t.next_double("capacity"));
    } else if (key == "buffer_mode") {
      const std::string which = t.next("buffer mode");
      if (which == "ring") scn.estimator.unbounded = false;
      else if (which == "growing") scn.estimator.unbounded = true;
      else throw ParseError("unknown buffer_mode '" + which + "'", t.line);
    } else if (key == "alpha") {
      scn.estimator.alpha = t.next_double("alpha");
    } else if (key == "update_period") {
      scn.estimator.update_period = t.next_double("update period");
    } else if (key == "ema_lambda") {
      scn.ema_lambda = t.next_double("lambda");
    } else if (key == "theta0") {
      const std::string form = t.next("'nominal', 'perturb' or 'values'");
      if (form == "nominal") {
        scn.theta_nominal = theta_from_model(plant);
      } else if (form == "perturb") {
        const double mass_scale = t.next_double("mass scale");
        const double com_scale = t.next_double("com scale");
        const double inertia_scale = t.next_double("inertia scale");
        scn.theta_nominal = perturbed_nominal(plant, mass_scale, com_scale, inertia_scale);
      } else if (form == "values") {
        VecX v(n * kParamsPerLink);
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = t.next_double("theta entry");
        scn.theta_nominal = ThetaVector{std::move(v)};
      } else {
        throw ParseError("unknown theta0 form '" + form + "'", t.line);
      }
    } else {
      throw ParseError("unknown key '" + key + "'", t.line);
    }
    if (!t.done()) throw ParseError("trailing tokens after " + key, t.line);
  }
  if (!have_name) throw ParseError("missing 'name' line", 0);

  if (scn.traj_kind == TrajKind::sinusoid) {
    if (scn.sinusoid.amplitude.size() != n || scn.sinusoid.frequency.size() != n ||
        scn.sinusoid.phase.size() != n || scn.sinusoid.offset.size() != n)
      throw ParseError("sinusoid trajectory needs amplitude/frequency/phase/offset of length " +
                           std::to_string(n),
                       0);
  } else if (scn.ticktock.pose_a.size() != n || scn.ticktock.pose_b.size() != n) {
    throw ParseError("ticktock trajectory needs pose_a and pose_b of length " + std::to_string(n),
                     0);
  }
  if (scn.controller.kp.size() != n || scn.controller.kd.size() != n)
    throw ParseError("controller gains must have length " + std::to_string(n), 0);
  return scn;
}

// ---------------------------------------------------------------------------
// Metrics and manifests.

inline std::string write_metrics(const std::string& scenario_name, const ScenarioMetrics& m) {
  std::ostringstream os;
  os << "format_version " << kFormatVersion << "\n";
  os << "scenario " << scenario_name << "\n";
  os << "links " << m.n << "\n";
  os << "ticks " << m.ticks << "\n";
  os << "r2_overall " << format_double(m.r2_overall) << "\n";
  for (Eigen::Index j = 0; j < m.r2_joint.size(); ++j)
    os << "r2_joint_" << (j + 1) << ' ' << format_double(m.r2_joint[j]) << "\n";
  os << "uhat_minus_u_inf " << format_double(m.uhat_minus_u_inf) << "\n";
  os << "switch_time " << format_double(m.switch_time) << "\n";
  os << "r2_at_switch " << format_double(m.r2_at_switch) << "\n";
  os << "switch_count " << m.switch_count << "\n";
  for (Eigen::Index j = 0; j < m.bias_before.size(); ++j)
    os << "bias_before_joint_" << (j + 1) << ' ' << format_double(m.bias_before[j]) << "\n";
  for (Eigen::Index j = 0; j < m.bias_after.size(); ++j)
    os << "bias_after_joint_" << (j + 1) << ' ' << format_double(m.bias_after[j]) << "\n";
  os << "fits_performed " << m.fits_performed << "\n";
  os << "final_model_valid " << (m.final_model_valid ? 1 : 0) << "\n";
  return os.str();
}

inline std::uint64_t fnv1a_hash(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string write_manifest(const std::string& command, std::uint64_t config_hash,
                                  std::uint64_t seed, const std::vector<std::string>& outputs) {
  std::ostringstream os;
  os << "format_version " << kFormatVersion << "\n";
  os << "tool_version " << kToolVersion << "\n";
  os << "command " << command << "\n";
  os << "config_hash " << hex64(config_hash) << "\n";
  os << "seed " << seed << "\n";
  for (const auto& o : outputs) os << "output " << o << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// File helpers.

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

/// Write-then-rename so readers never observe a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace svadyn
