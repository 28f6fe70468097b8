#include "rescon/scenario_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rescon/errors.hpp"

namespace rescon {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& ctx, const std::string& what) {
  throw SchemaError(ctx + ": " + what);
}

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) schema_fail(ctx, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) schema_fail(ctx, "unknown key \"" + it.key() + "\"");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const char* key, const std::string& ctx) {
  const json* p = find(obj, key);
  if (p == nullptr) {
    schema_fail(ctx, std::string("missing required key \"") + key + "\"");
  }
  return *p;
}

double as_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) schema_fail(ctx, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& ctx) {
  if (!j.is_number_integer()) schema_fail(ctx, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < -1000000000 || v > 1000000000) schema_fail(ctx, "integer out of range");
  return static_cast<int>(v);
}

std::uint64_t as_seed(const json& j, const std::string& ctx) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  schema_fail(ctx, "expected a non-negative integer");
}

bool as_bool(const json& j, const std::string& ctx) {
  if (!j.is_boolean()) schema_fail(ctx, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& ctx) {
  if (!j.is_string()) schema_fail(ctx, "expected a string");
  return j.get<std::string>();
}

Eigen::VectorXd as_vector(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) {
    schema_fail(ctx, "expected a nonempty array of numbers");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (size_t k = 0; k < j.size(); ++k) {
    v(static_cast<Eigen::Index>(k)) =
        as_number(j[k], ctx + "[" + std::to_string(k) + "]");
  }
  return v;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) {
    schema_fail(ctx, "expected a nonempty array of rows");
  }
  Eigen::MatrixXd m;
  size_t cols = 0;
  for (size_t r = 0; r < j.size(); ++r) {
    const std::string rctx = ctx + "[" + std::to_string(r) + "]";
    const json& row = j[r];
    if (!row.is_array() || row.empty()) {
      schema_fail(rctx, "expected a nonempty array of numbers");
    }
    if (r == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(j.size()),
               static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      schema_fail(rctx, "rows have inconsistent lengths");
    }
    for (size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_number(row[c], rctx + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) j.push_back(v(k));
  return j;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

// File indices are 1-based; anything below 1 cannot be converted and is a
// schema-level mistake. Range against the graph is checked semantically.
int as_agent_index(const json& j, const std::string& ctx) {
  const int v = as_int(j, ctx);
  if (v < 1) schema_fail(ctx, "agent indices are 1-based");
  return v - 1;
}

DiGraph parse_graph(const json& j, const std::string& ctx) {
  check_keys(j, ctx, {"n", "edges"});
  const int n = as_int(require(j, "n", ctx), ctx + ".n");
  if (n < 1) throw ConfigError(ctx + ".n: need at least one agent");
  const json& edges = require(j, "edges", ctx);
  if (!edges.is_array()) schema_fail(ctx + ".edges", "expected an array");
  std::vector<Edge> list;
  for (size_t e = 0; e < edges.size(); ++e) {
    const std::string ectx = ctx + ".edges[" + std::to_string(e) + "]";
    const json& entry = edges[e];
    if (!entry.is_array() || entry.size() != 3) {
      schema_fail(ectx, "expected [tail, head, weight]");
    }
    Edge edge;
    edge.tail = as_agent_index(entry[0], ectx + "[0]");
    edge.head = as_agent_index(entry[1], ectx + "[1]");
    edge.weight = as_number(entry[2], ectx + "[2]");
    list.push_back(edge);
  }
  return DiGraph(n, list);
}

AgentDynamics parse_dynamics(const json& j, const std::string& ctx) {
  check_keys(j, ctx, {"A", "B"});
  AgentDynamics dyn;
  dyn.A = as_matrix(require(j, "A", ctx), ctx + ".A");
  dyn.B = as_matrix(require(j, "B", ctx), ctx + ".B");
  return dyn;
}

NoiseModel parse_noise(const json& j, const std::string& ctx,
                       const DiGraph& g, int n_x) {
  check_keys(j, ctx, {"sigma", "default_cov", "rng_seed", "edge_cov"});
  if (find(j, "sigma") != nullptr && find(j, "default_cov") != nullptr) {
    schema_fail(ctx, "\"sigma\" and \"default_cov\" are mutually exclusive");
  }
  NoiseModel noise;
  if (const json* p = find(j, "rng_seed")) {
    noise.rng_seed = as_seed(*p, ctx + ".rng_seed");
  }
  if (const json* p = find(j, "sigma")) {
    const double sigma = as_number(*p, ctx + ".sigma");
    if (sigma < 0.0) throw ConfigError(ctx + ".sigma: must be non-negative");
    // sigma is the per-component standard deviation; zero means noise-free.
    if (sigma > 0.0) {
      noise.default_cov =
          sigma * sigma * Eigen::MatrixXd::Identity(n_x, n_x);
    }
  }
  if (const json* p = find(j, "default_cov")) {
    noise.default_cov = as_matrix(*p, ctx + ".default_cov");
  }
  if (const json* p = find(j, "edge_cov")) {
    if (!p->is_array()) schema_fail(ctx + ".edge_cov", "expected an array");
    for (size_t e = 0; e < p->size(); ++e) {
      const std::string ectx = ctx + ".edge_cov[" + std::to_string(e) + "]";
      const json& entry = (*p)[e];
      check_keys(entry, ectx, {"edge", "cov"});
      const json& edge = require(entry, "edge", ectx);
      if (!edge.is_array() || edge.size() != 2) {
        schema_fail(ectx + ".edge", "expected [tail, head]");
      }
      const int tail = as_agent_index(edge[0], ectx + ".edge[0]");
      const int head = as_agent_index(edge[1], ectx + ".edge[1]");
      if (head >= g.size() || tail >= g.size() ||
          g.weight(head, tail) == 0.0) {
        throw ConfigError(ectx + ": no such edge in the graph");
      }
      noise.edge_cov[{head, tail}] =
          as_matrix(require(entry, "cov", ectx), ectx + ".cov");
    }
  }
  return noise;
}

AttackSpec parse_attack(const json& j, const std::string& ctx) {
  check_keys(j, ctx,
             {"channel", "target", "t_start", "t_stop", "link_from", "lti",
              "waveform"});
  AttackSpec spec;
  const std::string channel =
      as_string(require(j, "channel", ctx), ctx + ".channel");
  if (channel == "actuator") {
    spec.channel = AttackChannel::actuator;
  } else if (channel == "sensor") {
    spec.channel = AttackChannel::sensor;
  } else if (channel == "link") {
    spec.channel = AttackChannel::link;
  } else {
    schema_fail(ctx + ".channel", "expected actuator, sensor, or link");
  }
  spec.target = as_agent_index(require(j, "target", ctx), ctx + ".target");
  spec.t_start = as_number(require(j, "t_start", ctx), ctx + ".t_start");
  if (const json* p = find(j, "t_stop")) {
    spec.t_stop = as_number(*p, ctx + ".t_stop");
  }
  if (const json* p = find(j, "link_from")) {
    if (spec.channel != AttackChannel::link) {
      schema_fail(ctx + ".link_from", "only valid for link attacks");
    }
    spec.link_from = as_agent_index(*p, ctx + ".link_from");
  } else if (spec.channel == AttackChannel::link) {
    schema_fail(ctx, "link attacks require \"link_from\"");
  }

  const json* lti = find(j, "lti");
  const json* wave = find(j, "waveform");
  if ((lti != nullptr) == (wave != nullptr)) {
    schema_fail(ctx, "exactly one of \"lti\" and \"waveform\" is required");
  }
  if (lti != nullptr) {
    const std::string lctx = ctx + ".lti";
    check_keys(*lti, lctx, {"psi", "f0", "output_map"});
    LtiGenerator gen;
    gen.psi = as_matrix(require(*lti, "psi", lctx), lctx + ".psi");
    gen.f0 = as_vector(require(*lti, "f0", lctx), lctx + ".f0");
    gen.output_map =
        as_matrix(require(*lti, "output_map", lctx), lctx + ".output_map");
    spec.generator = gen;
  } else {
    const std::string wctx = ctx + ".waveform";
    check_keys(*wave, wctx,
               {"offset", "amplitude", "frequency", "phase", "direction"});
    WaveformGenerator gen;
    if (const json* p = find(*wave, "offset")) {
      gen.offset = as_number(*p, wctx + ".offset");
    }
    if (const json* p = find(*wave, "amplitude")) {
      gen.amplitude = as_number(*p, wctx + ".amplitude");
    }
    if (const json* p = find(*wave, "frequency")) {
      gen.frequency = as_number(*p, wctx + ".frequency");
    }
    if (const json* p = find(*wave, "phase")) {
      gen.phase = as_number(*p, wctx + ".phase");
    }
    gen.direction =
        as_vector(require(*wave, "direction", wctx), wctx + ".direction");
    spec.generator = gen;
  }
  return spec;
}

DetectorConfig parse_detector(const json& j, const std::string& ctx) {
  check_keys(j, ctx, {"window", "warmup_time", "gamma_imp", "gamma_nonimp"});
  DetectorConfig cfg;
  if (const json* p = find(j, "window")) cfg.window = as_int(*p, ctx + ".window");
  if (const json* p = find(j, "warmup_time")) {
    cfg.warmup_time = as_number(*p, ctx + ".warmup_time");
  }
  if (const json* p = find(j, "gamma_imp")) {
    cfg.gamma_imp = as_number(*p, ctx + ".gamma_imp");
  }
  if (const json* p = find(j, "gamma_nonimp")) {
    cfg.gamma_nonimp = as_number(*p, ctx + ".gamma_nonimp");
  }
  return cfg;
}

TrustConfig parse_trust(const json& j, const std::string& ctx) {
  check_keys(j, ctx,
             {"delta", "kappa1", "kappa2", "kappa3", "lambda1", "lambda2",
              "trust_window"});
  TrustConfig cfg;
  if (const json* p = find(j, "delta")) cfg.delta = as_number(*p, ctx + ".delta");
  if (const json* p = find(j, "kappa1")) cfg.kappa1 = as_number(*p, ctx + ".kappa1");
  if (const json* p = find(j, "kappa2")) cfg.kappa2 = as_number(*p, ctx + ".kappa2");
  if (const json* p = find(j, "kappa3")) cfg.kappa3 = as_number(*p, ctx + ".kappa3");
  if (const json* p = find(j, "lambda1")) {
    cfg.lambda1 = as_number(*p, ctx + ".lambda1");
  }
  if (const json* p = find(j, "lambda2")) {
    cfg.lambda2 = as_number(*p, ctx + ".lambda2");
  }
  if (const json* p = find(j, "trust_window")) {
    cfg.trust_window = as_int(*p, ctx + ".trust_window");
  }
  return cfg;
}

std::vector<double> as_double_list(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) {
    schema_fail(ctx, "expected a nonempty array of numbers");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (size_t k = 0; k < j.size(); ++k) {
    out.push_back(as_number(j[k], ctx + "[" + std::to_string(k) + "]"));
  }
  return out;
}

ThresholdSet parse_threshold_set(const json& j, const std::string& ctx,
                                 std::initializer_list<const char*> allowed) {
  check_keys(j, ctx, allowed);
  ThresholdSet ts;
  ts.gamma_imp =
      as_double_list(require(j, "gamma_imp", ctx), ctx + ".gamma_imp");
  ts.gamma_nonimp =
      as_double_list(require(j, "gamma_nonimp", ctx), ctx + ".gamma_nonimp");
  ts.delta = as_double_list(require(j, "delta", ctx), ctx + ".delta");
  if (ts.gamma_imp.size() != ts.gamma_nonimp.size() ||
      ts.gamma_imp.size() != ts.delta.size()) {
    throw ConfigError(ctx + ": threshold lists must have equal lengths");
  }
  return ts;
}

json threshold_set_json(const ThresholdSet& ts) {
  json j;
  j["gamma_imp"] = ts.gamma_imp;
  j["gamma_nonimp"] = ts.gamma_nonimp;
  j["delta"] = ts.delta;
  return j;
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  const json j = parse_document(text);
  const std::string ctx = "scenario";
  check_keys(j, ctx,
             {"name", "seed", "t_end", "dt", "mitigation_enabled",
              "divergence_cap", "graph", "dynamics", "gain_design", "gains",
              "noise", "attacks", "detector", "trust", "x0", "thresholds"});

  Scenario s;
  s.name = as_string(require(j, "name", ctx), ctx + ".name");
  s.seed = as_seed(require(j, "seed", ctx), ctx + ".seed");
  s.t_end = as_number(require(j, "t_end", ctx), ctx + ".t_end");
  s.dt = as_number(require(j, "dt", ctx), ctx + ".dt");
  s.graph = parse_graph(require(j, "graph", ctx), ctx + ".graph");
  s.dynamics = parse_dynamics(require(j, "dynamics", ctx), ctx + ".dynamics");

  if (const json* p = find(j, "mitigation_enabled")) {
    s.mitigation_enabled = as_bool(*p, ctx + ".mitigation_enabled");
  }
  if (const json* p = find(j, "divergence_cap")) {
    s.divergence_cap = as_number(*p, ctx + ".divergence_cap");
  }

  const json* gain_design = find(j, "gain_design");
  const json* gains = find(j, "gains");
  if (gain_design != nullptr && gains != nullptr) {
    schema_fail(ctx, "\"gain_design\" and \"gains\" are mutually exclusive");
  }
  if (gain_design != nullptr) {
    const std::string gctx = ctx + ".gain_design";
    check_keys(*gain_design, gctx, {"Q", "R", "safety_factor"});
    if (const json* p = find(*gain_design, "Q")) {
      s.Q = as_matrix(*p, gctx + ".Q");
    }
    if (const json* p = find(*gain_design, "R")) {
      s.R = as_matrix(*p, gctx + ".R");
    }
    if (const json* p = find(*gain_design, "safety_factor")) {
      s.safety_factor = as_number(*p, gctx + ".safety_factor");
    }
  }
  if (gains != nullptr) {
    const std::string gctx = ctx + ".gains";
    check_keys(*gains, gctx, {"K", "c", "P"});
    GainDesign gd;
    gd.K = as_matrix(require(*gains, "K", gctx), gctx + ".K");
    gd.c = as_number(require(*gains, "c", gctx), gctx + ".c");
    if (const json* p = find(*gains, "P")) gd.P = as_matrix(*p, gctx + ".P");
    s.explicit_gains = gd;
  }

  if (const json* p = find(j, "noise")) {
    s.noise = parse_noise(*p, ctx + ".noise", s.graph, s.dynamics.n_x());
  }
  if (const json* p = find(j, "attacks")) {
    if (!p->is_array()) schema_fail(ctx + ".attacks", "expected an array");
    for (size_t a = 0; a < p->size(); ++a) {
      s.attacks.push_back(
          parse_attack((*p)[a], ctx + ".attacks[" + std::to_string(a) + "]"));
    }
  }
  if (const json* p = find(j, "detector")) {
    s.detector_cfg = parse_detector(*p, ctx + ".detector");
  }
  if (const json* p = find(j, "trust")) {
    s.trust_cfg = parse_trust(*p, ctx + ".trust");
  }
  if (const json* p = find(j, "x0")) {
    if (!p->is_array() || p->empty()) {
      schema_fail(ctx + ".x0", "expected a nonempty array of state vectors");
    }
    for (size_t i = 0; i < p->size(); ++i) {
      s.x0.push_back(
          as_vector((*p)[i], ctx + ".x0[" + std::to_string(i) + "]"));
    }
  }
  if (const json* p = find(j, "thresholds")) {
    s.thresholds = parse_threshold_set(
        *p, ctx + ".thresholds", {"gamma_imp", "gamma_nonimp", "delta"});
  }

  s.validate();
  return s;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Scenario load_scenario_file(const std::string& path) {
  return parse_scenario_text(read_text_file(path));
}

std::string serialize_scenario(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["t_end"] = s.t_end;
  j["dt"] = s.dt;
  j["mitigation_enabled"] = s.mitigation_enabled;
  j["divergence_cap"] = s.divergence_cap;

  json graph;
  graph["n"] = s.graph.size();
  json edges = json::array();
  for (int head = 0; head < s.graph.size(); ++head) {
    for (const int tail : s.graph.in_neighbors(head)) {
      edges.push_back(
          json::array({tail + 1, head + 1, s.graph.weight(head, tail)}));
    }
  }
  graph["edges"] = edges;
  j["graph"] = graph;

  json dynamics;
  dynamics["A"] = matrix_json(s.dynamics.A);
  dynamics["B"] = matrix_json(s.dynamics.B);
  j["dynamics"] = dynamics;

  if (s.explicit_gains) {
    json gains;
    gains["K"] = matrix_json(s.explicit_gains->K);
    gains["c"] = s.explicit_gains->c;
    if (s.explicit_gains->P.size() > 0) {
      gains["P"] = matrix_json(s.explicit_gains->P);
    }
    j["gains"] = gains;
  } else {
    json gd;
    if (s.Q.size() > 0) gd["Q"] = matrix_json(s.Q);
    if (s.R.size() > 0) gd["R"] = matrix_json(s.R);
    gd["safety_factor"] = s.safety_factor;
    j["gain_design"] = gd;
  }

  json noise;
  noise["rng_seed"] = s.noise.rng_seed;
  if (s.noise.default_cov.size() > 0) {
    noise["default_cov"] = matrix_json(s.noise.default_cov);
  }
  if (!s.noise.edge_cov.empty()) {
    json list = json::array();
    for (const auto& [key, cov] : s.noise.edge_cov) {
      json entry;
      entry["edge"] = json::array({key.second + 1, key.first + 1});
      entry["cov"] = matrix_json(cov);
      list.push_back(entry);
    }
    noise["edge_cov"] = list;
  }
  j["noise"] = noise;

  json attacks = json::array();
  for (const AttackSpec& spec : s.attacks) {
    json a;
    switch (spec.channel) {
      case AttackChannel::actuator:
        a["channel"] = "actuator";
        break;
      case AttackChannel::sensor:
        a["channel"] = "sensor";
        break;
      case AttackChannel::link:
        a["channel"] = "link";
        a["link_from"] = spec.link_from + 1;
        break;
    }
    a["target"] = spec.target + 1;
    a["t_start"] = spec.t_start;
    if (spec.t_stop) a["t_stop"] = *spec.t_stop;
    if (const auto* lti = std::get_if<LtiGenerator>(&spec.generator)) {
      json gen;
      gen["psi"] = matrix_json(lti->psi);
      gen["f0"] = vector_json(lti->f0);
      gen["output_map"] = matrix_json(lti->output_map);
      a["lti"] = gen;
    } else {
      const auto& wave = std::get<WaveformGenerator>(spec.generator);
      json gen;
      gen["offset"] = wave.offset;
      gen["amplitude"] = wave.amplitude;
      gen["frequency"] = wave.frequency;
      gen["phase"] = wave.phase;
      gen["direction"] = vector_json(wave.direction);
      a["waveform"] = gen;
    }
    attacks.push_back(a);
  }
  j["attacks"] = attacks;

  json detector;
  detector["window"] = s.detector_cfg.window;
  detector["warmup_time"] = s.detector_cfg.warmup_time;
  detector["gamma_imp"] = s.detector_cfg.gamma_imp;
  detector["gamma_nonimp"] = s.detector_cfg.gamma_nonimp;
  j["detector"] = detector;

  json trust;
  trust["delta"] = s.trust_cfg.delta;
  trust["kappa1"] = s.trust_cfg.kappa1;
  trust["kappa2"] = s.trust_cfg.kappa2;
  trust["kappa3"] = s.trust_cfg.kappa3;
  trust["lambda1"] = s.trust_cfg.lambda1;
  trust["lambda2"] = s.trust_cfg.lambda2;
  trust["trust_window"] = s.trust_cfg.trust_window;
  j["trust"] = trust;

  if (!s.x0.empty()) {
    json x0 = json::array();
    for (const auto& xi : s.x0) x0.push_back(vector_json(xi));
    j["x0"] = x0;
  }
  if (s.thresholds) j["thresholds"] = threshold_set_json(*s.thresholds);

  return j.dump(2) + "\n";
}

ThresholdFile parse_thresholds_text(const std::string& text) {
  const json j = parse_document(text);
  const std::string ctx = "thresholds";
  ThresholdFile out;
  out.thresholds = parse_threshold_set(
      j, ctx, {"gamma_imp", "gamma_nonimp", "delta", "runs", "factor"});
  if (const json* p = find(j, "runs")) out.runs = as_int(*p, ctx + ".runs");
  if (const json* p = find(j, "factor")) {
    out.factor = as_number(*p, ctx + ".factor");
  }
  return out;
}

ThresholdFile load_thresholds_file(const std::string& path) {
  return parse_thresholds_text(read_text_file(path));
}

std::string serialize_thresholds(const ThresholdSet& ts, int runs,
                                 double factor) {
  json j = threshold_set_json(ts);
  if (runs > 0) j["runs"] = runs;
  if (factor > 0.0) j["factor"] = factor;
  return j.dump(2) + "\n";
}

}  // namespace rescon
