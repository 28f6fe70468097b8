#include "rescon/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rescon/errors.hpp"

namespace rescon {

namespace {

using nlohmann::json;

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path)
      : file_(std::fopen(path.c_str(), "wb")) {
    if (file_ == nullptr) throw ConfigError("cannot write file: " + path);
    std::setvbuf(file_, nullptr, _IOFBF, 1 << 20);
  }
  ~CsvWriter() {
    if (file_ != nullptr) std::fclose(file_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void field(const std::string& s) {
    sep();
    std::fputs(s.c_str(), file_);
  }
  void field(double v) {
    sep();
    char tmp[40];
    std::snprintf(tmp, sizeof tmp, "%.10g", v);
    std::fputs(tmp, file_);
  }
  void field(int v) {
    sep();
    std::fprintf(file_, "%d", v);
  }
  void endrow() {
    std::fputc('\n', file_);
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) std::fputc(',', file_);
    first_ = false;
  }
  std::FILE* file_;
  bool first_ = true;
};

std::string col(const std::string& base, int agent1) {
  return base + std::to_string(agent1);
}

std::string col2(const std::string& base, int agent1, int comp1) {
  return base + std::to_string(agent1) + "_" + std::to_string(comp1);
}

int plot_stride(int steps) {
  return std::max(1, static_cast<int>(std::ceil(steps / 6000.0)));
}

std::vector<int> plot_rows(int steps) {
  const int stride = plot_stride(steps);
  std::vector<int> rows;
  for (int k = 0; k < steps; k += stride) rows.push_back(k);
  if (rows.empty() || rows.back() != steps - 1) rows.push_back(steps - 1);
  return rows;
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return json(v);
  return json(nullptr);
}

}  // namespace

void write_trace_csv(const Trace& trace, const std::string& path) {
  CsvWriter out(path);
  out.field(std::string("t"));
  for (int i = 0; i < trace.n_agents; ++i) {
    for (int k = 0; k < trace.n_x; ++k) out.field(col2("x", i + 1, k + 1));
  }
  for (int i = 0; i < trace.n_agents; ++i) {
    for (int k = 0; k < trace.n_x; ++k) out.field(col2("eta", i + 1, k + 1));
  }
  for (int i = 0; i < trace.n_agents; ++i) {
    for (int k = 0; k < trace.n_u; ++k) out.field(col2("u", i + 1, k + 1));
  }
  for (int i = 0; i < trace.n_agents; ++i) {
    for (int k = 0; k < trace.n_u; ++k) out.field(col2("f", i + 1, k + 1));
  }
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("tau", i + 1));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("phi", i + 1));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("Dimp", i + 1));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("Dnonimp", i + 1));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("himp", i + 1));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("hnonimp", i + 1));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("xi", i + 1));
  for (const auto& [head, tail] : trace.omega_edges) {
    out.field("omega_" + std::to_string(head + 1) + "_" +
              std::to_string(tail + 1));
  }
  out.endrow();

  for (int k = 0; k < trace.steps(); ++k) {
    out.field(trace.t(k));
    for (int c = 0; c < trace.n_agents * trace.n_x; ++c) {
      out.field(trace.states(k, c));
    }
    for (int c = 0; c < trace.n_agents * trace.n_x; ++c) {
      out.field(trace.eta_used(k, c));
    }
    for (int c = 0; c < trace.n_agents * trace.n_u; ++c) {
      out.field(trace.u_c(k, c));
    }
    for (int c = 0; c < trace.n_agents * trace.n_u; ++c) {
      out.field(trace.f_overall(k, c));
    }
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.tau(k, i));
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.phi(k, i));
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.d_imp_avg(k, i));
    for (int i = 0; i < trace.n_agents; ++i) {
      out.field(trace.d_nonimp_avg(k, i));
    }
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.h_imp(k, i));
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.h_nonimp(k, i));
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.xi(k, i));
    for (int e = 0; e < static_cast<int>(trace.omega_edges.size()); ++e) {
      out.field(trace.omega(k, e));
    }
    out.endrow();
  }
}

std::string summary_json_text(const Trace& trace) {
  json j;
  j["scenario"] = trace.scenario_name;
  j["seed"] = trace.seed;
  j["n_agents"] = trace.n_agents;
  j["dt"] = trace.dt;
  j["t_end"] = trace.t_end;
  j["mitigation_enabled"] = trace.mitigation_enabled;
  j["assumption_violated"] = trace.assumption_violated;
  j["attack_t_start"] = std::isnan(trace.attack_t_start)
                            ? json(nullptr)
                            : json(trace.attack_t_start);
  j["diverged"] = trace.diverged;
  json div = json::array();
  for (const double t : trace.divergence_time) {
    div.push_back(std::isnan(t) ? json(nullptr) : json(t));
  }
  j["divergence_time"] = div;
  j["max_state_norm"] = max_state_norm(trace, 0.0, trace.t_end);

  std::vector<int> all(trace.n_agents);
  for (int i = 0; i < trace.n_agents; ++i) all[i] = i;
  const ConsensusMetrics cm = consensus_metrics(trace, all);
  json consensus;
  consensus["max_pairwise"] = finite_or_null(cm.max_pairwise);
  consensus["tail_average"] = finite_or_null(cm.tail_average);
  consensus["subset_diverged"] = cm.subset_diverged;
  json dev = json::array();
  for (const double d : cm.deviation_from_subset_mean) {
    dev.push_back(finite_or_null(d));
  }
  consensus["deviation_from_subset_mean"] = dev;
  j["consensus"] = consensus;

  if (!std::isnan(trace.attack_t_start)) {
    json latency;
    json imp = json::array();
    json nonimp = json::array();
    for (int i = 0; i < trace.n_agents; ++i) {
      const auto li = detection_latency(trace, i, DetectorKind::imp);
      const auto ln = detection_latency(trace, i, DetectorKind::nonimp);
      imp.push_back(li ? json(*li) : json(nullptr));
      nonimp.push_back(ln ? json(*ln) : json(nullptr));
    }
    latency["imp"] = imp;
    latency["nonimp"] = nonimp;
    j["detection_latency"] = latency;
  }

  json u5 = json::array();
  json u10 = json::array();
  json eta10 = json::array();
  for (int i = 0; i < trace.n_agents; ++i) {
    u5.push_back(tail_average_input(trace, i, 5.0).norm());
    u10.push_back(tail_average_input_norm(trace, i, 10.0));
    eta10.push_back(tail_average_eta_norm(trace, i, 10.0));
  }
  j["u_tail_avg_norm_5s"] = u5;     // norm of the time-averaged input
  j["u_tail_mean_norm_10s"] = u10;  // time average of per-step input norms
  j["eta_tail_mean_norm_10s"] = eta10;

  return j.dump(2) + "\n";
}

void write_summary_json(const Trace& trace, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw ConfigError("cannot write file: " + path);
  const std::string text = summary_json_text(trace);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

void write_plot_states_csv(const Trace& trace, const std::string& path) {
  CsvWriter out(path);
  out.field(std::string("t"));
  for (int i = 0; i < trace.n_agents; ++i) {
    for (int k = 0; k < trace.n_x; ++k) out.field(col2("x", i + 1, k + 1));
  }
  out.field(std::string("max_pairwise"));
  out.endrow();
  for (const int k : plot_rows(trace.steps())) {
    out.field(trace.t(k));
    for (int c = 0; c < trace.n_agents * trace.n_x; ++c) {
      out.field(trace.states(k, c));
    }
    out.field(trace.consensus_curve(k));
    out.endrow();
  }
}

void write_plot_detectors_csv(const Trace& trace, const std::string& path) {
  CsvWriter out(path);
  out.field(std::string("t"));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("Dimp", i + 1));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("Dnonimp", i + 1));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("himp", i + 1));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("hnonimp", i + 1));
  out.endrow();
  for (const int k : plot_rows(trace.steps())) {
    out.field(trace.t(k));
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.d_imp_avg(k, i));
    for (int i = 0; i < trace.n_agents; ++i) {
      out.field(trace.d_nonimp_avg(k, i));
    }
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.h_imp(k, i));
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.h_nonimp(k, i));
    out.endrow();
  }
}

void write_plot_trust_csv(const Trace& trace, const std::string& path) {
  CsvWriter out(path);
  out.field(std::string("t"));
  for (int i = 0; i < trace.n_agents; ++i) out.field(col("xi", i + 1));
  for (const auto& [head, tail] : trace.omega_edges) {
    out.field("omega_" + std::to_string(head + 1) + "_" +
              std::to_string(tail + 1));
  }
  out.endrow();
  for (const int k : plot_rows(trace.steps())) {
    out.field(trace.t(k));
    for (int i = 0; i < trace.n_agents; ++i) out.field(trace.xi(k, i));
    for (int e = 0; e < static_cast<int>(trace.omega_edges.size()); ++e) {
      out.field(trace.omega(k, e));
    }
    out.endrow();
  }
}

void write_run_outputs(const Trace& trace, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + out_dir);
  const std::filesystem::path root(out_dir);
  write_trace_csv(trace, (root / "trace.csv").string());
  write_summary_json(trace, (root / "summary.json").string());
  write_plot_states_csv(trace, (root / "plot_states.csv").string());
  write_plot_detectors_csv(trace, (root / "plot_detectors.csv").string());
  write_plot_trust_csv(trace, (root / "plot_trust.csv").string());
}

}  // namespace rescon
