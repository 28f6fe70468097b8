#include "rescon/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rescon/attack.hpp"
#include "rescon/graph.hpp"
#include "rescon/presets.hpp"
#include "rescon/sim.hpp"
#include "rescon/stats.hpp"
#include "rescon/trace_io.hpp"

namespace rescon {

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void report(const std::function<void(const std::string&)>& progress,
            const std::string& line) {
  if (progress) progress(line);
}

// The intact set used by the localization and mitigation gates: the agents
// whose in-edges never touch the attacked node (see README).
const std::vector<int> kIntact{0, 1, 2};

std::vector<int> all_agents(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

bool files_equal(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  constexpr size_t kChunk = 1 << 20;
  std::vector<char> ba(kChunk), bb(kChunk);
  for (;;) {
    fa.read(ba.data(), kChunk);
    fb.read(bb.data(), kChunk);
    const std::streamsize na = fa.gcount(), nb = fb.gcount();
    if (na != nb) return false;
    if (na == 0) return true;
    if (!std::equal(ba.begin(), ba.begin() + na, bb.begin())) return false;
  }
}

std::vector<std::complex<double>> sorted_eigs(const Eigen::MatrixXd& m) {
  std::vector<std::complex<double>> out;
  if (m.rows() == 0) return out;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    out.push_back(es.eigenvalues()(k));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

}  // namespace

std::vector<CriterionResult> run_acceptance_suite(
    const std::function<void(const std::string&)>& progress) {
  std::vector<CriterionResult> results;
  const DiGraph g = canonical_five_agent_graph();

  // Shared baseline: the attack-free run feeds criteria 1, 3, and 4.
  report(progress, "running attack-free baseline");
  const Scenario fig2 = preset_scenario("fig2");
  Stopwatch fig2_clock;
  const Trace fig2_tr = run_scenario(fig2);
  const double fig2_runtime = fig2_clock.seconds();

  // Shared thresholds: one calibration feeds criteria 5 and 6.
  report(progress, "calibrating thresholds (20 attack-free runs)");
  const ThresholdSet calibrated = calibrate_thresholds(fig2, 20, 3.0);

  // Criterion 1: consensus and vanishing input, attack-free.
  {
    CriterionResult r;
    r.id = 1;
    r.title = "attack-free consensus with vanishing input";
    const ConsensusMetrics cm =
        consensus_metrics(fig2_tr, all_agents(fig2_tr.n_agents));
    double u_max = 0.0;
    for (int i = 0; i < fig2_tr.n_agents; ++i) {
      u_max = std::max(u_max, tail_average_input(fig2_tr, i, 5.0).norm());
    }
    const bool tail_ok = cm.tail_average < 1e-3;
    const bool input_ok = u_max < 1e-3;
    const bool time_ok = fig2_runtime < 2.0;
    r.passed = tail_ok && input_ok && time_ok;
    std::ostringstream d;
    d << "tail disagreement " << fmt(cm.tail_average) << " (< 1e-3); "
      << "max ||mean u over last 5 s|| " << fmt(u_max) << " (< 1e-3); "
      << "engine wall time " << fmt(fig2_runtime) << " s (< 2 s)";
    r.detail = d.str();
    results.push_back(std::move(r));
  }

  // Criterion 2: resonant attack on the root destabilizes the network and
  // the classifier + steady-state residual predict it.
  {
    report(progress, "running root-attack scenario");
    CriterionResult r;
    r.id = 2;
    r.title = "root attack destabilizes and is predicted";
    const Scenario fig3 = preset_scenario("fig3");
    const Trace tr = run_scenario(fig3);
    double t_div = std::numeric_limits<double>::quiet_NaN();
    for (const double t : tr.divergence_time) {
      if (!std::isnan(t) && (std::isnan(t_div) || t < t_div)) t_div = t;
    }
    const GainDesign gains =
        design_gains(fig3.dynamics, g, fig3.Q, fig3.R, fig3.safety_factor);
    const AttackClassification cls =
        classify_attack(fig3.attacks[0], fig3.dynamics);
    const Eigen::VectorXd p = left_zero_eigenvector(g);
    const double residual = max_steady_state_residual(
        p, fig3.attacks, g, gains, fig3.dynamics, 20.0, 60.0, 0.1);
    const bool predicted = predicts_instability(cls, residual > 1e-9);
    r.passed = tr.diverged && predicted;
    std::ostringstream d;
    d << "diverged " << (tr.diverged ? "true" : "false");
    if (!std::isnan(t_div)) d << " (first exceedance t = " << fmt(t_div) << ")";
    d << "; generator matched to plant modes "
      << (cls.kind == AttackClassification::Kind::imp ? "yes" : "no")
      << ", steady-state residual " << fmt(residual)
      << ", predicts instability " << (predicted ? "true" : "false");
    r.detail = d.str();
    results.push_back(std::move(r));
  }

  // Criteria 3 and 9 share the first run of the non-root attack preset.
  report(progress, "running non-root attack scenario twice (determinism)");
  const std::filesystem::path det_dir =
      std::filesystem::temp_directory_path() / "rescon_determinism_check";
  std::filesystem::create_directories(det_dir);
  const std::string csv_a = (det_dir / "a.csv").string();
  const std::string csv_b = (det_dir / "b.csv").string();
  std::uintmax_t csv_bytes = 0;
  {
    const Scenario fig4 = preset_scenario("fig4");
    const Trace tr_a = run_scenario(fig4);
    write_trace_csv(tr_a, csv_a);

    CriterionResult r;
    r.id = 3;
    r.title = "non-root attack stays localized";
    const ConsensusMetrics cm = consensus_metrics(tr_a, kIntact);
    const double dev4 = cm.deviation_from_subset_mean[3];
    bool eta_ok = true;
    std::ostringstream etas;
    for (const int i : kIntact) {
      const double attacked = tail_average_eta_norm(tr_a, i, 10.0);
      const double baseline = tail_average_eta_norm(fig2_tr, i, 10.0);
      eta_ok = eta_ok && attacked < 5.0 * baseline;
      if (i != kIntact.front()) etas << ", ";
      etas << fmt(attacked / baseline);
    }
    const bool not_diverged = !tr_a.diverged;
    const bool intact_ok = cm.tail_average < 1e-2;
    const bool displaced_ok = dev4 > 0.1;
    r.passed = not_diverged && intact_ok && displaced_ok && eta_ok;
    std::ostringstream d;
    d << "diverged " << (tr_a.diverged ? "true" : "false") << " (want false); "
      << "agents 1-3 tail disagreement " << fmt(cm.tail_average)
      << " (< 1e-2); agent-4 deviation from their mean " << fmt(dev4)
      << " (> 0.1); eta ratios to baseline [" << etas.str() << "] (< 5)";
    r.detail = d.str();
    r.notes.push_back(
        "agent-4 tracking-error tail (carries the displaced orbit): " +
        fmt(tail_average_eta_norm(tr_a, 3, 10.0)));
    results.push_back(std::move(r));
  }
  {
    const Scenario fig4 = preset_scenario("fig4");
    const Trace tr_b = run_scenario(fig4);
    write_trace_csv(tr_b, csv_b);
  }
  {
    CriterionResult r;
    r.id = 9;
    r.title = "repeated runs are byte-identical";
    const bool same = files_equal(csv_a, csv_b);
    std::error_code ec;
    csv_bytes = std::filesystem::file_size(csv_a, ec);
    r.passed = same && csv_bytes > 0;
    std::ostringstream d;
    d << "two seed-42 runs of the non-root attack preset wrote "
      << (same ? "identical" : "DIFFERENT") << " trace.csv bytes ("
      << csv_bytes << " bytes)";
    r.detail = d.str();
    results.push_back(std::move(r));
  }
  std::error_code cleanup_ec;
  std::filesystem::remove_all(det_dir, cleanup_ec);

  // Criteria 4 and 5 share the calibrated bounded-waveform run; with
  // mitigation off, thresholds never feed back into the trajectory.
  report(progress, "running calibrated detection scenarios");
  std::ostringstream c4_detail;
  bool c4_pass = false;
  {
    Scenario fig7 = preset_scenario("fig7");
    apply_thresholds(fig7, calibrated);
    const Trace tr7 = run_scenario(fig7);

    const double attacked = tail_average_input_norm(tr7, 4, 10.0);
    const double baseline = tail_average_input_norm(fig2_tr, 4, 10.0);
    c4_pass = attacked > 10.0 * baseline;
    c4_detail << "agent-5 mean ||applied input|| over last 10 s: " << fmt(attacked)
              << " vs attack-free " << fmt(baseline) << " (ratio "
              << fmt(attacked / baseline) << ", gate > 10)";

    CriterionResult r5;
    r5.id = 5;
    r5.title = "calibrated detectors: latency and false-positive rate";
    const auto lat_nonimp = detection_latency(tr7, 3, DetectorKind::nonimp);

    Scenario fig4 = preset_scenario("fig4");
    apply_thresholds(fig4, calibrated);
    const Trace tr4 = run_scenario(fig4);
    const auto lat_imp = detection_latency(tr4, 3, DetectorKind::imp);

    report(progress, "measuring false-positive rate over 50 seeds");
    double max_fp = 0.0;
    for (int rseed = 0; rseed < 50; ++rseed) {
      Scenario s = preset_scenario("fig2");
      s.seed = fig2.seed + 100 + static_cast<std::uint64_t>(rseed);
      apply_thresholds(s, calibrated);
      const Trace tr = run_scenario(s);
      int denom = 0;
      std::vector<int> imp_flags(tr.n_agents, 0), non_flags(tr.n_agents, 0);
      for (int k = 0; k < tr.steps(); ++k) {
        if (tr.t(k) + 1e-9 < s.detector_cfg.warmup_time) continue;
        ++denom;
        for (int i = 0; i < tr.n_agents; ++i) {
          imp_flags[i] += tr.h_imp(k, i);
          non_flags[i] += tr.h_nonimp(k, i);
        }
      }
      for (int i = 0; i < tr.n_agents; ++i) {
        max_fp = std::max(max_fp, static_cast<double>(imp_flags[i]) / denom);
        max_fp = std::max(max_fp, static_cast<double>(non_flags[i]) / denom);
      }
    }

    const bool imp_ok = lat_imp.has_value() && *lat_imp < 0.5;
    const bool non_ok = lat_nonimp.has_value() && *lat_nonimp < 0.5;
    const bool fp_ok = max_fp < 0.01;
    r5.passed = imp_ok && non_ok && fp_ok;
    std::ostringstream d;
    d << "agent-4 latency: resonant attack "
      << (lat_imp ? fmt(*lat_imp) + " s" : std::string("none"))
      << " (< 0.5 s), waveform attack "
      << (lat_nonimp ? fmt(*lat_nonimp) + " s" : std::string("none"))
      << " (< 0.5 s); worst per-agent false-positive step rate over 50 "
         "attack-free seeds "
      << fmt(max_fp) << " (< 0.01)";
    r5.detail = d.str();
    results.push_back(std::move(r5));
  }
  {
    CriterionResult r;
    r.id = 4;
    r.title = "bounded non-resonant attack keeps forcing the input";
    r.passed = c4_pass;
    r.detail = c4_detail.str();
    results.push_back(std::move(r));
  }

  // Criterion 6: mitigation on both attack scenarios plus the attack-free
  // no-false-isolation re-check.
  {
    report(progress, "running mitigation scenarios");
    CriterionResult r;
    r.id = 6;
    r.title = "mitigation recovers intact agents, no false isolation";
    bool pass = true;
    std::ostringstream d;
    bool first = true;
    for (const char* name : {"fig6", "fig9"}) {
      Scenario s = preset_scenario(name);
      apply_thresholds(s, calibrated);
      const Trace tr = run_scenario(s);
      const ConsensusMetrics cm = consensus_metrics(tr, kIntact);
      const DiGraph eff = effective_trust_graph(tr, g, 1e-3);
      const bool tree = has_spanning_tree(induced_subgraph(eff, kIntact));
      const bool tail_ok = cm.tail_average < 1e-2;
      pass = pass && tail_ok && tree;
      if (!first) d << "; ";
      first = false;
      const char* label =
          std::holds_alternative<LtiGenerator>(s.attacks[0].generator)
              ? "resonant"
              : "waveform";
      d << label << ": intact tail " << fmt(cm.tail_average)
        << " (< 1e-2), intact trust graph spanning tree "
        << (tree ? "yes" : "NO");
      r.notes.push_back(std::string(label) +
                        " run, agent-4 deviation from intact mean: " +
                        fmt(cm.deviation_from_subset_mean[3]) +
                        "; spanning tree over agents 1-4: " +
                        (has_spanning_tree(induced_subgraph(eff, {0, 1, 2, 3}))
                             ? "yes"
                             : "no"));
    }
    {
      Scenario s = preset_scenario("fig2");
      apply_thresholds(s, calibrated);
      s.mitigation_enabled = true;
      const Trace tr = run_scenario(s);
      const ConsensusMetrics cm =
          consensus_metrics(tr, all_agents(tr.n_agents));
      double u_max = 0.0;
      for (int i = 0; i < tr.n_agents; ++i) {
        u_max = std::max(u_max, tail_average_input(tr, i, 5.0).norm());
      }
      const bool ok = cm.tail_average < 1e-3 && u_max < 1e-3;
      pass = pass && ok;
      d << "; attack-free with mitigation: tail " << fmt(cm.tail_average)
        << " (< 1e-3), max ||mean u|| " << fmt(u_max) << " (< 1e-3)";
    }
    r.passed = pass;
    r.detail = d.str();
    results.push_back(std::move(r));
  }

  // Criterion 7: the closed-form folded divergence against quadrature on
  // the documented envelope. The formula is implemented as printed and its
  // truncation error fails this gate; the failure is expected and the
  // working envelope is reported alongside (see README).
  {
    report(progress, "comparing folded divergence against quadrature");
    CriterionResult r;
    r.id = 7;
    r.title = "folded divergence matches quadrature on the 0.3 envelope";
    r.expected_fail = true;

    const auto run_envelope = [](double envelope, int pairs,
                                 std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      int failures = 0;
      double worst = 0.0;
      for (int k = 0; k < pairs; ++k) {
        const double s1 = 0.5 + 1.5 * unit(rng);
        const double s2 = 0.5 + 1.5 * unit(rng);
        const double m1 = envelope * s1 * (2.0 * unit(rng) - 1.0);
        const double m2 = envelope * s2 * (2.0 * unit(rng) - 1.0);
        const FoldedGaussianParams p{std::abs(m1), s1 * s1};
        const FoldedGaussianParams q{std::abs(m2), s2 * s2};
        const double analytic = folded_gaussian_kl(p, q);
        const double hi =
            std::max(p.mu, q.mu) + 12.0 * std::max(s1, s2);
        const double oracle = kl_numeric_oracle(
            [&](double x) { return folded_gaussian_density(x, p); },
            [&](double x) { return folded_gaussian_density(x, q); }, 0.0, hi);
        const double err = std::abs(analytic - oracle);
        const double tol = std::max(0.02, 0.1 * std::abs(oracle));
        if (err > tol) {
          ++failures;
          worst = std::max(worst, err);
        }
      }
      return std::pair<int, double>(failures, worst);
    };

    const auto [fail03, worst03] = run_envelope(0.3, 100, 0x5EED03);
    const auto [fail005, worst005] = run_envelope(0.05, 100, 0x5EED05);

    double zero_worst = 0.0;
    for (const double s2 : {0.25, 1.0, 1.7, 4.0}) {
      const FoldedGaussianParams p{0.0, s2};
      zero_worst = std::max(zero_worst, std::abs(folded_gaussian_kl(p, p)));
    }
    const bool zero_ok = zero_worst < 1e-12;

    r.passed = (fail03 == 0) && zero_ok;
    std::ostringstream d;
    d << fail03 << "/100 pairs outside max(10% rel, 0.02 abs) at |mu|/sigma "
      << "<= 0.3 (worst abs err " << fmt(worst03)
      << "; gate wants 0); zero-mean equal-params |KL| " << fmt(zero_worst)
      << " (< 1e-12)";
    r.detail = d.str();
    r.notes.push_back(
        "series truncation is the documented cause; measured working "
        "envelope |mu|/sigma <= 0.05: " +
        std::to_string(fail005) + "/100 outside the same tolerance");
    results.push_back(std::move(r));
  }

  // Criterion 8: spectral and combinatorial graph oracles on random
  // digraphs.
  {
    report(progress, "checking graph oracles on 100 random digraphs");
    CriterionResult r;
    r.id = 8;
    r.title = "graph oracles agree on random digraphs";
    Stopwatch clock;
    std::mt19937_64 rng(0x6AF8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int checked = 0, failures = 0;
    int with_tree = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 5);
      std::vector<Edge> edges;
      for (int head = 0; head < n; ++head) {
        for (int tail = 0; tail < n; ++tail) {
          if (head != tail && unit(rng) < 0.35) {
            edges.push_back({tail, head, 1.0});
          }
        }
      }
      const DiGraph rg(n, edges);
      ++checked;
      const bool tree = has_spanning_tree(rg);
      bool ok = (tree == (laplacian_zero_multiplicity(rg) == 1));
      ok = ok && (is_r_robust(rg, 1) == tree);
      if (tree) {
        ++with_tree;
        const LaplacianPartition part = root_partition(rg);
        ok = ok && part.L_r_nr.cwiseAbs().maxCoeff() == 0.0;
        const Eigen::MatrixXd L = laplacian(rg);
        const double tol = 1e-8 * (1.0 + L.norm());
        auto whole = sorted_eigs(L);
        auto blocks = sorted_eigs(part.L_rr);
        for (const auto& ev : sorted_eigs(part.L_nr_nr)) blocks.push_back(ev);
        std::sort(blocks.begin(), blocks.end(),
                  [](const auto& a, const auto& b) {
                    if (a.real() != b.real()) return a.real() < b.real();
                    return a.imag() < b.imag();
                  });
        ok = ok && whole.size() == blocks.size();
        if (ok) {
          for (size_t k = 0; k < whole.size(); ++k) {
            ok = ok && std::abs(whole[k] - blocks[k]) < tol;
          }
        }
        int root_zeros = 0;
        for (const auto& ev : sorted_eigs(part.L_rr)) {
          if (std::abs(ev) < tol) ++root_zeros;
        }
        ok = ok && root_zeros == 1;
        for (const auto& ev : sorted_eigs(part.L_nr_nr)) {
          ok = ok && ev.real() > tol;
        }
      }
      if (!ok) ++failures;
    }
    const double elapsed = clock.seconds();
    r.passed = failures == 0 && elapsed < 10.0;
    std::ostringstream d;
    d << failures << "/" << checked
      << " random digraphs violated an oracle (gate 0); " << with_tree
      << " had spanning trees; runtime " << fmt(elapsed) << " s (< 10 s)";
    r.detail = d.str();
    results.push_back(std::move(r));
  }

  std::sort(results.begin(), results.end(),
            [](const CriterionResult& a, const CriterionResult& b) {
              return a.id < b.id;
            });
  return results;
}

int acceptance_exit_code(const std::vector<CriterionResult>& results) {
  int surprises = 0;
  for (const CriterionResult& r : results) {
    if (r.expected_fail ? r.passed : !r.passed) ++surprises;
  }
  return surprises;
}

}  // namespace rescon
