#include "rescon/attack.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "rescon/errors.hpp"

namespace rescon {

namespace {

bool active_at(const AttackSpec& spec, double t) {
  if (t < spec.t_start) return false;
  if (spec.t_stop && t > *spec.t_stop) return false;
  return true;
}

int channel_dim(const AttackSpec& spec, int n_x, int n_u) {
  return spec.channel == AttackChannel::actuator ? n_u : n_x;
}

std::vector<std::complex<double>> generator_spectrum(const AttackSpec& spec) {
  if (const auto* lti = std::get_if<LtiGenerator>(&spec.generator)) {
    std::vector<std::complex<double>> out;
    Eigen::EigenSolver<Eigen::MatrixXd> es(lti->psi, false);
    for (Eigen::Index k = 0; k < lti->psi.rows(); ++k) {
      out.push_back(es.eigenvalues()(k));
    }
    return out;
  }
  return std::get<WaveformGenerator>(spec.generator).declared_spectrum();
}

// Kuhn's augmenting-path matching over the "within tolerance" relation.
// Returns the matched left indices' count; `match_right` maps right index ->
// left index or -1.
int max_matching(const std::vector<std::complex<double>>& left,
                 const std::vector<std::complex<double>>& right,
                 double tolerance, std::vector<int>* match_right_out) {
  const int nl = static_cast<int>(left.size());
  const int nr = static_cast<int>(right.size());
  std::vector<int> match_right(nr, -1);
  int matched = 0;
  for (int u = 0; u < nl; ++u) {
    std::vector<char> visited(nr, 0);
    std::function<bool(int)> try_augment = [&](int l) -> bool {
      for (int r = 0; r < nr; ++r) {
        if (visited[r] || std::abs(left[l] - right[r]) > tolerance) continue;
        visited[r] = 1;
        if (match_right[r] == -1 || try_augment(match_right[r])) {
          match_right[r] = l;
          return true;
        }
      }
      return false;
    };
    if (try_augment(u)) ++matched;
  }
  if (match_right_out != nullptr) *match_right_out = std::move(match_right);
  return matched;
}

}  // namespace

std::vector<std::complex<double>> WaveformGenerator::declared_spectrum()
    const {
  std::vector<std::complex<double>> out;
  if (offset != 0.0) out.emplace_back(0.0, 0.0);
  if (amplitude != 0.0) {
    out.emplace_back(0.0, frequency);
    out.emplace_back(0.0, -frequency);
  }
  return out;
}

Eigen::VectorXd attack_signal(const AttackSpec& spec, double t) {
  if (const auto* lti = std::get_if<LtiGenerator>(&spec.generator)) {
    if (!active_at(spec, t)) {
      return Eigen::VectorXd::Zero(lti->output_map.rows());
    }
    const Eigen::MatrixXd expm = (lti->psi * (t - spec.t_start)).exp();
    return lti->output_map * (expm * lti->f0);
  }
  const auto& w = std::get<WaveformGenerator>(spec.generator);
  if (!active_at(spec, t)) return Eigen::VectorXd::Zero(w.direction.size());
  const double tau = t - spec.t_start;
  const double v = w.offset + w.amplitude * std::sin(w.frequency * tau + w.phase);
  return v * w.direction;
}

void validate_attack_spec(const AttackSpec& spec, const DiGraph& g, int n_x,
                          int n_u) {
  if (spec.target < 0 || spec.target >= g.size()) {
    throw ConfigError("attack target out of range");
  }
  if (spec.t_stop && *spec.t_stop <= spec.t_start) {
    throw ConfigError("attack t_stop must exceed t_start");
  }
  const int dim = channel_dim(spec, n_x, n_u);
  if (const auto* lti = std::get_if<LtiGenerator>(&spec.generator)) {
    const Eigen::Index m = lti->psi.rows();
    if (lti->psi.cols() != m || lti->f0.size() != m ||
        lti->output_map.cols() != m) {
      throw ConfigError("attack generator psi/f0/output_map shapes disagree");
    }
    if (lti->output_map.rows() != dim) {
      throw ConfigError("attack output dimension does not match its channel");
    }
  } else {
    const auto& w = std::get<WaveformGenerator>(spec.generator);
    if (w.direction.size() != dim) {
      throw ConfigError("attack direction dimension does not match its channel");
    }
  }
  if (spec.channel == AttackChannel::link) {
    if (spec.link_from < 0 || spec.link_from >= g.size()) {
      throw ConfigError("link attack source out of range");
    }
    if (g.weight(spec.target, spec.link_from) == 0.0) {
      throw ConfigError("link attack names a nonexistent edge");
    }
  }
}

std::vector<Eigen::VectorXd> compose_overall_attack(
    const std::vector<AttackSpec>& specs, const DiGraph& g,
    const GainDesign& gains, const AgentDynamics& dyn, double t) {
  const int n = g.size();
  const int n_u = dyn.n_u();
  std::vector<Eigen::VectorXd> f(n, Eigen::VectorXd::Zero(n_u));
  const Eigen::MatrixXd cK = gains.c * gains.K;

  for (const AttackSpec& spec : specs) {
    const Eigen::VectorXd sig = attack_signal(spec, t);
    if (sig.isZero(0.0)) continue;
    switch (spec.channel) {
      case AttackChannel::actuator:
        f[spec.target] += sig;
        break;
      case AttackChannel::sensor: {
        // The corrupted state is consumed by every out-neighbor and by the
        // target's own tracking error (with its total in-weight).
        const int j = spec.target;
        for (const int i : g.out_neighbors(j)) {
          f[i] += cK * (g.weight(i, j) * sig);
        }
        f[j] -= cK * (g.in_degree(j) * sig);
        break;
      }
      case AttackChannel::link: {
        const int i = spec.target;
        const int j = spec.link_from;
        f[i] += cK * (g.weight(i, j) * sig);
        break;
      }
    }
  }
  return f;
}

AttackClassification classify_attack(const AttackSpec& spec,
                                     const AgentDynamics& dyn,
                                     double tolerance) {
  AttackClassification out;
  out.e_psi = generator_spectrum(spec);

  const SpectrumClassification sa = classify_A_spectrum(dyn);
  const int subset_size = max_matching(out.e_psi, sa.eigenvalues, tolerance,
                                       nullptr);
  out.kind = subset_size == static_cast<int>(out.e_psi.size())
                 ? AttackClassification::Kind::imp
                 : AttackClassification::Kind::non_imp;

  std::vector<int> match_right;
  max_matching(out.e_psi, sa.marginal, tolerance, &match_right);
  std::vector<int> matched_left;
  for (int l : match_right) {
    if (l >= 0) matched_left.push_back(l);
  }
  std::sort(matched_left.begin(), matched_left.end());
  for (int l : matched_left) out.shared_marginal.push_back(out.e_psi[l]);
  return out;
}

double steady_state_residual(const Eigen::VectorXd& p,
                             const std::vector<Eigen::VectorXd>& f) {
  if (p.size() != static_cast<Eigen::Index>(f.size())) {
    throw DimensionMismatch("weight/attack vector count mismatch");
  }
  if (f.empty()) return 0.0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.front().size());
  for (Eigen::Index k = 0; k < p.size(); ++k) acc += p(k) * f[k];
  return acc.norm();
}

double max_steady_state_residual(const Eigen::VectorXd& p,
                                 const std::vector<AttackSpec>& specs,
                                 const DiGraph& g, const GainDesign& gains,
                                 const AgentDynamics& dyn, double t0,
                                 double t1, double dt) {
  if (!(dt > 0.0) || t1 < t0) throw ConfigError("bad residual scan interval");
  double worst = 0.0;
  for (double t = t0; t <= t1 + 0.5 * dt; t += dt) {
    const auto f = compose_overall_attack(specs, g, gains, dyn, t);
    worst = std::max(worst, steady_state_residual(p, f));
  }
  return worst;
}

bool predicts_instability(const AttackClassification& cls,
                          bool residual_nonzero) {
  return residual_nonzero && !cls.shared_marginal.empty();
}

}  // namespace rescon
