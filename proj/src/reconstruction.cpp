#include "stimtomo/reconstruction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>

#include "stimtomo/error.hpp"
#include "stimtomo/optimize.hpp"

namespace stimtomo {

namespace {

constexpr int kPairDim = 4;
constexpr int kHvecSize = 16;
// A fit this close to zero cannot be improved by further starts.
constexpr double kExactFitCost = 1e-28;
constexpr double kRankTol = 1e-10;

using Hvec = std::array<double, kHvecSize>;

// Real coordinates of a Hermitian matrix with Tr[A B] = hvec(A) . hvec(B).
Hvec hvec(const ComplexMatrix& m) {
  Hvec v{};
  std::size_t k = 0;
  for (int i = 0; i < kPairDim; ++i) v[k++] = m(i, i).real();
  for (int i = 0; i < kPairDim; ++i)
    for (int j = i + 1; j < kPairDim; ++j) {
      v[k++] = std::sqrt(2.0) * m(i, j).real();
      v[k++] = std::sqrt(2.0) * m(i, j).imag();
    }
  return v;
}

ComplexMatrix from_hvec(const Hvec& v) {
  ComplexMatrix m(kPairDim);
  std::size_t k = 0;
  for (int i = 0; i < kPairDim; ++i) m(i, i) = v[k++];
  for (int i = 0; i < kPairDim; ++i)
    for (int j = i + 1; j < kPairDim; ++j) {
      const Complex z(v[k], v[k + 1]);
      k += 2;
      m(i, j) = z / std::sqrt(2.0);
      m(j, i) = std::conj(z) / std::sqrt(2.0);
    }
  return m;
}

// Cholesky solve of a symmetric positive-definite system. Returns nullopt
// when a pivot falls below kRankTol relative to the largest diagonal entry.
std::optional<Hvec> solve_spd(std::array<double, kHvecSize * kHvecSize> a,
                              Hvec b) {
  constexpr int n = kHvecSize;
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, a[i * n + i]);
  if (!(max_diag > 0.0)) return std::nullopt;
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (d <= kRankTol * max_diag) return std::nullopt;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return b;
}

// Nearest state in the sense of clamping negative eigenvalues.
DensityMatrix project_to_state(const ComplexMatrix& m) {
  ComplexMatrix h = (m + m.adjoint()) * Complex(0.5);
  auto eig = eigen_hermitian(h);
  for (double& l : eig.values) l = std::max(l, 0.0);
  double tr = 0.0;
  for (double l : eig.values) tr += l;
  if (!(tr > 0.0)) return DensityMatrix::maximally_mixed(m.dim());
  return DensityMatrix::normalized(from_eigen(eig.values, eig.vectors));
}

std::string group_name(Basis signal, Basis idler) {
  return "seed " + to_string(signal) + " x idler " + to_string(idler);
}

bool in_subset(const MeasurementSetting& s, SettingsSubset subset) {
  if (subset == SettingsSubset::All36) return true;
  auto minimal = [](PolLabel l) {
    return l == PolLabel::H || l == PolLabel::V || l == PolLabel::D ||
           l == PolLabel::R;
  };
  return minimal(s.signal) && minimal(s.idler);
}

// Members of the {signal basis} x {idler basis} block containing `s`.
std::array<MeasurementSetting, 4> group_members(const MeasurementSetting& s) {
  const Basis bs = basis_of(s.signal), bi = basis_of(s.idler);
  return {MeasurementSetting{transmitted_label(bs), transmitted_label(bi)},
          MeasurementSetting{transmitted_label(bs), reflected_label(bi)},
          MeasurementSetting{reflected_label(bs), transmitted_label(bi)},
          MeasurementSetting{reflected_label(bs), reflected_label(bi)}};
}

int group_index(const MeasurementSetting& s) {
  return static_cast<int>(basis_of(s.signal)) * 3 +
         static_cast<int>(basis_of(s.idler));
}

void require_single_angle(std::span<const MeasurementRecord> records) {
  if (records.empty()) return;
  const double theta = records.front().theta_mrad;
  for (const auto& r : records) {
    if (r.theta_mrad != theta) {
      throw DataError("records span multiple seed angles");
    }
  }
}

}  // namespace

std::string to_string(ProbabilityMode mode) {
  switch (mode) {
    case ProbabilityMode::Qst: return "qst";
    case ProbabilityMode::SetIdeal: return "set_ideal";
    case ProbabilityMode::SetRenormalized: return "set_renormalized";
  }
  return "?";
}

std::string to_string(Basis basis) {
  switch (basis) {
    case Basis::HV: return "H/V";
    case Basis::DA: return "D/A";
    case Basis::RL: return "R/L";
  }
  return "?";
}

OperatorSet ideal_operators() {
  OperatorSet ops;
  for (const auto& s : all_settings()) ops.emplace(s, pair_operator(s));
  return ops;
}

OperatorSet rotated_operators(const std::map<PolLabel, DensityMatrix>& seed_states) {
  OperatorSet ops;
  for (const auto& [seed, state] : seed_states)
    for (PolLabel i : kAllLabels)
      ops.emplace(MeasurementSetting{seed, i}, rotated_pair_operator(state, i));
  return ops;
}

void FitOptions::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations: must be positive");
  if (restarts < 1) throw ConfigError("restarts: must be positive");
  if (!(gradient_tolerance > 0.0)) {
    throw ConfigError("gradient_tolerance: must be positive");
  }
}

Metrics compute_metrics(const DensityMatrix& rho) {
  return {purity(rho), concurrence(rho), fidelity(rho, bell_state()),
          phase_hh_vv(rho)};
}

std::uint64_t operator_hash(const ComplexMatrix& op) {
  std::uint64_t h = 1469598103934665603ull;
  char buf[64];
  for (const Complex& z : op.entries()) {
    // +0.0 keeps -0 and 0 apart from printing differently.
    const int n = std::snprintf(buf, sizeof buf, "%.12e,%.12e;", z.real() + 0.0,
                                z.imag() + 0.0);
    for (int i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

ProbabilityTable qst_probabilities(std::span<const MeasurementRecord> records) {
  std::map<MeasurementSetting, double> counts;
  for (const auto& r : records) {
    if (r.kind != RecordKind::QstCount) continue;
    counts[r.projected()] += r.value;
  }
  if (counts.empty()) throw DataError("no qst_count records");
  ProbabilityTable table;
  table.mode = ProbabilityMode::Qst;
  std::array<bool, 9> seen{};
  for (const auto& [setting, value] : counts) {
    const int g = group_index(setting);
    if (seen[g]) continue;
    seen[g] = true;
    const auto members = group_members(setting);
    double total = 0.0;
    for (const auto& m : members) {
      auto it = counts.find(m);
      if (it == counts.end()) {
        throw DataError("basis pair " + to_string(basis_of(setting.signal)) +
                        " x " + to_string(basis_of(setting.idler)) +
                        " is missing outcome " + to_char(m.signal) +
                        to_char(m.idler));
      }
      total += it->second;
    }
    if (!(total > 0.0)) {
      throw DataError("basis pair " + to_string(basis_of(setting.signal)) +
                      " x " + to_string(basis_of(setting.idler)) +
                      " has zero total counts");
    }
    for (const auto& m : members) {
      table.entries[m] = counts.at(m) / total;
      table.totals[m] = total;
    }
  }
  return table;
}

ProbabilityTable set_ideal_probabilities(std::span<const MeasurementRecord> records) {
  require_single_angle(records);
  // Seed power per label: T + R at each analyser setting, averaged.
  std::map<PolLabel, std::map<PolLabel, std::array<double, 2>>> seed_ports;
  std::map<PolLabel, std::map<PolLabel, std::array<bool, 2>>> seed_seen;
  std::map<MeasurementSetting, double> stim;
  for (const auto& r : records) {
    if (r.kind == RecordKind::SeedIntensity) {
      const int p = r.port == Port::Transmitted ? 0 : 1;
      seed_ports[r.setting.signal][r.setting.idler][p] += r.value;
      seed_seen[r.setting.signal][r.setting.idler][p] = true;
    } else if (r.kind == RecordKind::SetIntensity && r.port == Port::Transmitted) {
      stim[r.setting] += r.value;
    }
  }
  if (stim.empty()) throw DataError("no transmitted set_intensity records");

  ProbabilityTable table;
  table.mode = ProbabilityMode::SetIdeal;
  std::map<PolLabel, bool> seeds;
  for (const auto& [setting, value] : stim) seeds[setting.signal] = true;
  for (const auto& [seed, unused] : seeds) {
    const std::string name(1, to_char(seed));
    double power = 0.0;
    int settings_used = 0;
    for (const auto& [analyser, ports] : seed_ports[seed]) {
      const auto seen = seed_seen[seed][analyser];
      if (!seen[0] || !seen[1]) continue;
      power += ports[0] + ports[1];
      ++settings_used;
    }
    if (settings_used == 0) {
      throw DataError("seed " + name + " lacks both seed-intensity ports");
    }
    power /= settings_used;
    if (!(power > 0.0)) throw DataError("seed " + name + " has zero total intensity");
    for (PolLabel i : kAllLabels) {
      auto it = stim.find({seed, i});
      if (it == stim.end()) {
        throw DataError(std::string("seed ") + to_char(seed) +
                        " is missing the stimulated intensity for idler " +
                        to_char(i));
      }
      table.entries[{seed, i}] = it->second / power;
    }
  }
  return table;
}

ProbabilityTable set_renormalize(const ProbabilityTable& ideal) {
  if (ideal.mode != ProbabilityMode::SetIdeal) {
    throw DataError("set_renormalize expects a set_ideal table");
  }
  ProbabilityTable out;
  out.mode = ProbabilityMode::SetRenormalized;
  for (const auto& [setting, value] : ideal.entries) {
    if (out.entries.contains(setting)) continue;
    const auto members = group_members(setting);
    const std::string name =
        group_name(basis_of(setting.signal), basis_of(setting.idler));
    double sum = 0.0;
    for (const auto& m : members) {
      auto it = ideal.entries.find(m);
      if (it == ideal.entries.end()) {
        throw DataError("normalisation group " + name + " is incomplete");
      }
      sum += it->second;
    }
    if (!(sum > 0.0)) throw DataError("normalisation group " + name + " sums to zero");
    for (const auto& m : members) out.entries[m] = ideal.entries.at(m) / sum;
  }
  return out;
}

DensityMatrix reconstruct_single_photon(std::span<const MeasurementRecord> records) {
  // [analyser] -> (T, R)
  std::map<PolLabel, std::array<double, 2>> ports;
  std::map<PolLabel, std::array<bool, 2>> seen;
  double grand_total = 0.0;
  for (const auto& r : records) {
    if (r.kind != RecordKind::SeedIntensity) continue;
    const int p = r.port == Port::Transmitted ? 0 : 1;
    ports[r.setting.idler][p] += r.value;
    seen[r.setting.idler][p] = true;
    grand_total += r.value;
  }
  if (!(grand_total > 0.0)) throw DataError("seed intensities are all zero");

  std::array<double, 3> stokes{};
  for (Basis b : kAllBases) {
    double estimate = 0.0;
    int used = 0;
    for (PolLabel analyser : {transmitted_label(b), reflected_label(b)}) {
      auto it = ports.find(analyser);
      if (it == ports.end() || !seen[analyser][0] || !seen[analyser][1]) continue;
      const double total = it->second[0] + it->second[1];
      if (!(total > 0.0)) continue;
      // Probability of the basis' transmitted label.
      const double p = analyser == transmitted_label(b) ? it->second[0] / total
                                                        : it->second[1] / total;
      estimate += p;
      ++used;
    }
    if (used == 0) {
      throw DataError("seed tomography lacks analyser data for basis " +
                      to_string(b));
    }
    stokes[static_cast<int>(b)] = 2.0 * estimate / used - 1.0;
  }
  const double s_hv = stokes[0], s_da = stokes[1], s_rl = stokes[2];
  ComplexMatrix m(2, {0.5 * (1.0 + s_hv), 0.5 * Complex(s_da, -s_rl),
                      0.5 * Complex(s_da, s_rl), 0.5 * (1.0 - s_hv)});
  if (s_hv * s_hv + s_da * s_da + s_rl * s_rl <= 1.0) {
    return DensityMatrix::normalized(m);
  }
  return project_to_state(m);
}

std::map<PolLabel, DensityMatrix> reconstruct_seed_states(
    std::span<const MeasurementRecord> records) {
  std::map<PolLabel, std::vector<MeasurementRecord>> by_seed;
  for (const auto& r : records)
    if (r.kind == RecordKind::SeedIntensity) by_seed[r.setting.signal].push_back(r);
  if (by_seed.empty()) throw DataError("no seed tomography records");
  std::map<PolLabel, DensityMatrix> out;
  for (const auto& [seed, rows] : by_seed) {
    try {
      out.emplace(seed, reconstruct_single_photon(rows));
    } catch (const DataError& e) {
      throw DataError(std::string("seed ") + to_char(seed) + ": " + e.what());
    }
  }
  return out;
}

LeastSquaresCost::LeastSquaresCost(const ProbabilityTable& probs,
                                   const OperatorSet& operators,
                                   const FitOptions& opts) {
  opts.validate();
  const bool grouped = probs.mode == ProbabilityMode::SetRenormalized;
  if (opts.weighting == Weighting::InverseVariance && probs.totals.empty()) {
    throw ConfigError("inverse-variance weighting needs coincidence-count data");
  }
  std::map<int, int> group_slot;
  for (const auto& [setting, p] : probs.entries) {
    if (!in_subset(setting, opts.settings)) continue;
    auto it = operators.find(setting);
    if (it == operators.end()) {
      throw DataError(std::string("no measurement operator for setting ") +
                      to_char(setting.signal) + to_char(setting.idler));
    }
    double weight = 1.0;
    if (opts.weighting == Weighting::InverseVariance) {
      const double n = probs.totals.at(setting);
      weight = n / (p * (1.0 - p) + 1.0 / n);
    }
    int group = -1;
    if (grouped) {
      const int g = group_index(setting);
      auto slot = group_slot.find(g);
      if (slot == group_slot.end()) {
        ComplexMatrix sum(kPairDim);
        for (const auto& m : group_members(setting)) {
          auto op = operators.find(m);
          if (op == operators.end()) {
            throw DataError("normalisation group " +
                            group_name(basis_of(m.signal), basis_of(m.idler)) +
                            " lacks operators");
          }
          sum += op->second;
        }
        slot = group_slot.emplace(g, static_cast<int>(group_sums_.size())).first;
        group_sums_.push_back(sum);
      }
      group = slot->second;
    }
    terms_.push_back({it->second, p, weight, group});
    audit_.push_back({setting, p, operator_hash(it->second)});
  }
  if (terms_.size() < 16) {
    throw NumericalError("at least 16 probabilities are needed, got " +
                         std::to_string(terms_.size()));
  }
  if (opts.weighting == Weighting::InverseVariance) {
    double mean = 0.0;
    for (const auto& t : terms_) mean += t.weight;
    mean /= static_cast<double>(terms_.size());
    for (auto& t : terms_) t.weight /= mean;
  }
  std::array<double, kHvecSize * kHvecSize> gram{};
  for (const auto& t : terms_) {
    const Hvec v = hvec(t.op);
    for (int i = 0; i < kHvecSize; ++i)
      for (int j = 0; j < kHvecSize; ++j) gram[i * kHvecSize + j] += v[i] * v[j];
  }
  if (!solve_spd(gram, Hvec{})) {
    throw NumericalError(
        "measurement operators do not span the two-qubit operator space; "
        "the fit is underdetermined");
  }
}

double LeastSquaresCost::evaluate(std::span<const double> params,
                                  std::span<double> gradient,
                                  bool with_gradient) const {
  const ComplexMatrix t = triangular_factor(params);
  const ComplexMatrix m = t * t.adjoint();
  const double tau = m.trace().real();
  if (!(tau > 0.0)) {
    if (with_gradient) std::fill(gradient.begin(), gradient.end(), 0.0);
    return std::numeric_limits<double>::infinity();
  }
  const ComplexMatrix rho = m * Complex(1.0 / tau);

  std::vector<double> denom(group_sums_.size(), 1.0);
  for (std::size_t g = 0; g < group_sums_.size(); ++g)
    denom[g] = trace_of_product(group_sums_[g], rho).real();

  double cost = 0.0;
  ComplexMatrix grad_rho(kPairDim);
  std::vector<double> group_coeff(group_sums_.size(), 0.0);
  for (const auto& term : terms_) {
    const double a = trace_of_product(term.op, rho).real();
    const double b = term.group >= 0 ? denom[term.group] : 1.0;
    const double r = a / b - term.target;
    cost += term.weight * r * r;
    if (!with_gradient) continue;
    grad_rho += term.op * Complex(2.0 * term.weight * r / b);
    if (term.group >= 0) group_coeff[term.group] += 2.0 * term.weight * r * a / (b * b);
  }
  if (!with_gradient) return cost;
  for (std::size_t g = 0; g < group_sums_.size(); ++g)
    grad_rho -= group_sums_[g] * Complex(group_coeff[g]);

  // rho = M / Tr M  =>  dC = Tr[(G - Tr[G rho]) dM] / Tr M
  const double g_rho = trace_of_product(grad_rho, rho).real();
  ComplexMatrix grad_m = grad_rho - ComplexMatrix::identity(kPairDim) * Complex(g_rho);
  grad_m *= 1.0 / tau;
  // dM = dT T^dagger + T dT^dagger  =>  dC/dRe T = 2 Re(G T), dC/dIm T = 2 Im(G T)
  const ComplexMatrix k = grad_m * t;
  std::size_t idx = 0;
  for (int i = 0; i < kPairDim; ++i) gradient[idx++] = 2.0 * k(i, i).real();
  for (int i = 1; i < kPairDim; ++i)
    for (int j = 0; j < i; ++j) {
      gradient[idx++] = 2.0 * k(i, j).real();
      gradient[idx++] = 2.0 * k(i, j).imag();
    }
  return cost;
}

double LeastSquaresCost::value(std::span<const double> params) const {
  return evaluate(params, {}, false);
}

double LeastSquaresCost::value_and_gradient(std::span<const double> params,
                                            std::span<double> gradient) const {
  return evaluate(params, gradient, true);
}

DensityMatrix LeastSquaresCost::linear_inversion() const {
  std::array<double, kHvecSize * kHvecSize> gram{};
  Hvec rhs{};
  for (const auto& t : terms_) {
    const Hvec v = hvec(t.op);
    for (int i = 0; i < kHvecSize; ++i) {
      rhs[i] += t.weight * t.target * v[i];
      for (int j = 0; j < kHvecSize; ++j)
        gram[i * kHvecSize + j] += t.weight * v[i] * v[j];
    }
  }
  const auto x = solve_spd(gram, rhs);
  if (!x) return DensityMatrix::maximally_mixed(kPairDim);
  return project_to_state(from_hvec(*x));
}

ReconstructionResult fit_least_squares(const ProbabilityTable& probs,
                                       const OperatorSet& operators,
                                       const FitOptions& opts) {
  const LeastSquaresCost cost(probs, operators, opts);
  const Objective objective = [&cost](std::span<const double> x,
                                      std::span<double> g) {
    return cost.value_and_gradient(x, g);
  };
  const MinimizeOptions mopts{opts.max_iterations, opts.gradient_tolerance,
                              kExactFitCost};

  auto initial = [&](int start) -> std::vector<double> {
    const InitStrategy strategy = start == 0 ? opts.init : InitStrategy::Random;
    switch (strategy) {
      case InitStrategy::LinearInversion: {
        const auto p = density_to_params(cost.linear_inversion(), 1e-8);
        return {p.values().begin(), p.values().end()};
      }
      case InitStrategy::Mixed: {
        const auto p = density_to_params(DensityMatrix::maximally_mixed(kPairDim), 0.0);
        return {p.values().begin(), p.values().end()};
      }
      case InitStrategy::Random: {
        std::seed_seq seq{static_cast<std::uint32_t>(opts.seed),
                          static_cast<std::uint32_t>(opts.seed >> 32),
                          static_cast<std::uint32_t>(start)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;
        std::vector<double> x(16);
        for (double& v : x) v = normal(rng);
        return x;
      }
    }
    return std::vector<double>(16, 1.0);
  };

  std::optional<MinimizeResult> best;
  int best_start = 0;
  for (int start = 0; start <= opts.restarts; ++start) {
    MinimizeResult run = minimize_bfgs(objective, initial(start), mopts);
    if (!best || run.value < best->value) {
      best = std::move(run);
      best_start = start;
    }
    if (best->value <= kExactFitCost && best->converged) break;
  }

  ReconstructionResult result{params_to_density(TriangularParams(best->x)), 0.0, 0,
                              false, 0, false, {}, {}, {}};
  result.residual = best->value;
  result.iterations = best->iterations;
  result.converged = best->converged;
  result.best_start = best_start;
  result.metrics = compute_metrics(result.rho);
  result.audit = cost.audit();
  result.provenance.push_back("probabilities: " + to_string(probs.mode));
  if (cost.grouped()) {
    result.provenance.push_back(
        "model: settings divided by their normalisation-group sum");
  }
  result.provenance.push_back("fit: " + std::to_string(cost.residual_count()) +
                              " residuals, best of " +
                              std::to_string(opts.restarts + 1) + " starts");
  return result;
}

ReconstructionResult reconstruct_qst(std::span<const MeasurementRecord> records,
                                     const FitOptions& opts) {
  auto result = fit_least_squares(qst_probabilities(records), ideal_operators(), opts);
  result.provenance.insert(result.provenance.begin(),
                           "qst: four-outcome normalisation per basis pair");
  return result;
}

ReconstructionResult reconstruct_set(
    std::span<const MeasurementRecord> stim_records,
    std::span<const MeasurementRecord> seed_tomo_records, const FitOptions& opts,
    SetOperators operators) {
  const ProbabilityTable table =
      set_renormalize(set_ideal_probabilities(stim_records));
  OperatorSet ops;
  if (operators == SetOperators::Rotated) {
    const auto seeds = reconstruct_seed_states(seed_tomo_records);
    for (const auto& [setting, p] : table.entries) {
      if (!seeds.contains(setting.signal)) {
        throw DataError(std::string("no seed tomography for seed ") +
                        to_char(setting.signal));
      }
    }
    ops = rotated_operators(seeds);
  } else {
    ops = ideal_operators();
  }
  auto result = fit_least_squares(table, ops, opts);
  result.rotated_operators = operators == SetOperators::Rotated;
  result.provenance.insert(
      result.provenance.begin(),
      {"set: ideal ratios I_stim / I_seed per seed label",
       "set: renormalised over seed-basis x idler-basis groups",
       operators == SetOperators::Rotated
           ? "operators: rotated by reconstructed seed states"
           : "operators: ideal projectors"});
  return result;
}

}  // namespace stimtomo
