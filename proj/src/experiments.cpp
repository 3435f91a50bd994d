#include "stimtomo/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <numbers>
#include <thread>

#include "stimtomo/error.hpp"
#include "stimtomo/quadrature.hpp"

namespace stimtomo {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent streams per (point, replicate, purpose).
std::uint64_t derive_seed(std::uint64_t base, std::size_t point, int replicate,
                          int purpose) {
  std::uint64_t h = splitmix(base);
  h = splitmix(h ^ point);
  h = splitmix(h ^ static_cast<std::uint64_t>(replicate));
  return splitmix(h ^ static_cast<std::uint64_t>(purpose));
}

double wrap_phase(double x) {
  x = std::remainder(x, 2.0 * kPi);
  return x <= -kPi ? x + 2.0 * kPi : x;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int resolve_threads(int requested, std::size_t tasks) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(1, n);
  return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(tasks, 1)));
}

// Runs every task once; results land in their own slot so the output does
// not depend on scheduling. The first failure (by task index) is rethrown.
void run_tasks(std::size_t count, int threads,
               const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = resolve_threads(threads, count);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

QstAcquisitionConfig qst_for(const ExperimentSpec& spec, std::size_t point,
                             int rep) {
  QstAcquisitionConfig q = spec.qst;
  q.expectation_only = !spec.noise;
  q.seed_rng = derive_seed(spec.seed, point, rep, 0);
  return q;
}

SetAcquisitionConfig set_for(const ExperimentSpec& spec, std::size_t point,
                             int rep) {
  SetAcquisitionConfig s = spec.set;
  if (!spec.noise) s.intensity_noise_rel = 0.0;
  s.seed_rng = derive_seed(spec.seed, point, rep, 1);
  return s;
}

struct Job {
  std::size_t point;
  int replicate;
};

std::vector<Job> jobs_for(std::size_t points, int replicates) {
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < points; ++p)
    for (int r = 0; r < replicates; ++r) jobs.push_back({p, r});
  return jobs;
}

void sort_points(std::vector<ReportPoint>& pts) {
  std::stable_sort(pts.begin(), pts.end(),
                   [](const ReportPoint& a, const ReportPoint& b) {
                     if (a.value != b.value) return a.value < b.value;
                     return a.replicate < b.replicate;
                   });
}

// Both pipelines on one source; SET at the spec's seed angle.
ReportPoint compare_point(const ExperimentSpec& spec, const SourceConfig& src,
                          const PdlConfig& pdl, std::size_t point, int rep) {
  ReportPoint pt;
  pt.replicate = rep;
  const auto q = qst_pipeline(src, qst_for(spec, point, rep), spec.fit);
  const auto s = set_pipeline(src, spec.set_theta_mrad, spec.distortion, pdl,
                              set_for(spec, point, rep), spec.fit);
  pt.truth = compute_metrics(true_state(src, spec.set_theta_mrad));
  pt.qst = q.metrics;
  pt.set = s.metrics;
  pt.extra["truth_averaged_concurrence"] =
      concurrence(angle_averaged_state(src));
  pt.extra["qst_converged"] = q.converged ? 1.0 : 0.0;
  pt.extra["set_converged"] = s.converged ? 1.0 : 0.0;
  pt.extra["mutual_fidelity"] = fidelity(q.rho, s.rho);
  const double dphi = wrap_phase(s.metrics.phase_hh_vv - q.metrics.phase_hh_vv);
  pt.extra["phase_difference"] = dphi;
  // Idler phase plate diag(1, e^{-i dphi}) moves the QST coherence onto the
  // SET phase.
  ComplexMatrix u = ComplexMatrix::identity(4);
  u(1, 1) = std::polar(1.0, -dphi);
  u(3, 3) = std::polar(1.0, -dphi);
  pt.extra["aligned_fidelity"] = fidelity(transform(q.rho, u), s.rho);
  return pt;
}

ExperimentReport sweep_report(const ExperimentSpec& spec, const std::string& name,
                              const std::string& parameter,
                              const std::function<void(SourceConfig&, double)>& apply) {
  const auto jobs = jobs_for(spec.sweep.size(), spec.replicates);
  std::vector<ReportPoint> slots(jobs.size());
  run_tasks(jobs.size(), spec.threads, [&](std::size_t i) {
    SourceConfig src = spec.source;
    apply(src, spec.sweep[jobs[i].point]);
    slots[i] = compare_point(spec, src, PdlConfig{}, jobs[i].point, jobs[i].replicate);
    slots[i].value = spec.sweep[jobs[i].point];
  });
  sort_points(slots);
  ExperimentReport rep;
  rep.name = name;
  rep.parameter = parameter;
  rep.points = std::move(slots);
  return rep;
}

// Median over replicates of f, grouped by swept value.
std::vector<std::pair<double, double>> per_value_median(
    const std::vector<ReportPoint>& pts,
    const std::function<double(const ReportPoint&)>& f) {
  std::vector<std::pair<double, double>> out;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::vector<double> vals;
    const double v = pts[i].value;
    for (; i < pts.size() && pts[i].value == v; ++i) vals.push_back(f(pts[i]));
    out.emplace_back(v, median(vals));
  }
  return out;
}

double max_second(const std::vector<std::pair<double, double>>& v) {
  double m = 0.0;
  for (const auto& [x, y] : v) m = std::max(m, y);
  return m;
}

double closed_form_concurrence(double a) {
  return 2.0 * std::sqrt(std::max(0.0, a * (1.0 - a)));
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::BellCompare: return "bell_compare";
    case ExperimentKind::ConcurrenceSweep: return "concurrence_sweep";
    case ExperimentKind::PuritySweep: return "purity_sweep";
    case ExperimentKind::AngleScan: return "angle_scan";
    case ExperimentKind::PdlDemo: return "pdl_demo";
    case ExperimentKind::AngleAverage: return "angle_average";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::BellCompare, ExperimentKind::ConcurrenceSweep,
                 ExperimentKind::PuritySweep, ExperimentKind::AngleScan,
                 ExperimentKind::PdlDemo, ExperimentKind::AngleAverage})
    if (to_string(k) == name) return k;
  throw ConfigError("name: unknown experiment '" + name + "'");
}

PdlConfig PdlCase::to_config() const {
  auto amps = [](double r, const std::string& field) -> std::array<double, 2> {
    require(std::isfinite(r) && r > 0.0, field, "must be finite and positive");
    if (r >= 1.0) return {1.0, 1.0 / std::sqrt(r)};
    return {std::sqrt(r), 1.0};
  };
  PdlConfig c;
  c.signal_loss_hv = amps(signal_ratio_hv, "pdl_cases.signal_ratio_hv");
  c.idler_loss_hv = amps(idler_ratio_hv, "pdl_cases.idler_ratio_hv");
  return c;
}

void ExperimentSpec::validate() const {
  source.validate();
  qst.validate();
  set.validate();
  distortion.validate();
  fit.validate();
  require(replicates >= 1, "replicates", "must be at least 1");
  require(threads >= 0, "threads", "must be nonnegative");
  require(std::isfinite(set_theta_mrad), "set_theta_mrad", "must be finite");
  for (double v : sweep) require(std::isfinite(v), "sweep", "values must be finite");
  switch (kind) {
    case ExperimentKind::BellCompare:
      break;
    case ExperimentKind::ConcurrenceSweep:
      require(!sweep.empty(), "sweep", "must not be empty");
      for (double v : sweep)
        require(v >= 0.0 && v <= 1.0, "sweep", "alpha_sq values must lie in [0, 1]");
      break;
    case ExperimentKind::PuritySweep:
      require(!sweep.empty(), "sweep", "must not be empty");
      for (double v : sweep)
        require(v >= 0.0 && v <= 1.0, "sweep",
                "decoherence values must lie in [0, 1]");
      break;
    case ExperimentKind::AngleScan:
      require(sweep.size() >= 3, "sweep", "angle scan needs at least 3 angles");
      break;
    case ExperimentKind::PdlDemo:
      require(!pdl_cases.empty(), "pdl_cases", "must not be empty");
      for (const auto& c : pdl_cases) c.to_config().validate();
      break;
    case ExperimentKind::AngleAverage:
      require(!sweep.empty(), "sweep", "must not be empty");
      for (double v : sweep)
        require(v >= 1.0 && v <= 1000.0 && v == std::floor(v), "sweep",
                "grid sizes must be integers in [1, 1000]");
      break;
  }
}

ExperimentSpec default_spec(ExperimentKind kind) {
  ExperimentSpec s;
  s.kind = kind;
  switch (kind) {
    case ExperimentKind::BellCompare:
      s.set_theta_mrad = 1.0;
      break;
    case ExperimentKind::ConcurrenceSweep:
      s.source.phase_slope = 0.0;
      for (int k = 0; k <= 10; ++k) s.sweep.push_back(0.05 * k);
      break;
    case ExperimentKind::PuritySweep:
      s.source.phase_slope = 0.0;
      for (int k = 0; k <= 5; ++k) s.sweep.push_back(0.2 * k);
      break;
    case ExperimentKind::AngleScan:
      for (int k = -4; k <= 4; ++k) s.sweep.push_back(k);
      break;
    case ExperimentKind::PdlDemo:
      s.source.phase_slope = 0.0;
      s.source.decoherence = 0.916;
      s.pdl_cases = {{"none", 1.0, 1.0},
                     {"matched", 10.5, 11.6},
                     {"mismatched", 1.16, 0.064}};
      break;
    case ExperimentKind::AngleAverage:
      s.sweep = {3, 33};
      break;
  }
  return s;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& weights) {
  if (x.size() != y.size() || (!weights.empty() && weights.size() != x.size()))
    throw std::invalid_argument("fit_line: size mismatch");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
  }
  if (x.size() < 2 || !(sw > 0)) throw NumericalError("fit_line: need two weighted points");
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sxx += w * (x[i] - mx) * (x[i] - mx);
    sxy += w * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw NumericalError("fit_line: abscissae are all equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

std::vector<double> unwrap_phases(const std::vector<double>& phases) {
  std::vector<double> out(phases);
  for (std::size_t i = 1; i < out.size(); ++i)
    out[i] = out[i - 1] + wrap_phase(phases[i] - phases[i - 1]);
  return out;
}

double gaussian_width(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw NumericalError("gaussian_width: need at least 3 points");
  // Normal equations for log y = c0 + c1 x + c2 x^2.
  double a[3][4] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0)) throw NumericalError("gaussian_width: nonpositive intensity");
    const double p[3] = {1.0, x[i], x[i] * x[i]};
    const double ly = std::log(y[i]);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[r][c] += p[r] * p[c];
      a[r][3] += p[r] * ly;
    }
  }
  for (int k = 0; k < 3; ++k) {
    int piv = k;
    for (int r = k + 1; r < 3; ++r)
      if (std::abs(a[r][k]) > std::abs(a[piv][k])) piv = r;
    std::swap(a[k], a[piv]);
    if (std::abs(a[k][k]) < 1e-300) throw NumericalError("gaussian_width: singular fit");
    for (int r = 0; r < 3; ++r) {
      if (r == k) continue;
      const double f = a[r][k] / a[k][k];
      for (int c = k; c < 4; ++c) a[r][c] -= f * a[k][c];
    }
  }
  const double c2 = a[2][3] / a[2][2];
  if (!(c2 < 0)) throw NumericalError("gaussian_width: log-curvature is not negative");
  return std::sqrt(-0.5 / c2);
}

ReconstructionResult set_pipeline(const SourceConfig& source, double theta_mrad,
                                  const SeedDistortion& distortion,
                                  const PdlConfig& pdl,
                                  const SetAcquisitionConfig& acq,
                                  const FitOptions& fit) {
  const auto stim = simulate_set_scan(source, theta_mrad, distortion, pdl, acq);
  SetAcquisitionConfig tomo = acq;
  tomo.seed_rng = splitmix(acq.seed_rng ^ 0x7365656475ull);
  const auto seeds = simulate_seed_tomography(distortion, pdl, tomo, theta_mrad);
  return reconstruct_set(stim, seeds, fit);
}

ReconstructionResult qst_pipeline(const SourceConfig& source,
                                  const QstAcquisitionConfig& acq,
                                  const FitOptions& fit) {
  return reconstruct_qst(simulate_qst_counts(angle_averaged_state(source), acq), fit);
}

ExperimentReport run_bell_compare(const ExperimentSpec& spec) {
  spec.validate();
  const auto jobs = jobs_for(1, spec.replicates);
  std::vector<ReportPoint> slots(jobs.size());
  run_tasks(jobs.size(), spec.threads, [&](std::size_t i) {
    slots[i] = compare_point(spec, spec.source, PdlConfig{}, 0, jobs[i].replicate);
    slots[i].value = spec.set_theta_mrad;
  });
  sort_points(slots);
  ExperimentReport rep;
  rep.name = "bell_compare";
  rep.parameter = "set_theta_mrad";
  rep.points = std::move(slots);
  auto med = [&](const std::function<double(const ReportPoint&)>& f) {
    std::vector<double> v;
    for (const auto& p : rep.points) v.push_back(f(p));
    return median(v);
  };
  rep.summary["median_phase_difference"] =
      med([](const ReportPoint& p) { return p.extra.at("phase_difference"); });
  rep.summary["median_mutual_fidelity"] =
      med([](const ReportPoint& p) { return p.extra.at("mutual_fidelity"); });
  rep.summary["median_aligned_fidelity"] =
      med([](const ReportPoint& p) { return p.extra.at("aligned_fidelity"); });
  rep.summary["median_qst_fidelity_bell"] =
      med([](const ReportPoint& p) { return p.qst->fidelity_vs_bell; });
  rep.summary["median_set_fidelity_bell"] =
      med([](const ReportPoint& p) { return p.set->fidelity_vs_bell; });
  rep.summary["median_abs_delta_concurrence"] = med([](const ReportPoint& p) {
    return std::abs(p.set->concurrence - p.qst->concurrence);
  });
  rep.summary["median_abs_delta_purity"] = med(
      [](const ReportPoint& p) { return std::abs(p.set->purity - p.qst->purity); });
  rep.summary["expected_phase_difference"] =
      pair_phase(spec.source, spec.set_theta_mrad) - phase_hh_vv(angle_averaged_state(spec.source));
  rep.notes.push_back("QST sees the angle-averaged state; SET sees the state at the seed angle");
  return rep;
}

ExperimentReport run_concurrence_sweep(const ExperimentSpec& spec) {
  spec.validate();
  auto rep = sweep_report(spec, "concurrence_sweep", "alpha_sq",
                          [](SourceConfig& s, double v) { s.alpha_sq = v; });
  for (auto& p : rep.points)
    p.extra["closed_form_concurrence"] = closed_form_concurrence(p.value);
  auto dev = [](bool set) {
    return [set](const ReportPoint& p) {
      const double c = set ? p.set->concurrence : p.qst->concurrence;
      return std::abs(c - closed_form_concurrence(p.value));
    };
  };
  rep.summary["max_median_abs_dev_qst"] = max_second(per_value_median(rep.points, dev(false)));
  rep.summary["max_median_abs_dev_set"] = max_second(per_value_median(rep.points, dev(true)));
  rep.summary["max_median_abs_delta"] =
      max_second(per_value_median(rep.points, [](const ReportPoint& p) {
        return std::abs(p.set->concurrence - p.qst->concurrence);
      }));
  for (int k = 0; k <= 100; ++k) {
    const double a = 0.01 * k;
    rep.curve.push_back({a, closed_form_concurrence(a)});
  }
  rep.notes.push_back("curve: 2 sqrt(a (1 - a))");
  return rep;
}

ExperimentReport run_purity_sweep(const ExperimentSpec& spec) {
  spec.validate();
  auto rep = sweep_report(spec, "purity_sweep", "decoherence",
                          [](SourceConfig& s, double v) { s.decoherence = v; });
  const auto delta = per_value_median(rep.points, [](const ReportPoint& p) {
    return std::abs(p.set->purity - p.qst->purity);
  });
  rep.summary["max_median_abs_delta_purity"] = max_second(delta);
  double worst = 0.0;
  for (const auto& p : rep.points)
    worst = std::max(worst, std::abs(p.set->purity - p.qst->purity));
  rep.summary["max_abs_delta_purity"] = worst;
  rep.curve = {{0.5, 0.5}, {1.0, 1.0}};
  rep.notes.push_back("curve: y = x");
  return rep;
}

ExperimentReport run_angle_scan(const ExperimentSpec& spec) {
  spec.validate();
  const auto jobs = jobs_for(spec.sweep.size(), spec.replicates);
  std::vector<ReportPoint> slots(jobs.size());
  run_tasks(jobs.size(), spec.threads, [&](std::size_t i) {
    const double theta = spec.sweep[jobs[i].point];
    const auto acq = set_for(spec, jobs[i].point, jobs[i].replicate);
    const auto stim = simulate_set_scan(spec.source, theta, spec.distortion,
                                        PdlConfig{}, acq);
    SetAcquisitionConfig tomo = acq;
    tomo.seed_rng = splitmix(acq.seed_rng ^ 0x7365656475ull);
    const auto seeds =
        simulate_seed_tomography(spec.distortion, PdlConfig{}, tomo, theta);
    const auto res = reconstruct_set(stim, seeds, spec.fit);
    // Envelope: coupled H seed power times the H-seeded idler power.
    double seed_h = 0.0, stim_h = 0.0;
    for (const auto& r : stim) {
      if (r.setting.signal != PolLabel::H || r.setting.idler != PolLabel::H) continue;
      if (r.kind == RecordKind::SeedIntensity) seed_h += r.value;
      if (r.kind == RecordKind::SetIntensity) stim_h += r.value;
    }
    ReportPoint& pt = slots[i];
    pt.value = theta;
    pt.replicate = jobs[i].replicate;
    pt.truth = compute_metrics(true_state(spec.source, theta));
    pt.set = res.metrics;
    pt.skip_reason = "QST integrates over angle; no per-angle QST point";
    pt.extra["envelope"] = seed_h * stim_h;
    pt.extra["set_converged"] = res.converged ? 1.0 : 0.0;
  });
  sort_points(slots);

  ExperimentReport rep;
  rep.name = "angle_scan";
  rep.parameter = "theta_mrad";
  rep.points = std::move(slots);
  std::vector<double> x, raw, env;
  for (const auto& p : rep.points) {
    x.push_back(p.value);
    raw.push_back(p.set->phase_hh_vv);
    env.push_back(p.extra.at("envelope"));
  }
  const auto phase = unwrap_phases(raw);
  for (std::size_t i = 0; i < rep.points.size(); ++i)
    rep.points[i].extra["unwrapped_phase"] = phase[i];
  const auto line = fit_line(x, phase, spec.weighted_slope_fit ? env : std::vector<double>{});
  rep.summary["slope"] = line.slope;
  rep.summary["intercept"] = line.intercept;
  rep.summary["injected_slope"] = spec.source.phase_slope;
  try {
    rep.summary["envelope_sigma_mrad"] = gaussian_width(x, env);
  } catch (const NumericalError& e) {
    rep.notes.push_back(std::string("envelope fit skipped: ") + e.what());
  }
  rep.summary["expected_envelope_sigma_mrad"] = effective_sigma_mrad(spec.source);
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  for (int k = 0; k <= 50; ++k) {
    const double t = *lo + (*hi - *lo) * k / 50.0;
    rep.curve.push_back({t, line.slope * t + line.intercept});
  }
  rep.notes.push_back(spec.weighted_slope_fit ? "phase fit weighted by envelope"
                                              : "phase fit unweighted");
  return rep;
}

ExperimentReport run_pdl_demo(const ExperimentSpec& spec) {
  spec.validate();
  const auto jobs = jobs_for(spec.pdl_cases.size(), spec.replicates);
  std::vector<ReportPoint> slots(jobs.size());
  run_tasks(jobs.size(), spec.threads, [&](std::size_t i) {
    const auto& c = spec.pdl_cases[jobs[i].point];
    const auto pdl = c.to_config();
    slots[i] = compare_point(spec, spec.source, pdl, jobs[i].point, jobs[i].replicate);
    slots[i].value = static_cast<double>(jobs[i].point);
    slots[i].label = c.label;
    slots[i].extra["signal_ratio_hv"] = pdl.signal_ratio_hv();
    slots[i].extra["idler_ratio_hv"] = pdl.idler_ratio_hv();
    slots[i].extra["set_minus_truth_concurrence"] =
        slots[i].set->concurrence - slots[i].truth->concurrence;
    slots[i].extra["qst_minus_truth_concurrence"] =
        slots[i].qst->concurrence - slots[i].truth->concurrence;
  });
  sort_points(slots);
  ExperimentReport rep;
  rep.name = "pdl_demo";
  rep.parameter = "case";
  rep.points = std::move(slots);
  for (std::size_t k = 0; k < spec.pdl_cases.size(); ++k) {
    std::vector<double> set_c, qst_c;
    for (const auto& p : rep.points)
      if (p.value == static_cast<double>(k)) {
        set_c.push_back(p.set->concurrence);
        qst_c.push_back(p.qst->concurrence);
      }
    const auto& label = spec.pdl_cases[k].label;
    rep.summary["median_set_concurrence_" + label] = median(set_c);
    rep.summary["median_qst_concurrence_" + label] = median(qst_c);
    rep.notes.push_back("case " + std::to_string(k) + ": " + label);
  }
  rep.summary["truth_concurrence"] =
      concurrence(true_state(spec.source, spec.set_theta_mrad));
  return rep;
}

ExperimentReport run_angle_average(const ExperimentSpec& spec) {
  spec.validate();
  const double half = spec.source.collection_halfwidth_mrad;
  const auto jobs = jobs_for(spec.sweep.size(), spec.replicates);
  std::vector<ReportPoint> slots(jobs.size());
  run_tasks(jobs.size(), spec.threads, [&](std::size_t i) {
    const std::size_t p = jobs[i].point;
    const int r = jobs[i].replicate;
    const int n = static_cast<int>(spec.sweep[p]);
    const auto q = qst_pipeline(spec.source, qst_for(spec, p, r), spec.fit);
    const auto rule = gauss_legendre(n, -half, half);
    ComplexMatrix avg(4);
    double wsum = 0.0;
    bool converged = true;
    for (int k = 0; k < n; ++k) {
      auto acq = set_for(spec, p, r);
      acq.seed_rng = derive_seed(acq.seed_rng, static_cast<std::size_t>(k), 0, 2);
      const double theta = rule.nodes[k];
      const auto s = set_pipeline(spec.source, theta, spec.distortion, PdlConfig{},
                                  acq, spec.fit);
      const double w = rule.weights[k] * angular_weight(spec.source, theta);
      avg += s.rho.matrix() * Complex(w);
      wsum += w;
      converged = converged && s.converged;
    }
    if (!(wsum > 0)) throw NumericalError("angle_average: zero total angular weight");
    const auto averaged = DensityMatrix::normalized(avg * Complex(1.0 / wsum));
    ReportPoint& pt = slots[i];
    pt.value = n;
    pt.replicate = r;
    pt.truth = compute_metrics(angle_averaged_state(spec.source));
    pt.qst = q.metrics;
    pt.set = compute_metrics(averaged);
    pt.extra["fidelity_average_vs_qst"] = fidelity(averaged, q.rho);
    pt.extra["set_converged"] = converged ? 1.0 : 0.0;
  });
  sort_points(slots);
  ExperimentReport rep;
  rep.name = "angle_average";
  rep.parameter = "grid_size";
  rep.points = std::move(slots);
  for (const auto& [n, f] : per_value_median(rep.points, [](const ReportPoint& p) {
         return p.extra.at("fidelity_average_vs_qst");
       }))
    rep.summary["median_fidelity_grid_" + std::to_string(static_cast<int>(n))] = f;
  rep.notes.push_back("SET matrices weighted by quadrature weight times angular weight");
  return rep;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::BellCompare: return run_bell_compare(spec);
    case ExperimentKind::ConcurrenceSweep: return run_concurrence_sweep(spec);
    case ExperimentKind::PuritySweep: return run_purity_sweep(spec);
    case ExperimentKind::AngleScan: return run_angle_scan(spec);
    case ExperimentKind::PdlDemo: return run_pdl_demo(spec);
    case ExperimentKind::AngleAverage: return run_angle_average(spec);
  }
  throw ConfigError("name: unknown experiment");
}

}  // namespace stimtomo
