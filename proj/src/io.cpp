#include "stimtomo/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "stimtomo/error.hpp"

namespace stimtomo {

namespace {

// Tracks which keys were read so leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "expected a JSON object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key);
  }

  const Json& raw(const std::string& key) {
    known_.insert(key);
    return j_.at(key);
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void get(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) bad(key, "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) bad(key, "must be finite");
  }

  void get(const std::string& key, int& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) bad(key, "expected an integer");
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
      bad(key, "out of range");
    out = static_cast<int>(x);
  }

  void get(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned()) bad(key, "expected a nonnegative integer");
    out = v.get<std::uint64_t>();
  }

  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) bad(key, "expected true or false");
    out = v.get<bool>();
  }

  void get(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) bad(key, "expected a string");
    out = v.get<std::string>();
  }

  void get(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) bad(key, "expected an array of numbers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number()) bad(key, "expected an array of numbers");
      out.push_back(x.get<double>());
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!known_.count(k)) throw ConfigError(field(k) + ": unknown field");
  }

  [[noreturn]] void bad(const std::string& key, const std::string& what) const {
    throw ConfigError(field(key) + ": " + what);
  }

 private:
  std::string where() const { return path_.empty() ? "" : path_ + ": "; }

  const Json& j_;
  std::string path_;
  std::set<std::string> known_;
};

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

SourceConfig source_at(const Json& j, SourceConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("alpha_sq", c.alpha_sq);
  r.get("phase0", c.phase0);
  r.get("decoherence", c.decoherence);
  r.get("phase_slope", c.phase_slope);
  r.get("emission_sigma_mrad", c.emission_sigma_mrad);
  const bool has_width = r.has("collection_halfwidth_mrad");
  r.get("collection_halfwidth_mrad", c.collection_halfwidth_mrad);
  r.get("wavelength_nm", c.wavelength_nm);
  const bool has_waist = r.has("waist_qst_um");
  r.get("waist_qst_um", c.waist_qst_um);
  r.get("waist_seed_um", c.waist_seed_um);
  r.get("quadrature_nodes", c.quadrature_nodes);
  r.finish();
  if (!has_width && has_waist) {
    if (!(c.waist_qst_um > 0.0 && c.wavelength_nm > 0.0))
      r.bad("waist_qst_um", "must be positive");
    c.collection_halfwidth_mrad =
        collection_halfwidth_from_waist(c.wavelength_nm, c.waist_qst_um);
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.empty() ? e.what() : path + "." + e.what());
  }
  return c;
}

SeedDistortion distortion_at(const Json& j, SeedDistortion d, const std::string& path) {
  Reader r(j, path);
  r.get("birefringent_phase", d.birefringent_phase);
  r.get("amp_ratio", d.amp_ratio);
  r.finish();
  try {
    d.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.empty() ? e.what() : path + "." + e.what());
  }
  return d;
}

std::array<double, 2> pair_at(Reader& r, const std::string& key,
                              std::array<double, 2> base) {
  if (!r.has(key)) return base;
  std::vector<double> v;
  r.get(key, v);
  if (v.size() != 2) r.bad(key, "expected [t_H, t_V]");
  return {v[0], v[1]};
}

PdlConfig pdl_at(const Json& j, PdlConfig p, const std::string& path) {
  Reader r(j, path);
  p.signal_loss_hv = pair_at(r, "signal_loss_hv", p.signal_loss_hv);
  p.idler_loss_hv = pair_at(r, "idler_loss_hv", p.idler_loss_hv);
  r.finish();
  p.validate();
  return p;
}

QstAcquisitionConfig qst_at(const Json& j, QstAcquisitionConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("pair_rate_hz", c.pair_rate_hz);
  r.get("integration_s", c.integration_s);
  r.get("efficiency_pair", c.efficiency_pair);
  r.get("seed_rng", c.seed_rng);
  r.get("expectation_only", c.expectation_only);
  r.get("background_counts", c.background_counts);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.empty() ? e.what() : path + "." + e.what());
  }
  return c;
}

SetAcquisitionConfig set_at(const Json& j, SetAcquisitionConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("coupling_signal", c.coupling_signal);
  r.get("coupling_idler", c.coupling_idler);
  r.get("intensity_noise_rel", c.intensity_noise_rel);
  r.get("seed_rng", c.seed_rng);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.empty() ? e.what() : path + "." + e.what());
  }
  return c;
}

std::string init_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::LinearInversion: return "linear_inversion";
    case InitStrategy::Mixed: return "mixed";
    case InitStrategy::Random: return "random";
  }
  return "?";
}

FitOptions fit_at(const Json& j, FitOptions f, const std::string& path) {
  Reader r(j, path);
  r.get("max_iterations", f.max_iterations);
  r.get("gradient_tolerance", f.gradient_tolerance);
  r.get("restarts", f.restarts);
  r.get("seed", f.seed);
  std::string init = init_name(f.init);
  r.get("init", init);
  if (init == "linear_inversion") f.init = InitStrategy::LinearInversion;
  else if (init == "mixed") f.init = InitStrategy::Mixed;
  else if (init == "random") f.init = InitStrategy::Random;
  else r.bad("init", "expected linear_inversion, mixed or random");
  std::string weighting = f.weighting == Weighting::None ? "none" : "inverse_variance";
  r.get("weighting", weighting);
  if (weighting == "none") f.weighting = Weighting::None;
  else if (weighting == "inverse_variance") f.weighting = Weighting::InverseVariance;
  else r.bad("weighting", "expected none or inverse_variance");
  int settings = f.settings == SettingsSubset::All36 ? 36 : 16;
  r.get("settings", settings);
  if (settings == 36) f.settings = SettingsSubset::All36;
  else if (settings == 16) f.settings = SettingsSubset::Minimal16;
  else r.bad("settings", "expected 16 or 36");
  r.finish();
  try {
    f.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.empty() ? e.what() : path + "." + e.what());
  }
  return f;
}

Json optional_metrics(const std::optional<Metrics>& m) {
  return m ? to_json(*m) : Json(nullptr);
}

void put_number(std::ostringstream& os, double x) { os << format_number(x); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void row_error(std::size_t line, const std::string& what) {
  throw DataError("records CSV line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
  double x = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, x);
  if (s.empty() || ec != std::errc() || p != end || !std::isfinite(x))
    row_error(line, std::string(column) + " '" + s + "' is not a finite number");
  return x;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line) {
  std::uint64_t x = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, x);
  if (s.empty() || ec != std::errc() || p != end)
    row_error(line, "rng_seed '" + s + "' is not an unsigned integer");
  return x;
}

PolLabel parse_label(const std::string& s, std::size_t line, const char* column) {
  if (s.size() != 1) row_error(line, std::string(column) + " '" + s + "' is not a label");
  try {
    return label_from_char(s[0]);
  } catch (const DataError&) {
    row_error(line, std::string(column) + " '" + s + "' is not a label");
  }
}

constexpr const char* kRecordsHeader = "kind,signal,idler,port,value,theta_mrad,rng_seed";

}  // namespace

std::string format_number(double x) {
  if (x == 0.0) return "0";
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  // Shortest representation that reads back to the same double.
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

Json to_json(const DensityMatrix& rho) {
  Json re = Json::array(), im = Json::array();
  for (int r = 0; r < rho.dim(); ++r) {
    Json rr = Json::array(), ii = Json::array();
    for (int c = 0; c < rho.dim(); ++c) {
      rr.push_back(rho(r, c).real() + 0.0);
      ii.push_back(rho(r, c).imag() + 0.0);
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return Json{{"dim", rho.dim()}, {"re", re}, {"im", im}};
}

DensityMatrix density_from_json(const Json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    if (dim != 2 && dim != 4) throw DataError("density matrix: dim must be 2 or 4");
    ComplexMatrix m(dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c)
        m(r, c) = Complex(j.at("re").at(r).at(c).get<double>(),
                          j.at("im").at(r).at(c).get<double>());
    return DensityMatrix::from_matrix(m);
  } catch (const Json::exception& e) {
    throw DataError(std::string("density matrix: ") + e.what());
  }
}

Json to_json(const SourceConfig& c) {
  return Json{{"alpha_sq", c.alpha_sq},
              {"phase0", c.phase0},
              {"decoherence", c.decoherence},
              {"phase_slope", c.phase_slope},
              {"emission_sigma_mrad", c.emission_sigma_mrad},
              {"collection_halfwidth_mrad", c.collection_halfwidth_mrad},
              {"wavelength_nm", c.wavelength_nm},
              {"waist_qst_um", c.waist_qst_um},
              {"waist_seed_um", c.waist_seed_um},
              {"quadrature_nodes", c.quadrature_nodes}};
}

SourceConfig source_from_json(const Json& j, SourceConfig base) {
  return source_at(j, base, "");
}

Json to_json(const SeedDistortion& d) {
  return Json{{"birefringent_phase", d.birefringent_phase}, {"amp_ratio", d.amp_ratio}};
}

SeedDistortion distortion_from_json(const Json& j, SeedDistortion base) {
  return distortion_at(j, base, "");
}

Json to_json(const PdlConfig& p) {
  return Json{{"signal_loss_hv", {p.signal_loss_hv[0], p.signal_loss_hv[1]}},
              {"idler_loss_hv", {p.idler_loss_hv[0], p.idler_loss_hv[1]}}};
}

PdlConfig pdl_from_json(const Json& j, PdlConfig base) { return pdl_at(j, base, ""); }

Json to_json(const QstAcquisitionConfig& c) {
  return Json{{"pair_rate_hz", c.pair_rate_hz},
              {"integration_s", c.integration_s},
              {"efficiency_pair", c.efficiency_pair},
              {"seed_rng", c.seed_rng},
              {"expectation_only", c.expectation_only},
              {"background_counts", c.background_counts}};
}

QstAcquisitionConfig qst_config_from_json(const Json& j, QstAcquisitionConfig base) {
  return qst_at(j, base, "");
}

Json to_json(const SetAcquisitionConfig& c) {
  return Json{{"coupling_signal", c.coupling_signal},
              {"coupling_idler", c.coupling_idler},
              {"intensity_noise_rel", c.intensity_noise_rel},
              {"seed_rng", c.seed_rng}};
}

SetAcquisitionConfig set_config_from_json(const Json& j, SetAcquisitionConfig base) {
  return set_at(j, base, "");
}

Json to_json(const FitOptions& f) {
  return Json{{"max_iterations", f.max_iterations},
              {"gradient_tolerance", f.gradient_tolerance},
              {"restarts", f.restarts},
              {"init", init_name(f.init)},
              {"weighting", f.weighting == Weighting::None ? "none" : "inverse_variance"},
              {"settings", f.settings == SettingsSubset::All36 ? 36 : 16},
              {"seed", f.seed}};
}

FitOptions fit_options_from_json(const Json& j, FitOptions base) {
  return fit_at(j, base, "");
}

Json to_json(const Metrics& m) {
  return Json{{"purity", m.purity},
              {"concurrence", m.concurrence},
              {"fidelity_vs_bell", m.fidelity_vs_bell},
              {"phase_hh_vv", m.phase_hh_vv}};
}

Json to_json(const ReconstructionResult& r) {
  Json audit = Json::array();
  for (const auto& a : r.audit) {
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(a.operator_hash));
    audit.push_back(Json{{"setting", std::string{to_char(a.setting.signal), to_char(a.setting.idler)}},
                         {"probability", a.probability},
                         {"operator_hash", hash}});
  }
  return Json{{"rho", to_json(r.rho)},
              {"metrics", to_json(r.metrics)},
              {"residual", r.residual},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"best_start", r.best_start},
              {"rotated_operators", r.rotated_operators},
              {"audit", audit},
              {"provenance", r.provenance}};
}

Json to_json(const ExperimentSpec& s) {
  Json cases = Json::array();
  for (const auto& c : s.pdl_cases)
    cases.push_back(Json{{"label", c.label},
                         {"signal_ratio_hv", c.signal_ratio_hv},
                         {"idler_ratio_hv", c.idler_ratio_hv}});
  return Json{{"name", to_string(s.kind)},
              {"source", to_json(s.source)},
              {"qst", to_json(s.qst)},
              {"set", to_json(s.set)},
              {"distortion", to_json(s.distortion)},
              {"fit", to_json(s.fit)},
              {"sweep", s.sweep},
              {"replicates", s.replicates},
              {"noise", s.noise},
              {"set_theta_mrad", s.set_theta_mrad},
              {"weighted_slope_fit", s.weighted_slope_fit},
              {"pdl_cases", cases},
              {"seed", s.seed},
              {"threads", s.threads}};
}

ExperimentSpec experiment_spec_from_json(const Json& j) {
  Reader r(j, "");
  std::string name;
  r.get("name", name);
  if (name.empty()) r.bad("name", "missing experiment name");
  ExperimentSpec s = default_spec(experiment_kind_from_string(name));
  if (r.has("source")) s.source = source_at(r.raw("source"), s.source, "source");
  if (r.has("qst")) s.qst = qst_at(r.raw("qst"), s.qst, "qst");
  if (r.has("set")) s.set = set_at(r.raw("set"), s.set, "set");
  if (r.has("distortion"))
    s.distortion = distortion_at(r.raw("distortion"), s.distortion, "distortion");
  if (r.has("fit")) s.fit = fit_at(r.raw("fit"), s.fit, "fit");
  r.get("sweep", s.sweep);
  r.get("replicates", s.replicates);
  r.get("noise", s.noise);
  r.get("set_theta_mrad", s.set_theta_mrad);
  r.get("weighted_slope_fit", s.weighted_slope_fit);
  r.get("seed", s.seed);
  r.get("threads", s.threads);
  if (r.has("pdl_cases")) {
    const Json& arr = r.raw("pdl_cases");
    if (!arr.is_array()) r.bad("pdl_cases", "expected an array");
    s.pdl_cases.clear();
    for (std::size_t k = 0; k < arr.size(); ++k) {
      Reader c(arr[k], join("pdl_cases", std::to_string(k)));
      PdlCase pc;
      c.get("label", pc.label);
      c.get("signal_ratio_hv", pc.signal_ratio_hv);
      c.get("idler_ratio_hv", pc.idler_ratio_hv);
      c.finish();
      if (pc.label.empty()) pc.label = "case" + std::to_string(k);
      s.pdl_cases.push_back(pc);
    }
  }
  r.finish();
  s.validate();
  return s;
}

Json to_json(const ExperimentReport& r) {
  Json points = Json::array();
  for (const auto& p : r.points) {
    Json extra = Json::object();
    for (const auto& [k, v] : p.extra) extra[k] = v;
    Json jp{{"value", p.value}, {"replicate", p.replicate}};
    if (!p.label.empty()) jp["label"] = p.label;
    jp["truth"] = optional_metrics(p.truth);
    jp["qst"] = optional_metrics(p.qst);
    jp["set"] = optional_metrics(p.set);
    jp["extra"] = extra;
    if (!p.skip_reason.empty()) jp["skip_reason"] = p.skip_reason;
    points.push_back(jp);
  }
  Json summary = Json::object();
  for (const auto& [k, v] : r.summary) summary[k] = v;
  Json curve = Json::array();
  for (const auto& c : r.curve) curve.push_back({c.x, c.y});
  return Json{{"name", r.name},
              {"parameter", r.parameter},
              {"summary", summary},
              {"points", points},
              {"curve", curve},
              {"notes", r.notes}};
}

Json to_json(const std::vector<CriterionResult>& results) {
  Json arr = Json::array();
  bool all = true;
  for (const auto& c : results) {
    arr.push_back(Json{{"id", c.id}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    all = all && c.passed;
  }
  return Json{{"all_passed", all}, {"criteria", arr}};
}

std::string report_csv(const ExperimentReport& r) {
  std::set<std::string> extra_keys;
  for (const auto& p : r.points)
    for (const auto& [k, v] : p.extra) extra_keys.insert(k);
  std::ostringstream os;
  os << r.parameter << ",label,replicate";
  for (const char* group : {"truth", "qst", "set"})
    for (const char* m : {"purity", "concurrence", "fidelity_vs_bell", "phase_hh_vv"})
      os << ',' << group << '_' << m;
  for (const auto& k : extra_keys) os << ',' << k;
  os << ",skip_reason\n";
  for (const auto& p : r.points) {
    put_number(os, p.value);
    os << ',' << p.label << ',' << p.replicate;
    for (const auto* m : {&p.truth, &p.qst, &p.set}) {
      for (int k = 0; k < 4; ++k) {
        os << ',';
        if (!*m) continue;
        const Metrics& x = **m;
        put_number(os, k == 0 ? x.purity : k == 1 ? x.concurrence
                       : k == 2 ? x.fidelity_vs_bell : x.phase_hh_vv);
      }
    }
    for (const auto& k : extra_keys) {
      os << ',';
      if (auto it = p.extra.find(k); it != p.extra.end()) put_number(os, it->second);
    }
    std::string reason = p.skip_reason;
    for (char& c : reason)
      if (c == ',' || c == '\n') c = ';';
    os << ',' << reason << '\n';
  }
  return os.str();
}

std::string records_csv(std::span<const MeasurementRecord> records) {
  std::ostringstream os;
  os << kRecordsHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.kind) << ',' << to_char(r.setting.signal) << ','
       << to_char(r.setting.idler) << ',' << to_string(r.port) << ','
       << format_number(r.value) << ',' << format_number(r.theta_mrad) << ','
       << r.rng_seed << '\n';
  }
  return os.str();
}

std::vector<MeasurementRecord> parse_records_csv(const std::string& text) {
  std::vector<MeasurementRecord> out;
  std::istringstream is(text);
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (line != kRecordsHeader)
        row_error(n, std::string("expected header '") + kRecordsHeader + "'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7)
      row_error(n, "expected 7 columns, found " + std::to_string(f.size()));
    MeasurementRecord r{};
    try {
      r.kind = record_kind_from_string(f[0]);
      r.port = port_from_string(f[3]);
    } catch (const DataError& e) {
      row_error(n, e.what());
    }
    r.setting = {parse_label(f[1], n, "signal"), parse_label(f[2], n, "idler")};
    r.value = parse_double(f[4], n, "value");
    if (r.value < 0.0) row_error(n, "value must be nonnegative");
    r.theta_mrad = parse_double(f[5], n, "theta_mrad");
    r.rng_seed = parse_u64(f[6], n);
    out.push_back(r);
  }
  if (!header) throw DataError("records CSV line 1: empty file");
  if (out.empty()) throw DataError("records CSV: no data rows");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(path + ": cannot write file");
  out << content;
  if (!out) throw ConfigError(path + ": write failed");
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(what + ": invalid JSON (" + e.what() + ")");
  }
}

}  // namespace stimtomo
