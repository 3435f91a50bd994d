#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stimtomo/acceptance.hpp"
#include "stimtomo/acquisition.hpp"
#include "stimtomo/experiments.hpp"
#include "stimtomo/reconstruction.hpp"
#include "stimtomo/source.hpp"

namespace stimtomo {

using Json = nlohmann::ordered_json;

// Parsing is strict: unknown keys and wrongly typed values raise ConfigError
// naming the key path. Missing keys keep the value already in `base`.

Json to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const Json& j);

Json to_json(const SourceConfig& cfg);
/// Without collection_halfwidth_mrad but with waist_qst_um, the half-width is
/// derived from the waist and wavelength.
SourceConfig source_from_json(const Json& j, SourceConfig base = {});

Json to_json(const SeedDistortion& d);
SeedDistortion distortion_from_json(const Json& j, SeedDistortion base = {});

Json to_json(const PdlConfig& p);
PdlConfig pdl_from_json(const Json& j, PdlConfig base = {});

Json to_json(const QstAcquisitionConfig& c);
QstAcquisitionConfig qst_config_from_json(const Json& j, QstAcquisitionConfig base = {});

Json to_json(const SetAcquisitionConfig& c);
SetAcquisitionConfig set_config_from_json(const Json& j, SetAcquisitionConfig base = {});

Json to_json(const FitOptions& f);
FitOptions fit_options_from_json(const Json& j, FitOptions base = {});

Json to_json(const Metrics& m);
Json to_json(const ReconstructionResult& r);

Json to_json(const ExperimentSpec& s);
/// Starts from default_spec of the named experiment.
ExperimentSpec experiment_spec_from_json(const Json& j);

Json to_json(const ExperimentReport& r);
Json to_json(const std::vector<CriterionResult>& results);

/// Flat per-point table: value, label, replicate, the three metric groups,
/// every extra key, skip_reason.
std::string report_csv(const ExperimentReport& r);

/// Header `kind,signal,idler,port,value,theta_mrad,rng_seed`.
std::string records_csv(std::span<const MeasurementRecord> records);
/// Throws DataError with the 1-based line number on malformed rows.
std::vector<MeasurementRecord> parse_records_csv(const std::string& text);

/// Reads a whole file; throws ConfigError naming the path if it cannot.
std::string read_file(const std::string& path);
/// Throws ConfigError naming the path if it cannot be written.
void write_file(const std::string& path, const std::string& content);
/// Parses JSON text; syntax errors become ConfigError with `what` as context.
Json parse_json(const std::string& text, const std::string& what);

/// Fixed formatting for reports: %.17g, with -0 printed as 0.
std::string format_number(double x);

}  // namespace stimtomo
