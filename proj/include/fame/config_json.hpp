#pragma once

#include <json.hpp>

#include "fame/fop.hpp"
#include "fame/submission.hpp"
#include "fame/synth.hpp"

namespace fame {

// JSON forms of the toolkit configs and reports. Unknown keys are
// rejected so typos in config files fail loudly.

nlohmann::json to_json(const FopConfig& config);
FopConfig fop_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EerResult& result);
nlohmann::json to_json(const BundleReport& report);
nlohmann::json to_json(const ValidationReport& report);
nlohmann::json to_json(const ConfigurationGrid& grid);

FopConfig load_fop_config(const std::filesystem::path& path);
SynthConfig load_synth_config(const std::filesystem::path& path);

}  // namespace fame
