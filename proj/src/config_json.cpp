#include "fame/config_json.hpp"

#include "fame/error.hpp"
#include "fame/text.hpp"

namespace fame {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* key : known)
      if (it.key() == key) {
        ok = true;
        break;
      }
    if (!ok)
      throw Error(ErrorKind::Config, std::string(what) + ": unknown key '" +
                                         it.key() + "'");
  }
}

template <typename T>
void read_if_present(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

nlohmann::json to_json(const FopConfig& c) {
  return {{"d_face", c.d_face},
          {"d_voice", c.d_voice},
          {"proj_dim", c.proj_dim},
          {"n_classes", c.n_classes},
          {"alpha", c.alpha},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"seed", c.seed}};
}

FopConfig fop_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"d_face", "d_voice", "proj_dim", "n_classes", "alpha",
                       "learning_rate", "epochs", "seed"},
                      "fop config");
  FopConfig c;
  read_if_present(j, "d_face", c.d_face);
  read_if_present(j, "d_voice", c.d_voice);
  read_if_present(j, "proj_dim", c.proj_dim);
  read_if_present(j, "n_classes", c.n_classes);
  read_if_present(j, "alpha", c.alpha);
  read_if_present(j, "learning_rate", c.learning_rate);
  read_if_present(j, "epochs", c.epochs);
  read_if_present(j, "seed", c.seed);
  return c;
}

nlohmann::json to_json(const SynthConfig& c) {
  return {{"n_speakers", c.n_speakers},
          {"languages", {c.languages[0], c.languages[1]}},
          {"d_face", c.d_face},
          {"d_voice", c.d_voice},
          {"language_shift", c.language_shift},
          {"noise_sigma", c.noise_sigma},
          {"utterances_per_speaker_per_language",
           c.utterances_per_speaker_per_language},
          {"faces_per_speaker_per_language", c.faces_per_speaker_per_language},
          {"n_train_speakers", c.n_train_speakers},
          {"n_test_speakers", c.n_test_speakers},
          {"n_trials_per_language", c.n_trials_per_language},
          {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(
      j,
      {"n_speakers", "languages", "d_face", "d_voice", "language_shift",
       "noise_sigma", "utterances_per_speaker_per_language",
       "faces_per_speaker_per_language", "n_train_speakers",
       "n_test_speakers", "n_trials_per_language", "seed"},
      "synth config");
  SynthConfig c;
  read_if_present(j, "n_speakers", c.n_speakers);
  if (auto it = j.find("languages"); it != j.end()) {
    if (!it->is_array() || it->size() != 2)
      throw Error(ErrorKind::Config, "languages must be a pair");
    c.languages = {it->at(0).get<std::string>(), it->at(1).get<std::string>()};
  }
  read_if_present(j, "d_face", c.d_face);
  read_if_present(j, "d_voice", c.d_voice);
  read_if_present(j, "language_shift", c.language_shift);
  read_if_present(j, "noise_sigma", c.noise_sigma);
  read_if_present(j, "utterances_per_speaker_per_language",
                  c.utterances_per_speaker_per_language);
  read_if_present(j, "faces_per_speaker_per_language",
                  c.faces_per_speaker_per_language);
  read_if_present(j, "n_train_speakers", c.n_train_speakers);
  read_if_present(j, "n_test_speakers", c.n_test_speakers);
  read_if_present(j, "n_trials_per_language", c.n_trials_per_language);
  read_if_present(j, "seed", c.seed);
  return c;
}

nlohmann::json to_json(const EerResult& result) {
  return {{"eer", result.eer},
          {"eer_4dp", format_percent_4dp(result.eer)},
          {"eer_display", format_percent_display(result.eer)},
          {"threshold", result.threshold}};
}

nlohmann::json to_json(const BundleReport& report) {
  json configs = json::array();
  for (const ConfigScore& c : report.configs) {
    json entry = to_json(c.eer);
    entry["configuration"] = config_name(c.key);
    entry["language"] = c.key.language;
    entry["condition"] = std::string(to_string(c.key.condition));
    configs.push_back(std::move(entry));
  }
  return {{"configurations", std::move(configs)},
          {"overall", report.overall},
          {"overall_display", format_percent_display(report.overall)},
          {"warnings", report.warnings}};
}

nlohmann::json to_json(const ValidationReport& report) {
  return {{"ok", report.ok},
          {"errors", report.errors},
          {"warnings", report.warnings}};
}

nlohmann::json to_json(const ConfigurationGrid& grid) {
  json entries = json::array();
  for (const GridEntry& e : grid.entries) {
    json entry = to_json(e.result);
    entry["train_language"] = e.train_language;
    entry["test_language"] = e.test_language;
    entries.push_back(std::move(entry));
  }
  return {{"languages", {grid.languages[0], grid.languages[1]}},
          {"entries", std::move(entries)}};
}

FopConfig load_fop_config(const std::filesystem::path& path) {
  return fop_config_from_json(nlohmann::json::parse(read_file(path)));
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  return synth_config_from_json(nlohmann::json::parse(read_file(path)));
}

}  // namespace fame
