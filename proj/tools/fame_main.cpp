// fame: command-line front end for the face-voice association challenge
// toolkit. Subcommands: validate, score, eer, synth, train, grid, serve.
// Exit status: 0 success, 1 validation failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "fame/config_json.hpp"
#include "fame/error.hpp"
#include "fame/fop.hpp"
#include "fame/metrics.hpp"
#include "fame/service.hpp"
#include "fame/service_http.hpp"
#include "fame/submission.hpp"
#include "fame/synth.hpp"
#include "fame/text.hpp"
#include "fame/trial_data.hpp"
#include "fame/zip.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct KeysOptions {
  std::string keys_dir;
  std::string split = "V1-EU";
  std::string languages;  // "A,B" override
};

void add_keys_options(CLI::App* cmd, KeysOptions& opts, bool require_dir) {
  auto* dir = cmd->add_option("--keys", opts.keys_dir,
                              "Directory with trials_<Language>.txt and "
                              "truth_<Language>.txt files");
  if (require_dir) dir->required();
  cmd->add_option("--split", opts.split,
                  "Split preset naming the language pair (V1-EU, V3-EG)");
  cmd->add_option("--languages", opts.languages,
                  "Explicit language pair, e.g. English,German "
                  "(overrides --split)");
}

fame::BundleLayout layout_for(const KeysOptions& opts) {
  if (!opts.languages.empty()) {
    auto comma = opts.languages.find(',');
    if (comma == std::string::npos || comma == 0 ||
        comma + 1 == opts.languages.size())
      throw fame::Error(fame::ErrorKind::Config,
                        "--languages expects two comma-separated names");
    return fame::BundleLayout::for_languages(
        opts.languages.substr(0, comma), opts.languages.substr(comma + 1));
  }
  return fame::BundleLayout::for_split(fame::split_preset(opts.split));
}

fs::path trials_path(const fs::path& dir, const std::string& language) {
  return dir / ("trials_" + language + ".txt");
}

fs::path truth_path(const fs::path& dir, const std::string& language) {
  return dir / ("truth_" + language + ".txt");
}

// Trial id sets only; ground-truth files stay untouched on this path.
fame::TrialIdSets load_id_sets(const fame::BundleLayout& layout,
                               const fs::path& dir) {
  std::array<std::set<fame::PairId>, 2> per_language;
  for (int l = 0; l < 2; ++l) {
    fame::TrialList list =
        fame::parse_trial_list(fame::read_file(trials_path(dir, layout.languages[l])),
                               layout.languages[l], fame::Condition::Heard);
    for (const fame::TrialPair& pair : list.pairs)
      per_language[l].insert(pair.id);
  }
  fame::TrialIdSets sets;
  for (const fame::ConfigKey& key : layout.configs()) {
    std::size_t l = key.language == layout.languages[0] ? 0 : 1;
    sets.entries.push_back({key, per_language[l]});
  }
  return sets;
}

fame::ScoringKeys load_keys(const fame::BundleLayout& layout,
                            const fs::path& dir) {
  std::array<std::pair<fame::TrialList, fame::GroundTruth>, 2> per_language;
  for (int l = 0; l < 2; ++l) {
    const std::string& language = layout.languages[l];
    per_language[l].first =
        fame::parse_trial_list(fame::read_file(trials_path(dir, language)),
                               language, fame::Condition::Heard);
    per_language[l].second =
        fame::parse_ground_truth(fame::read_file(truth_path(dir, language)));
  }
  return fame::make_scoring_keys(layout, per_language);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::string content = fame::read_file(path);
  return {content.begin(), content.end()};
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fame::write_file(path, std::string_view(
                             reinterpret_cast<const char*>(bytes.data()),
                             bytes.size()));
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------
// eer

int run_eer(const std::string& scores_file, const std::string& truth_file,
            bool as_json) {
  fame::ScoreFile scores = fame::parse_scores(fame::read_file(scores_file));
  fame::GroundTruth truth =
      fame::parse_ground_truth(fame::read_file(truth_file));
  fame::EerResult result = fame::compute_eer(scores, truth);
  std::size_t extra = 0;
  for (const auto& [id, value] : scores.scores)
    if (!truth.labels.contains(id)) ++extra;

  if (as_json) {
    json out = fame::to_json(result);
    out["extra_ids_ignored"] = extra;
    print_json(out);
  } else {
    std::cout << "EER " << fame::format_percent_4dp(result.eer) << "\n";
    std::cout << "EER_display " << fame::format_percent_display(result.eer)
              << "\n";
    std::cout << "threshold " << fame::format_double(result.threshold) << "\n";
    if (extra > 0)
      std::cout << "warning " << extra
                << " scored id(s) outside the trial set ignored\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

int run_validate(const std::string& bundle_file, const KeysOptions& keys_opts,
                 bool as_json) {
  fame::BundleLayout layout = layout_for(keys_opts);
  fame::TrialIdSets ids = load_id_sets(layout, keys_opts.keys_dir);
  std::vector<std::uint8_t> archive = read_bytes(bundle_file);
  fame::ValidationReport report = fame::validate_bundle(archive, layout, ids);

  if (as_json) {
    print_json(fame::to_json(report));
  } else {
    std::cout << (report.ok ? "ok\n" : "invalid\n");
    for (const std::string& e : report.errors)
      std::cout << "error " << e << "\n";
    for (const std::string& w : report.warnings)
      std::cout << "warning " << w << "\n";
  }
  return report.ok ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------
// score

int run_score(const std::string& bundle_file, const KeysOptions& keys_opts,
              bool as_json) {
  fame::BundleLayout layout = layout_for(keys_opts);
  fame::ScoringKeys keys = load_keys(layout, keys_opts.keys_dir);
  std::vector<std::uint8_t> archive = read_bytes(bundle_file);
  std::vector<std::string> warnings;
  fame::SubmissionBundle bundle = fame::open_bundle(archive, layout, &warnings);
  fame::BundleReport report = fame::score_bundle(bundle, keys);
  report.warnings.insert(report.warnings.begin(), warnings.begin(),
                         warnings.end());

  if (as_json)
    print_json(fame::to_json(report));
  else
    std::cout << fame::format_report(report);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

int run_synth(const std::string& config_file, const std::string& out_dir,
              std::optional<std::uint64_t> seed, bool as_json) {
  fame::SynthConfig config;
  if (!config_file.empty()) config = fame::load_synth_config(config_file);
  if (seed) config.seed = *seed;
  fame::SynthDataset dataset = fame::generate(config);

  fs::path dir(out_dir);
  fs::create_directories(dir);
  fame::write_file(dir / "embeddings.txt", fame::serialize(dataset.table));
  fame::write_file(dir / "synth_config.json",
                   fame::to_json(config).dump(2) + "\n");
  json split{{"languages", {config.languages[0], config.languages[1]}},
             {"train_speakers", dataset.train_speakers},
             {"test_speakers", dataset.test_speakers}};
  fame::write_file(dir / "split.json", split.dump(2) + "\n");
  for (const auto& [language, pair] : dataset.trials) {
    fame::write_file(trials_path(dir, language), fame::serialize(pair.first));
    fame::write_file(truth_path(dir, language), fame::serialize(pair.second));
  }

  json summary{{"out", dir.string()},
               {"speakers", config.n_speakers},
               {"train_speakers", dataset.train_speakers.size()},
               {"test_speakers", dataset.test_speakers.size()},
               {"embedding_rows", dataset.table.rows.size()},
               {"trials_per_language", config.n_trials_per_language},
               {"seed", config.seed}};
  if (as_json) {
    print_json(summary);
  } else {
    std::cout << "wrote synthetic dataset to " << dir.string() << "\n"
              << "speakers " << config.n_speakers << " (train "
              << dataset.train_speakers.size() << ", test "
              << dataset.test_speakers.size() << ")\n"
              << "embedding_rows " << dataset.table.rows.size() << "\n"
              << "trials_per_language " << config.n_trials_per_language
              << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

std::vector<std::string> split_speakers_from_json(const fs::path& path,
                                                  const char* key) {
  json j = json::parse(fame::read_file(path));
  return j.at(key).get<std::vector<std::string>>();
}

int run_train(const std::string& embeddings_file, const std::string& split_file,
              const std::string& language, const std::string& fop_config_file,
              const std::string& model_out, const std::string& trials_file,
              const std::string& scores_out, bool as_json) {
  fame::EmbeddingTable table =
      fame::parse_embedding_table(fame::read_file(embeddings_file));
  std::vector<std::string> train_speakers =
      split_speakers_from_json(split_file, "train_speakers");

  fame::FopConfig config;
  if (!fop_config_file.empty()) config = fame::load_fop_config(fop_config_file);
  config.d_face = table.d_face;
  config.d_voice = table.d_voice;
  config.n_classes = static_cast<int>(train_speakers.size());

  fame::Batch batch = fame::make_training_batch(table, train_speakers, language);
  fame::TrainResult result = fame::train(config, batch);
  fame::save_checkpoint(result.model, model_out);

  if (!trials_file.empty()) {
    if (scores_out.empty())
      throw fame::Error(fame::ErrorKind::Config,
                        "--scores-out is required with --trials");
    fame::TrialList trials =
        fame::parse_trial_list(fame::read_file(trials_file), language,
                               fame::Condition::Heard);
    fame::ScoreFile scores = fame::score_trials(result.model, trials, table);
    fame::write_file(scores_out, fame::serialize(scores));
  }

  const fame::LossBreakdown last =
      result.trace.empty() ? fame::LossBreakdown{0, 0, 0}
                           : result.trace.back();
  json summary{{"model_out", model_out},
               {"language", language},
               {"samples", batch.size()},
               {"n_classes", config.n_classes},
               {"epochs", config.epochs},
               {"final_loss",
                {{"ce", last.ce}, {"oc", last.oc}, {"total", last.total}}}};
  if (as_json) {
    print_json(summary);
  } else {
    std::cout << "trained on " << batch.size() << " " << language
              << " samples over " << config.n_classes << " identities\n"
              << "final_loss ce " << fame::format_double(last.ce) << " oc "
              << fame::format_double(last.oc) << " total "
              << fame::format_double(last.total) << "\n"
              << "checkpoint " << model_out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// grid

int run_grid(const std::string& synth_config_file,
             const std::string& fop_config_file,
             std::optional<std::uint64_t> seed, const std::string& bundle_out,
             const std::string& keys_out, bool as_json) {
  fame::SynthConfig synth_config;
  if (!synth_config_file.empty())
    synth_config = fame::load_synth_config(synth_config_file);
  if (seed) synth_config.seed = *seed;
  fame::FopConfig fop_config;
  if (!fop_config_file.empty())
    fop_config = fame::load_fop_config(fop_config_file);

  fame::SynthDataset dataset = fame::generate(synth_config);
  fame::GridResult result = fame::run_grid_experiment(dataset, fop_config);

  if (!keys_out.empty()) {
    fs::path dir(keys_out);
    fs::create_directories(dir);
    for (const auto& [language, pair] : dataset.trials) {
      fame::write_file(trials_path(dir, language), fame::serialize(pair.first));
      fame::write_file(truth_path(dir, language), fame::serialize(pair.second));
    }
  }
  if (!bundle_out.empty()) {
    fame::ZipWriter writer;
    for (const auto& [name, scores] : result.score_files)
      writer.add_text("sub_score_" + name + ".txt", fame::serialize(scores));
    write_bytes(bundle_out, writer.finish());
  }

  if (as_json) {
    json out = fame::to_json(result.grid);
    out["overall"] = result.overall;
    out["overall_display"] = fame::format_percent_display(result.overall);
    if (!bundle_out.empty()) out["bundle_out"] = bundle_out;
    if (!keys_out.empty()) out["keys_out"] = keys_out;
    print_json(out);
  } else {
    const auto& langs = result.grid.languages;
    std::cout << "EER (%), train rows x test columns\n";
    std::cout << "train\\test";
    for (const std::string& l : langs) std::cout << "\t" << l;
    std::cout << "\n";
    for (const std::string& train : langs) {
      std::cout << train;
      for (const std::string& test : langs)
        std::cout << "\t"
                  << fame::format_percent_display(
                         result.grid.at(train, test).eer);
      std::cout << "\n";
    }
    std::cout << "overall " << fame::format_percent_display(result.overall)
              << " (" << fame::format_double(result.overall) << ")\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// serve

fame::ServiceHttp* g_http = nullptr;

void handle_signal(int) {
  if (g_http) g_http->stop();
}

int run_serve(const std::string& config_file, std::optional<int> port_flag,
              const std::string& data_dir_flag) {
  json config = json::object();
  if (!config_file.empty())
    config = json::parse(fame::read_file(config_file));

  int port = config.value("port", 8080);
  std::string host = config.value("host", "127.0.0.1");
  std::string data_dir = config.value("data_dir", "fame-data");
  std::string admin_credential = config.value("admin_credential", "");
  if (const char* env = std::getenv("FAME_PORT")) port = std::atoi(env);
  if (const char* env = std::getenv("FAME_DATA_DIR")) data_dir = env;
  if (const char* env = std::getenv("FAME_ADMIN_CREDENTIAL"))
    admin_credential = env;
  if (port_flag) port = *port_flag;
  if (!data_dir_flag.empty()) data_dir = data_dir_flag;
  if (admin_credential.empty())
    throw fame::Error(fame::ErrorKind::Config,
                      "admin_credential must be set (config file or "
                      "FAME_ADMIN_CREDENTIAL)");

  fame::ChallengeService::Options options;
  options.data_dir = data_dir;
  options.admin_credential = admin_credential;
  fame::ChallengeService service(std::move(options));

  // Phase configs from the config file seed the in-memory defaults; any
  // phase records already journaled override them during replay, so a
  // restart never re-journals configuration.
  if (config.contains("phases"))
    for (const auto& [name, phase_json] : config["phases"].items()) {
      json body = phase_json;
      body["phase"] = name;
      service.set_phase_config(admin_credential,
                               fame::PhaseConfig::from_json(body));
    }

  fame::ServiceHttp http(service);
  g_http = &http;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "listening on " << host << ":" << port << std::endl;
  if (!http.listen(host, port))
    throw fame::Error(fame::ErrorKind::Io,
                      "cannot listen on " + host + ":" + std::to_string(port));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Face-voice association challenge toolkit"};
  app.require_subcommand(1);

  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable JSON output");

  // eer
  auto* eer = app.add_subcommand("eer", "Compute the EER of one score file");
  std::string scores_file, truth_file;
  eer->add_option("--scores", scores_file, "Score file")->required();
  eer->add_option("--truth", truth_file, "Ground-truth file")->required();

  // validate
  auto* validate =
      app.add_subcommand("validate", "Validate a submission bundle "
                                     "without scoring it");
  std::string bundle_file;
  KeysOptions validate_keys;
  validate->add_option("--bundle", bundle_file, "Submission zip")->required();
  add_keys_options(validate, validate_keys, true);

  // score
  auto* score = app.add_subcommand("score", "Score a submission bundle");
  std::string score_bundle_file;
  KeysOptions score_keys;
  score->add_option("--bundle", score_bundle_file, "Submission zip")
      ->required();
  add_keys_options(score, score_keys, true);

  // synth
  auto* synth =
      app.add_subcommand("synth", "Generate a synthetic dataset + trials");
  std::string synth_config_file, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--config", synth_config_file, "Synth config JSON");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Seed override");

  // train
  auto* train = app.add_subcommand("train", "Train the baseline on one "
                                            "language");
  std::string train_embeddings, train_split, train_language, train_fop_config,
      train_model_out, train_trials, train_scores_out;
  train->add_option("--embeddings", train_embeddings, "Embedding table file")
      ->required();
  train->add_option("--split", train_split, "split.json with train_speakers")
      ->required();
  train->add_option("--language", train_language, "Training language")
      ->required();
  train->add_option("--fop-config", train_fop_config, "Model config JSON");
  train->add_option("--model-out", train_model_out, "Checkpoint path")
      ->required();
  train->add_option("--trials", train_trials,
                    "Optional trial list to score with the trained model");
  train->add_option("--scores-out", train_scores_out,
                    "Score file written for --trials");

  // grid
  auto* grid = app.add_subcommand(
      "grid", "Synthetic end-to-end heard/unheard EER grid");
  std::string grid_synth_config, grid_fop_config, grid_bundle_out,
      grid_keys_out;
  std::optional<std::uint64_t> grid_seed;
  grid->add_option("--synth-config", grid_synth_config, "Synth config JSON");
  grid->add_option("--fop-config", grid_fop_config, "Model config JSON");
  grid->add_option("--seed", grid_seed, "Synth seed override");
  grid->add_option("--bundle-out", grid_bundle_out,
                   "Write the four score files as a submission zip");
  grid->add_option("--keys-out", grid_keys_out,
                   "Write trials/truth key files to this directory");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the challenge phase service");
  std::string serve_config, serve_data_dir;
  std::optional<int> serve_port;
  serve->add_option("--config", serve_config, "Service config JSON");
  serve->add_option("--port", serve_port, "Listen port override");
  serve->add_option("--data-dir", serve_data_dir, "Data directory override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*eer) return run_eer(scores_file, truth_file, as_json);
    if (*validate)
      return run_validate(bundle_file, validate_keys, as_json);
    if (*score) return run_score(score_bundle_file, score_keys, as_json);
    if (*synth)
      return run_synth(synth_config_file, synth_out, synth_seed, as_json);
    if (*train)
      return run_train(train_embeddings, train_split, train_language,
                       train_fop_config, train_model_out, train_trials,
                       train_scores_out, as_json);
    if (*grid)
      return run_grid(grid_synth_config, grid_fop_config, grid_seed,
                      grid_bundle_out, grid_keys_out, as_json);
    if (*serve) return run_serve(serve_config, serve_port, serve_data_dir);
  } catch (const fame::Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what()
              << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
