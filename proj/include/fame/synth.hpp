#pragma once

#include <array>
#include <map>
#include <string>

#include "fame/embedding_table.hpp"
#include "fame/fop.hpp"
#include "fame/metrics.hpp"
#include "fame/submission.hpp"
#include "fame/trial_data.hpp"

namespace fame {

// Geometry of the synthetic multilingual corpus. Every speaker has one
// latent identity vector; faces are linear images of it, voices add a
// per-language offset of magnitude language_shift per component. Defaults
// mirror the V3-EG split shape (58 speakers, 50-8 train-test).
struct SynthConfig {
  int n_speakers = 58;
  std::array<std::string, 2> languages{"English", "German"};
  int d_face = 512;
  int d_voice = 512;
  double language_shift = 0.6;
  double noise_sigma = 0.2;
  int utterances_per_speaker_per_language = 5;
  int faces_per_speaker_per_language = 3;
  int n_train_speakers = 50;
  int n_test_speakers = 8;
  int n_trials_per_language = 400;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthDataset {
  SynthConfig config;
  std::vector<std::string> train_speakers;
  std::vector<std::string> test_speakers;
  EmbeddingTable table;
  // Test-speaker trial lists and labels, keyed by language.
  std::map<std::string, std::pair<TrialList, GroundTruth>> trials;
};

// Deterministic in (config, config.seed); regenerating with the same
// config yields a bitwise-identical dataset.
SynthDataset generate(const SynthConfig& config);

// Balanced match/non-match trials over the test speakers' rows of one
// language. Ids are fresh 8-char lowercase alphanumerics.
std::pair<TrialList, GroundTruth> make_trials(const SynthDataset& dataset,
                                              const std::string& language,
                                              int n_trials,
                                              std::uint64_t seed);

// Training triples for one language: every voice row of a train speaker,
// paired round-robin with that speaker's face rows of the same language.
// Labels are dense indices over the sorted train-speaker ids.
Batch make_training_batch(const EmbeddingTable& table,
                          std::span<const std::string> train_speakers,
                          const std::string& language);
Batch make_training_batch(const SynthDataset& dataset,
                          const std::string& language);

struct GridResult {
  ConfigurationGrid grid;
  double overall;
  // Score files in bundle layout order (language heard/unheard).
  std::map<std::string, ScoreFile> score_files;  // keyed by config name
  std::array<FopModel, 2> models;                // per training language
};

// Trains one model per language on the train speakers and scores both
// language trial lists with each, producing the 2x2 heard/unheard grid.
GridResult run_grid_experiment(const SynthDataset& dataset,
                               const FopConfig& fop_config);
GridResult run_grid_experiment(const SynthConfig& synth_config,
                               const FopConfig& fop_config);

// Scores one trial list by cosine of the projected embeddings; paths are
// resolved against the table's derived media paths.
ScoreFile score_trials(const FopModel& model, const TrialList& trials,
                       const EmbeddingTable& table);

}  // namespace fame
