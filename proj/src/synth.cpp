#include "fame/synth.hpp"

#include <algorithm>
#include <set>

#include "fame/error.hpp"
#include "fame/rng.hpp"

namespace fame {

namespace {

constexpr int kLatentDim = 64;

// Stream ids for Rng::fork so each consumer of the top-level seed draws
// from its own sequence.
enum Stream : std::uint64_t {
  kStreamIdentity = 1,
  kStreamFaceMap = 2,
  kStreamVoiceMap = 3,
  kStreamOffsets = 4,
  kStreamNoise = 5,
  kStreamTrials = 6,
};

Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows,
                                Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.gaussian();
  return m;
}

std::string speaker_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "spk%03d", index);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_speakers < 4)
    throw Error(ErrorKind::Config, "need at least 4 speakers");
  if (n_train_speakers < 2 || n_test_speakers < 2)
    throw Error(ErrorKind::Config,
                "train and test splits each need at least 2 speakers");
  if (n_train_speakers + n_test_speakers != n_speakers)
    throw Error(ErrorKind::Config,
                "train + test speakers must equal n_speakers");
  if (languages[0] == languages[1])
    throw Error(ErrorKind::Config, "the two languages must differ");
  if (d_face <= 0 || d_voice <= 0)
    throw Error(ErrorKind::Config, "embedding dimensions must be positive");
  if (language_shift < 0.0)
    throw Error(ErrorKind::Config, "language_shift must be non-negative");
  if (noise_sigma <= 0.0)
    throw Error(ErrorKind::Config, "noise_sigma must be positive");
  if (utterances_per_speaker_per_language < 1 ||
      faces_per_speaker_per_language < 1)
    throw Error(ErrorKind::Config, "per-speaker sample counts must be >= 1");
  if (n_trials_per_language < 2)
    throw Error(ErrorKind::Config, "need at least 2 trials per language");
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  SynthDataset dataset;
  dataset.config = config;

  for (int s = 0; s < config.n_speakers; ++s) {
    std::string name = speaker_name(s);
    if (s < config.n_train_speakers)
      dataset.train_speakers.push_back(std::move(name));
    else
      dataset.test_speakers.push_back(std::move(name));
  }

  // Unit-norm latent identity per speaker.
  Rng id_rng = Rng::fork(config.seed, kStreamIdentity);
  Eigen::MatrixXd latents(config.n_speakers, kLatentDim);
  for (int s = 0; s < config.n_speakers; ++s) {
    Eigen::VectorXd z = gaussian_matrix(id_rng, kLatentDim, 1);
    latents.row(s) = z.normalized().transpose();
  }

  // Shared linear maps from latent to embedding space; standard-normal
  // entries give unit per-component signal variance for unit latents.
  Rng face_rng = Rng::fork(config.seed, kStreamFaceMap);
  Eigen::MatrixXd face_map = gaussian_matrix(face_rng, config.d_face, kLatentDim);
  Rng voice_rng = Rng::fork(config.seed, kStreamVoiceMap);
  Eigen::MatrixXd voice_map =
      gaussian_matrix(voice_rng, config.d_voice, kLatentDim);

  // Per-language voice offset directions, scaled by language_shift.
  Rng offset_rng = Rng::fork(config.seed, kStreamOffsets);
  std::array<Eigen::VectorXd, 2> offsets;
  for (int l = 0; l < 2; ++l)
    offsets[l] = config.language_shift * gaussian_matrix(offset_rng, config.d_voice, 1);

  Rng noise = Rng::fork(config.seed, kStreamNoise);
  dataset.table.d_face = config.d_face;
  dataset.table.d_voice = config.d_voice;
  for (int s = 0; s < config.n_speakers; ++s) {
    std::string speaker = speaker_name(s);
    Eigen::VectorXd face_signal = face_map * latents.row(s).transpose();
    Eigen::VectorXd voice_signal = voice_map * latents.row(s).transpose();
    for (int l = 0; l < 2; ++l) {
      const std::string& language = config.languages[l];
      for (int k = 0; k < config.faces_per_speaker_per_language; ++k) {
        EmbeddingRow row;
        row.speaker_id = speaker;
        row.language = language;
        row.modality = Modality::Face;
        row.values = face_signal +
                     config.noise_sigma *
                         gaussian_matrix(noise, config.d_face, 1);
        dataset.table.rows.push_back(std::move(row));
      }
      for (int k = 0; k < config.utterances_per_speaker_per_language; ++k) {
        EmbeddingRow row;
        row.speaker_id = speaker;
        row.language = language;
        row.modality = Modality::Voice;
        row.values = voice_signal + offsets[l] +
                     config.noise_sigma *
                         gaussian_matrix(noise, config.d_voice, 1);
        dataset.table.rows.push_back(std::move(row));
      }
    }
  }

  for (int l = 0; l < 2; ++l) {
    const std::string& language = config.languages[l];
    dataset.trials[language] =
        make_trials(dataset, language, config.n_trials_per_language,
                    Rng::fork(config.seed, kStreamTrials).next_u64() + l);
  }
  return dataset;
}

namespace {

struct RowRef {
  std::size_t row;
  std::size_t speaker;  // index into test speaker list
};

}  // namespace

std::pair<TrialList, GroundTruth> make_trials(const SynthDataset& dataset,
                                              const std::string& language,
                                              int n_trials,
                                              std::uint64_t seed) {
  if (n_trials < 2)
    throw Error(ErrorKind::Config, "need at least 2 trials");
  if (dataset.test_speakers.size() < 2)
    throw Error(ErrorKind::Config,
                "non-match trials need at least 2 test speakers");

  std::map<std::string, std::size_t> speaker_index;
  for (std::size_t i = 0; i < dataset.test_speakers.size(); ++i)
    speaker_index.emplace(dataset.test_speakers[i], i);

  std::vector<std::vector<std::size_t>> faces(dataset.test_speakers.size());
  std::vector<std::vector<std::size_t>> voices(dataset.test_speakers.size());
  const auto paths = dataset.table.row_paths();
  for (std::size_t r = 0; r < dataset.table.rows.size(); ++r) {
    const EmbeddingRow& row = dataset.table.rows[r];
    if (row.language != language) continue;
    auto it = speaker_index.find(row.speaker_id);
    if (it == speaker_index.end()) continue;
    (row.modality == Modality::Face ? faces : voices)[it->second].push_back(r);
  }
  for (std::size_t s = 0; s < dataset.test_speakers.size(); ++s)
    if (faces[s].empty() || voices[s].empty())
      throw Error(ErrorKind::Config, "test speaker " +
                                         dataset.test_speakers[s] +
                                         " has no " + language + " data");

  Rng rng(seed);
  const std::size_t n_speakers = dataset.test_speakers.size();
  const int n_match = n_trials - n_trials / 2;
  const int n_nonmatch = n_trials / 2;

  struct Draft {
    std::size_t voice_row;
    std::size_t face_row;
    Label label;
  };
  std::vector<Draft> drafts;
  drafts.reserve(n_trials);
  for (int k = 0; k < n_match; ++k) {
    std::size_t s = rng.below(n_speakers);
    drafts.push_back({voices[s][rng.below(voices[s].size())],
                      faces[s][rng.below(faces[s].size())], Label::Match});
  }
  for (int k = 0; k < n_nonmatch; ++k) {
    std::size_t sv = rng.below(n_speakers);
    std::size_t sf = rng.below(n_speakers - 1);
    if (sf >= sv) ++sf;  // distinct speakers
    drafts.push_back({voices[sv][rng.below(voices[sv].size())],
                      faces[sf][rng.below(faces[sf].size())],
                      Label::NonMatch});
  }
  // Interleave matches and non-matches deterministically.
  for (std::size_t i = drafts.size(); i > 1; --i)
    std::swap(drafts[i - 1], drafts[rng.below(i)]);

  TrialList list;
  list.language = language;
  list.condition = Condition::Heard;
  GroundTruth truth;
  std::set<std::string> used_ids;
  for (const Draft& draft : drafts) {
    std::string id = rng.token(8);
    while (!used_ids.insert(id).second) id = rng.token(8);
    TrialPair pair;
    pair.id = PairId{id};
    pair.voice_path = paths[draft.voice_row];
    pair.face_path = paths[draft.face_row];
    list.pairs.push_back(std::move(pair));
    truth.labels.emplace(PairId{id}, draft.label);
  }
  return {std::move(list), std::move(truth)};
}

Batch make_training_batch(const EmbeddingTable& table,
                          std::span<const std::string> train_speakers,
                          const std::string& language) {
  std::map<std::string, int> label_of;  // sorted ids -> dense labels
  for (const std::string& speaker : train_speakers) label_of[speaker] = 0;
  int next = 0;
  for (auto& [speaker, label] : label_of) label = next++;

  std::vector<std::vector<std::size_t>> faces(label_of.size());
  std::vector<std::vector<std::size_t>> voices(label_of.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const EmbeddingRow& row = table.rows[r];
    if (row.language != language) continue;
    auto it = label_of.find(row.speaker_id);
    if (it == label_of.end()) continue;
    (row.modality == Modality::Face ? faces : voices)[it->second].push_back(r);
  }

  std::vector<std::pair<std::size_t, std::size_t>> samples;  // (face, voice)
  std::vector<int> labels;
  for (const auto& [speaker, label] : label_of) {
    const auto& f = faces[label];
    const auto& v = voices[label];
    if (f.empty() || v.empty())
      throw Error(ErrorKind::Config,
                  "train speaker " + speaker + " has no " + language + " data");
    for (std::size_t k = 0; k < v.size(); ++k) {
      samples.emplace_back(f[k % f.size()], v[k]);
      labels.push_back(label);
    }
  }

  Batch batch;
  batch.faces.resize(static_cast<Eigen::Index>(samples.size()), table.d_face);
  batch.voices.resize(static_cast<Eigen::Index>(samples.size()),
                      table.d_voice);
  batch.labels = std::move(labels);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    batch.faces.row(static_cast<Eigen::Index>(i)) =
        table.rows[samples[i].first].values.transpose();
    batch.voices.row(static_cast<Eigen::Index>(i)) =
        table.rows[samples[i].second].values.transpose();
  }
  return batch;
}

Batch make_training_batch(const SynthDataset& dataset,
                          const std::string& language) {
  return make_training_batch(dataset.table, dataset.train_speakers, language);
}

ScoreFile score_trials(const FopModel& model, const TrialList& trials,
                       const EmbeddingTable& table) {
  auto index = table.path_index();
  auto row_for = [&](const std::string& path, Modality expect) -> const
      EmbeddingRow& {
        auto it = index.find(path);
        if (it == index.end())
          throw Error(ErrorKind::Coverage,
                      "trial references unknown path '" + path + "'", path);
        const EmbeddingRow& row = table.rows[it->second];
        if (row.modality != expect)
          throw Error(ErrorKind::Format, "path '" + path +
                                             "' resolves to the wrong "
                                             "modality");
        return row;
      };

  ScoreFile scores;
  for (const TrialPair& pair : trials.pairs) {
    const EmbeddingRow& voice = row_for(pair.voice_path, Modality::Voice);
    const EmbeddingRow& face = row_for(pair.face_path, Modality::Face);
    scores.scores.emplace(pair.id,
                          score_pair(model, face.values, voice.values));
  }
  return scores;
}

GridResult run_grid_experiment(const SynthDataset& dataset,
                               const FopConfig& fop_config) {
  const SynthConfig& sc = dataset.config;
  GridResult result;
  result.grid.languages = sc.languages;

  for (int l = 0; l < 2; ++l) {
    const std::string& train_language = sc.languages[l];
    Batch batch = make_training_batch(dataset, train_language);
    FopConfig config = fop_config;
    config.d_face = sc.d_face;
    config.d_voice = sc.d_voice;
    config.n_classes = static_cast<int>(dataset.train_speakers.size());
    config.seed = fop_config.seed + static_cast<std::uint64_t>(l);
    result.models[l] = train(config, batch).model;
  }

  for (int l = 0; l < 2; ++l) {
    const std::string& train_language = sc.languages[l];
    for (int t = 0; t < 2; ++t) {
      const std::string& test_language = sc.languages[t];
      const auto& [list, truth] = dataset.trials.at(test_language);
      ScoreFile scores = score_trials(result.models[l], list, dataset.table);
      EerResult eer = compute_eer(scores, truth);
      result.grid.entries.push_back({train_language, test_language, eer});
      Condition condition = l == t ? Condition::Heard : Condition::Unheard;
      result.score_files[config_name({test_language, condition})] =
          std::move(scores);
    }
  }
  result.overall = overall_score(result.grid);
  return result;
}

GridResult run_grid_experiment(const SynthConfig& synth_config,
                               const FopConfig& fop_config) {
  return run_grid_experiment(generate(synth_config), fop_config);
}

}  // namespace fame
