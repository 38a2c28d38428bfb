#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fame/submission.hpp"

namespace fame {

enum class Phase { Progress, Evaluation };

std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view name);

// Submission limits and window of one challenge phase. Timestamps are
// unix seconds (UTC); the window is inclusive at both ends.
struct PhaseConfig {
  Phase phase = Phase::Progress;
  std::int64_t window_start = 0;
  std::int64_t window_end = 4102444800;  // 2100-01-01, effectively open
  int max_total = 100;
  std::optional<int> max_per_day;
  bool leaderboard_visible = true;

  // Progress: 100 total, 10 per UTC day, visible leaderboard.
  // Evaluation: 5 total, no per-day cap, leaderboard hidden until the
  // window closes.
  static PhaseConfig defaults(Phase phase);

  nlohmann::json to_json() const;
  static PhaseConfig from_json(const nlohmann::json& j);
};

std::string format_timestamp(std::int64_t unix_seconds);
std::int64_t parse_timestamp(std::string_view iso8601);
std::int64_t utc_day(std::int64_t unix_seconds);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// Append-only, hash-chained record log. One JSON object per line; every
// append is flushed and fsynced before it is acknowledged.
class Journal {
 public:
  explicit Journal(std::filesystem::path file);
  ~Journal();

  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  const std::vector<nlohmann::json>& records() const { return records_; }
  std::uint64_t next_seq() const { return records_.size() + 1; }
  const std::string& head_hash() const { return head_hash_; }

  const nlohmann::json& append(std::string_view type, nlohmann::json data,
                               std::int64_t at);

 private:
  std::filesystem::path file_;
  int fd_ = -1;
  std::vector<nlohmann::json> records_;
  std::string head_hash_;
};

struct LeaderboardEntry {
  std::string team_id;
  std::string display_name;
  double best_overall;
  std::string best_submission_id;
  std::int64_t best_received_at;
  int n_submissions;
};

// Challenge lifecycle service: team records, phase windows and limits,
// submission scoring, leaderboard, and an auditable journal all modes of
// access are reconstructed from. One writer lock serializes mutations;
// every state change is journaled before the caller sees a response.
class ChallengeService {
 public:
  using Clock = std::function<std::int64_t()>;

  struct Options {
    std::filesystem::path data_dir;
    std::string admin_credential;
    Clock clock;  // defaults to the system UTC clock
  };

  explicit ChallengeService(Options options);

  // --- admin, credential-checked ---
  nlohmann::json register_team(const std::string& admin_credential,
                               const std::string& team_id,
                               const std::string& display_name,
                               const std::string& credential);
  nlohmann::json set_phase_config(const std::string& admin_credential,
                                  const PhaseConfig& config);
  // keys_json: {"languages": [A, B], "per_language":
  //   {A: {"trials": text, "truth": text}, B: {...}}}
  nlohmann::json load_keys(const std::string& admin_credential, Phase phase,
                           const nlohmann::json& keys_json);
  nlohmann::json export_audit(const std::string& admin_credential) const;

  // --- participants ---
  // Validates, scores and journals one submission; the returned record
  // carries status "accepted" or "rejected" plus the report or reason.
  nlohmann::json submit(const std::string& team_id,
                        const std::string& credential,
                        std::span<const std::uint8_t> archive);
  nlohmann::json get_submission(const std::string& team_id,
                                const std::string& credential,
                                const std::string& submission_id) const;
  nlohmann::json leaderboard(Phase phase) const;

  // --- introspection (tests, CLI status) ---
  PhaseConfig phase_config(Phase phase) const;
  std::size_t n_records() const;

 private:
  struct Team {
    std::string display_name;
    std::string credential_hash;
  };
  struct PhaseKeys {
    BundleLayout layout;
    ScoringKeys keys;
  };

  void require_admin(const std::string& credential) const;
  const Team& authenticate(const std::string& team_id,
                           const std::string& credential) const;
  void replay(const nlohmann::json& record);
  void apply_team(const nlohmann::json& data);
  void apply_phase(const nlohmann::json& data);
  void apply_keys(const nlohmann::json& data);
  void apply_submission(const nlohmann::json& data);
  nlohmann::json journal_submission(nlohmann::json data, std::int64_t now);
  void maybe_snapshot();
  std::vector<LeaderboardEntry> compute_leaderboard(Phase phase) const;

  mutable std::mutex mutex_;
  Options options_;
  std::unique_ptr<Journal> journal_;
  std::map<std::string, Team> teams_;
  std::map<Phase, PhaseConfig> phase_configs_;
  std::map<Phase, PhaseKeys> keys_;
  std::vector<nlohmann::json> submissions_;
  std::map<std::string, std::size_t> submission_index_;
  // counted submissions per (team, phase) and per (team, phase, utc day)
  std::map<std::pair<std::string, Phase>, int> counted_total_;
  std::map<std::tuple<std::string, Phase, std::int64_t>, int> counted_day_;
};

}  // namespace fame
