#include "fame/service.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <cstdio>
#include <ctime>

#include "fame/error.hpp"
#include "fame/text.hpp"

namespace fame {

using nlohmann::json;

std::string_view to_string(Phase phase) {
  return phase == Phase::Progress ? "progress" : "evaluation";
}

Phase phase_from_string(std::string_view name) {
  if (name == "progress") return Phase::Progress;
  if (name == "evaluation") return Phase::Evaluation;
  throw Error(ErrorKind::Config, "unknown phase '" + std::string(name) + "'");
}

PhaseConfig PhaseConfig::defaults(Phase phase) {
  PhaseConfig config;
  config.phase = phase;
  if (phase == Phase::Progress) {
    config.max_total = 100;
    config.max_per_day = 10;
    config.leaderboard_visible = true;
  } else {
    config.max_total = 5;
    config.max_per_day.reset();
    config.leaderboard_visible = false;
  }
  return config;
}

json PhaseConfig::to_json() const {
  json j{{"phase", std::string(::fame::to_string(phase))},
         {"window_start", format_timestamp(window_start)},
         {"window_end", format_timestamp(window_end)},
         {"max_total", max_total},
         {"leaderboard_visible", leaderboard_visible}};
  if (max_per_day) j["max_per_day"] = *max_per_day;
  return j;
}

PhaseConfig PhaseConfig::from_json(const json& j) {
  PhaseConfig config = defaults(
      phase_from_string(j.at("phase").get<std::string>()));
  if (j.contains("window_start"))
    config.window_start = parse_timestamp(j["window_start"].get<std::string>());
  if (j.contains("window_end"))
    config.window_end = parse_timestamp(j["window_end"].get<std::string>());
  if (j.contains("max_total")) config.max_total = j["max_total"].get<int>();
  if (j.contains("max_per_day")) {
    if (j["max_per_day"].is_null())
      config.max_per_day.reset();
    else
      config.max_per_day = j["max_per_day"].get<int>();
  }
  if (j.contains("leaderboard_visible"))
    config.leaderboard_visible = j["leaderboard_visible"].get<bool>();
  if (config.max_total <= 0)
    throw Error(ErrorKind::Config, "max_total must be positive");
  if (config.max_per_day && *config.max_per_day <= 0)
    throw Error(ErrorKind::Config, "max_per_day must be positive");
  if (config.window_end < config.window_start)
    throw Error(ErrorKind::Config, "phase window ends before it starts");
  return config;
}

std::string format_timestamp(std::int64_t unix_seconds) {
  std::time_t t = static_cast<std::time_t>(unix_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::int64_t parse_timestamp(std::string_view iso8601) {
  std::tm tm{};
  int y, mo, d, h, mi, s;
  if (std::sscanf(std::string(iso8601).c_str(), "%d-%d-%dT%d:%d:%dZ", &y, &mo,
                  &d, &h, &mi, &s) != 6)
    throw Error(ErrorKind::Format,
                "bad timestamp '" + std::string(iso8601) +
                    "', expected YYYY-MM-DDTHH:MM:SSZ");
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = s;
  return static_cast<std::int64_t>(timegm(&tm));
}

std::int64_t utc_day(std::int64_t unix_seconds) {
  // floor division; handles pre-1970 instants
  std::int64_t day = unix_seconds / 86400;
  if (unix_seconds % 86400 < 0) --day;
  return day;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1)
    throw Error(ErrorKind::State, "sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(len * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = kHex[digest[i] >> 4];
    out[2 * i + 1] = kHex[digest[i] & 0xf];
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

constexpr std::string_view kGenesis =
    "0000000000000000000000000000000000000000000000000000000000000000";

// Hash of one record: chained over the previous hash and the canonical
// dump of everything except the hash itself.
std::string record_hash(const std::string& prev, const json& body) {
  return sha256_hex(prev + "|" + body.dump());
}

json record_body(std::uint64_t seq, std::string_view type, std::int64_t at,
                 const json& data) {
  return json{{"seq", seq},
              {"at", format_timestamp(at)},
              {"type", std::string(type)},
              {"data", data}};
}

}  // namespace

Journal::Journal(std::filesystem::path file) : file_(std::move(file)) {
  head_hash_ = kGenesis;
  if (std::filesystem::exists(file_)) {
    std::string content = read_file(file_);
    for (const TextLine& line : split_lines(content)) {
      if (line.text.empty()) continue;
      json record;
      try {
        record = json::parse(line.text);
      } catch (const json::exception&) {
        throw Error(ErrorKind::State, "journal line " +
                                          std::to_string(line.number) +
                                          " is not valid JSON");
      }
      json body = record_body(record.at("seq").get<std::uint64_t>(),
                              record.at("type").get<std::string>(),
                              parse_timestamp(record.at("at").get<std::string>()),
                              record.at("data"));
      if (record.at("prev").get<std::string>() != head_hash_ ||
          record.at("hash").get<std::string>() != record_hash(head_hash_, body))
        throw Error(ErrorKind::State,
                    "journal hash chain broken at line " +
                        std::to_string(line.number));
      head_hash_ = record["hash"].get<std::string>();
      records_.push_back(std::move(record));
    }
  }
  fd_ = ::open(file_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd_ < 0)
    throw Error(ErrorKind::Io, "cannot open journal " + file_.string());
}

Journal::~Journal() {
  if (fd_ >= 0) ::close(fd_);
}

const json& Journal::append(std::string_view type, json data,
                            std::int64_t at) {
  json body = record_body(next_seq(), type, at, data);
  json record = body;
  record["prev"] = head_hash_;
  record["hash"] = record_hash(head_hash_, body);

  std::string line = record.dump();
  line += '\n';
  std::size_t off = 0;
  while (off < line.size()) {
    ssize_t n = ::write(fd_, line.data() + off, line.size() - off);
    if (n < 0) throw Error(ErrorKind::Io, "journal write failed");
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0)
    throw Error(ErrorKind::Io, "journal fsync failed");

  head_hash_ = record["hash"].get<std::string>();
  records_.push_back(std::move(record));
  return records_.back();
}

ChallengeService::ChallengeService(Options options)
    : options_(std::move(options)) {
  if (options_.admin_credential.empty())
    throw Error(ErrorKind::Config, "admin credential must not be empty");
  if (!options_.clock)
    options_.clock = [] {
      return static_cast<std::int64_t>(std::time(nullptr));
    };
  std::filesystem::create_directories(options_.data_dir);
  phase_configs_[Phase::Progress] = PhaseConfig::defaults(Phase::Progress);
  phase_configs_[Phase::Evaluation] = PhaseConfig::defaults(Phase::Evaluation);
  journal_ =
      std::make_unique<Journal>(options_.data_dir / "journal.jsonl");
  for (const json& record : journal_->records()) replay(record);
}

void ChallengeService::require_admin(const std::string& credential) const {
  if (credential != options_.admin_credential)
    throw Error(ErrorKind::Auth, "bad admin credential");
}

const ChallengeService::Team& ChallengeService::authenticate(
    const std::string& team_id, const std::string& credential) const {
  auto it = teams_.find(team_id);
  if (it == teams_.end())
    throw Error(ErrorKind::Auth, "unknown team '" + team_id + "'");
  if (sha256_hex(team_id + ":" + credential) != it->second.credential_hash)
    throw Error(ErrorKind::Auth, "bad credential for team '" + team_id + "'");
  return it->second;
}

void ChallengeService::replay(const json& record) {
  const std::string type = record.at("type").get<std::string>();
  const json& data = record.at("data");
  if (type == "team")
    apply_team(data);
  else if (type == "phase")
    apply_phase(data);
  else if (type == "keys")
    apply_keys(data);
  else if (type == "submission")
    apply_submission(data);
  else
    throw Error(ErrorKind::State, "unknown journal record type '" + type + "'");
}

void ChallengeService::apply_team(const json& data) {
  teams_[data.at("team_id").get<std::string>()] =
      Team{data.at("display_name").get<std::string>(),
           data.at("credential_hash").get<std::string>()};
}

void ChallengeService::apply_phase(const json& data) {
  PhaseConfig config = PhaseConfig::from_json(data);
  phase_configs_[config.phase] = config;
}

void ChallengeService::apply_keys(const json& data) {
  Phase phase = phase_from_string(data.at("phase").get<std::string>());
  const json& langs = data.at("languages");
  BundleLayout layout = BundleLayout::for_languages(
      langs.at(0).get<std::string>(), langs.at(1).get<std::string>());
  std::array<std::pair<TrialList, GroundTruth>, 2> per_language;
  for (int l = 0; l < 2; ++l) {
    const json& entry = data.at("per_language").at(layout.languages[l]);
    per_language[l].first =
        parse_trial_list(entry.at("trials").get<std::string>(),
                         layout.languages[l], Condition::Heard);
    per_language[l].second =
        parse_ground_truth(entry.at("truth").get<std::string>());
  }
  keys_[phase] = PhaseKeys{layout, make_scoring_keys(layout, per_language)};
}

void ChallengeService::apply_submission(const json& data) {
  std::string id = data.at("submission_id").get<std::string>();
  submission_index_[id] = submissions_.size();
  submissions_.push_back(data);
  if (data.at("counted").get<bool>()) {
    std::string team = data.at("team_id").get<std::string>();
    Phase phase = phase_from_string(data.at("phase").get<std::string>());
    std::int64_t at = parse_timestamp(data.at("received_at").get<std::string>());
    ++counted_total_[{team, phase}];
    ++counted_day_[{team, phase, utc_day(at)}];
  }
}

json ChallengeService::register_team(const std::string& admin_credential,
                                     const std::string& team_id,
                                     const std::string& display_name,
                                     const std::string& credential) {
  std::lock_guard lock(mutex_);
  require_admin(admin_credential);
  if (team_id.empty() || contains_whitespace(team_id))
    throw Error(ErrorKind::Config, "team id must be a whitespace-free token");
  if (teams_.contains(team_id))
    throw Error(ErrorKind::Duplication, "team '" + team_id + "' exists");
  json data{{"team_id", team_id},
            {"display_name", display_name},
            {"credential_hash", sha256_hex(team_id + ":" + credential)}};
  const json& record = journal_->append("team", data, options_.clock());
  apply_team(data);
  maybe_snapshot();
  return json{{"team_id", team_id}, {"seq", record.at("seq")}};
}

json ChallengeService::set_phase_config(const std::string& admin_credential,
                                        const PhaseConfig& config) {
  std::lock_guard lock(mutex_);
  require_admin(admin_credential);
  json data = config.to_json();
  journal_->append("phase", data, options_.clock());
  apply_phase(data);
  maybe_snapshot();
  return data;
}

json ChallengeService::load_keys(const std::string& admin_credential,
                                 Phase phase, const json& keys_json) {
  std::lock_guard lock(mutex_);
  require_admin(admin_credential);
  json data = keys_json;
  data["phase"] = std::string(to_string(phase));
  apply_keys(data);  // validates before journaling
  journal_->append("keys", data, options_.clock());
  maybe_snapshot();
  const PhaseKeys& loaded = keys_.at(phase);
  json sizes = json::object();
  for (const auto& entry : loaded.keys.entries)
    sizes[config_name(entry.key)] = entry.trial_ids.size();
  return json{{"phase", std::string(to_string(phase))},
              {"trials", std::move(sizes)}};
}

json ChallengeService::export_audit(const std::string& admin_credential) const {
  std::lock_guard lock(mutex_);
  require_admin(admin_credential);
  return json{{"head", journal_->head_hash()},
              {"records", journal_->records()}};
}

json ChallengeService::journal_submission(json data, std::int64_t now) {
  journal_->append("submission", data, now);
  apply_submission(data);
  maybe_snapshot();
  return data;
}

json ChallengeService::submit(const std::string& team_id,
                              const std::string& credential,
                              std::span<const std::uint8_t> archive) {
  std::lock_guard lock(mutex_);
  authenticate(team_id, credential);

  const std::int64_t now = options_.clock();
  char id_buf[32];
  std::snprintf(id_buf, sizeof id_buf, "sub-%06llu",
                static_cast<unsigned long long>(journal_->next_seq()));
  json data{{"submission_id", id_buf},
            {"team_id", team_id},
            {"received_at", format_timestamp(now)},
            {"archive_digest", "sha256:" + sha256_hex(archive)},
            {"counted", false}};

  // Exactly one phase window may admit the submission.
  const PhaseConfig* active = nullptr;
  for (const auto& [phase, config] : phase_configs_)
    if (now >= config.window_start && now <= config.window_end) {
      if (active)
        throw Error(ErrorKind::State,
                    "phase windows overlap; fix the phase configuration");
      active = &config;
    }
  if (!active) {
    data["phase"] = nullptr;
    data["status"] = "rejected";
    data["reason"] = "window";
    data["detail"] = "no phase window is open at " + format_timestamp(now);
    return journal_submission(std::move(data), now);
  }
  const PhaseConfig& config = *active;
  data["phase"] = std::string(to_string(config.phase));

  auto reject = [&](std::string_view reason, std::string detail) {
    data["status"] = "rejected";
    data["reason"] = std::string(reason);
    data["detail"] = std::move(detail);
    return journal_submission(std::move(data), now);
  };

  int total = 0;
  if (auto it = counted_total_.find({team_id, config.phase});
      it != counted_total_.end())
    total = it->second;
  if (total >= config.max_total)
    return reject("total_limit",
                  "phase limit of " + std::to_string(config.max_total) +
                      " submissions reached");
  if (config.max_per_day) {
    int today = 0;
    if (auto it = counted_day_.find({team_id, config.phase, utc_day(now)});
        it != counted_day_.end())
      today = it->second;
    if (today >= *config.max_per_day)
      return reject("per_day_limit",
                    "daily limit of " + std::to_string(*config.max_per_day) +
                        " submissions reached");
  }

  auto keys_it = keys_.find(config.phase);
  if (keys_it == keys_.end())
    return reject("no_keys", "scoring keys are not loaded for this phase");
  const PhaseKeys& keys = keys_it->second;

  try {
    std::vector<std::string> warnings;
    SubmissionBundle bundle = open_bundle(archive, keys.layout, &warnings);
    BundleReport report = score_bundle(bundle, keys.keys);
    report.warnings.insert(report.warnings.begin(), warnings.begin(),
                           warnings.end());
    json report_json{{"overall", report.overall},
                     {"overall_display",
                      format_percent_display(report.overall)},
                     {"warnings", report.warnings}};
    json configs = json::array();
    for (const ConfigScore& c : report.configs)
      configs.push_back(json{{"configuration", config_name(c.key)},
                             {"eer", c.eer.eer},
                             {"eer_4dp", format_percent_4dp(c.eer.eer)},
                             {"eer_display", format_percent_display(c.eer.eer)},
                             {"threshold", c.eer.threshold}});
    report_json["configurations"] = std::move(configs);
    data["status"] = "accepted";
    data["counted"] = true;
    data["report"] = std::move(report_json);
    return journal_submission(std::move(data), now);
  } catch (const Error& e) {
    // Failed validation does not consume quota.
    return reject("validation", e.what());
  }
}

json ChallengeService::get_submission(const std::string& team_id,
                                      const std::string& credential,
                                      const std::string& submission_id) const {
  std::lock_guard lock(mutex_);
  authenticate(team_id, credential);
  auto it = submission_index_.find(submission_id);
  if (it == submission_index_.end())
    throw Error(ErrorKind::State,
                "no submission '" + submission_id + "'");
  const json& record = submissions_[it->second];
  if (record.at("team_id").get<std::string>() != team_id)
    throw Error(ErrorKind::Auth, "submission belongs to another team");
  return record;
}

std::vector<LeaderboardEntry> ChallengeService::compute_leaderboard(
    Phase phase) const {
  struct Best {
    double overall = 0.0;
    std::int64_t at = 0;
    std::string id;
    int count = 0;
    bool has = false;
  };
  std::map<std::string, Best> by_team;
  for (const json& record : submissions_) {
    if (record.at("phase").is_null() ||
        phase_from_string(record.at("phase").get<std::string>()) != phase)
      continue;
    if (!record.at("counted").get<bool>()) continue;
    const std::string team = record.at("team_id").get<std::string>();
    Best& best = by_team[team];
    ++best.count;
    double overall = record.at("report").at("overall").get<double>();
    std::int64_t at =
        parse_timestamp(record.at("received_at").get<std::string>());
    if (!best.has || overall < best.overall ||
        (overall == best.overall && at < best.at)) {
      best.has = true;
      best.overall = overall;
      best.at = at;
      best.id = record.at("submission_id").get<std::string>();
    }
  }
  std::vector<LeaderboardEntry> entries;
  for (const auto& [team, best] : by_team) {
    auto team_it = teams_.find(team);
    entries.push_back({team,
                       team_it != teams_.end() ? team_it->second.display_name
                                               : team,
                       best.overall, best.id, best.at, best.count});
  }
  std::sort(entries.begin(), entries.end(),
            [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
              if (a.best_overall != b.best_overall)
                return a.best_overall < b.best_overall;
              if (a.best_received_at != b.best_received_at)
                return a.best_received_at < b.best_received_at;
              return a.team_id < b.team_id;
            });
  return entries;
}

json ChallengeService::leaderboard(Phase phase) const {
  std::lock_guard lock(mutex_);
  const PhaseConfig& config = phase_configs_.at(phase);
  const std::int64_t now = options_.clock();
  if (!config.leaderboard_visible && now <= config.window_end)
    return json{{"phase", std::string(to_string(phase))}, {"hidden", true}};
  json entries = json::array();
  for (const LeaderboardEntry& e : compute_leaderboard(phase))
    entries.push_back(json{
        {"team_id", e.team_id},
        {"display_name", e.display_name},
        {"best_overall", e.best_overall},
        {"best_overall_display", format_percent_display(e.best_overall)},
        {"best_submission_id", e.best_submission_id},
        {"n_submissions", e.n_submissions}});
  return json{{"phase", std::string(to_string(phase))},
              {"hidden", false},
              {"entries", std::move(entries)}};
}

PhaseConfig ChallengeService::phase_config(Phase phase) const {
  std::lock_guard lock(mutex_);
  return phase_configs_.at(phase);
}

std::size_t ChallengeService::n_records() const {
  std::lock_guard lock(mutex_);
  return journal_->records().size();
}

void ChallengeService::maybe_snapshot() {
  // Materialized view alongside the journal; recovery replays the journal
  // and only uses this for a consistency cross-check.
  if (journal_->records().size() % 32 != 0) return;
  json snapshot{{"last_seq", journal_->records().size()},
                {"head", journal_->head_hash()}};
  write_file(options_.data_dir / "snapshot.json", snapshot.dump() + "\n");
}

}  // namespace fame
