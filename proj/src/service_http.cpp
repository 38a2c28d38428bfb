#include "fame/service_http.hpp"

#include <httplib.h>

#include "fame/error.hpp"

namespace fame {

using nlohmann::json;

namespace {

int status_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Auth: return 401;
    case ErrorKind::Window: return 403;
    case ErrorKind::Limit: return 429;
    case ErrorKind::Config: return 400;
    case ErrorKind::State: return 409;
    default: return 422;
  }
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const Error& e) {
  reply_json(res, status_for(e),
             json{{"error", {{"kind", std::string(to_string(e.kind()))},
                             {"message", e.what()}}}});
}

// Rejected submissions are well-formed records; the HTTP status mirrors
// the rejection reason.
int status_for_record(const json& record) {
  if (record.at("status").get<std::string>() == "accepted") return 200;
  const std::string reason = record.at("reason").get<std::string>();
  if (reason == "window") return 403;
  if (reason == "per_day_limit" || reason == "total_limit") return 429;
  if (reason == "no_keys") return 503;
  return 422;  // validation
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    reply_error(res, e);
  } catch (const json::exception& e) {
    reply_json(res, 400,
               json{{"error", {{"kind", "format"}, {"message", e.what()}}}});
  } catch (const std::exception& e) {
    reply_json(res, 500,
               json{{"error", {{"kind", "internal"}, {"message", e.what()}}}});
  }
}

}  // namespace

ServiceHttp::ServiceHttp(ChallengeService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  route();
}

ServiceHttp::~ServiceHttp() = default;

void ServiceHttp::route() {
  httplib::Server& s = *server_;

  s.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, json{{"ok", true}});
  });

  s.Post("/api/v1/submissions",
         [this](const httplib::Request& req, httplib::Response& res) {
           guarded(res, [&] {
             if (!req.has_file("team_id") || !req.has_file("credential") ||
                 !req.has_file("archive"))
               throw Error(ErrorKind::Config,
                           "multipart fields team_id, credential and an "
                           "archive file are required");
             const auto file = req.get_file_value("archive");
             std::span<const std::uint8_t> bytes(
                 reinterpret_cast<const std::uint8_t*>(file.content.data()),
                 file.content.size());
             json record =
                 service_.submit(req.get_file_value("team_id").content,
                                 req.get_file_value("credential").content,
                                 bytes);
             reply_json(res, status_for_record(record), record);
           });
         });

  s.Get(R"(/api/v1/submissions/([A-Za-z0-9_-]+))",
        [this](const httplib::Request& req, httplib::Response& res) {
          guarded(res, [&] {
            reply_json(res, 200,
                       service_.get_submission(req.get_header_value("X-Team-Id"),
                                               req.get_header_value("X-Credential"),
                                               req.matches[1]));
          });
        });

  s.Get("/api/v1/leaderboard",
        [this](const httplib::Request& req, httplib::Response& res) {
          guarded(res, [&] {
            Phase phase = phase_from_string(
                req.has_param("phase") ? req.get_param_value("phase")
                                       : "progress");
            json board = service_.leaderboard(phase);
            reply_json(res, board.at("hidden").get<bool>() ? 403 : 200, board);
          });
        });

  s.Post("/api/v1/admin/teams",
         [this](const httplib::Request& req, httplib::Response& res) {
           guarded(res, [&] {
             json body = json::parse(req.body);
             reply_json(res, 200,
                        service_.register_team(
                            req.get_header_value("X-Admin-Credential"),
                            body.at("team_id").get<std::string>(),
                            body.value("display_name", ""),
                            body.at("credential").get<std::string>()));
           });
         });

  s.Post("/api/v1/admin/keys",
         [this](const httplib::Request& req, httplib::Response& res) {
           guarded(res, [&] {
             json body = json::parse(req.body);
             Phase phase =
                 phase_from_string(body.at("phase").get<std::string>());
             reply_json(res, 200,
                        service_.load_keys(
                            req.get_header_value("X-Admin-Credential"), phase,
                            body));
           });
         });

  s.Post("/api/v1/admin/phase",
         [this](const httplib::Request& req, httplib::Response& res) {
           guarded(res, [&] {
             PhaseConfig config = PhaseConfig::from_json(json::parse(req.body));
             reply_json(res, 200,
                        service_.set_phase_config(
                            req.get_header_value("X-Admin-Credential"),
                            config));
           });
         });

  s.Get("/api/v1/admin/audit",
        [this](const httplib::Request& req, httplib::Response& res) {
          guarded(res, [&] {
            reply_json(res, 200,
                       service_.export_audit(
                           req.get_header_value("X-Admin-Credential")));
          });
        });
}

bool ServiceHttp::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int ServiceHttp::bind_any_port(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool ServiceHttp::listen_after_bind() { return server_->listen_after_bind(); }

void ServiceHttp::stop() { server_->stop(); }

}  // namespace fame
