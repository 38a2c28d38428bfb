#pragma once

#include <string>

#include "fame/service.hpp"

namespace httplib {
class Server;
}

namespace fame {

// HTTP/JSON front of ChallengeService.
//
//   POST /api/v1/submissions            multipart: team_id, credential, archive
//   GET  /api/v1/submissions/<id>       headers X-Team-Id, X-Credential
//   GET  /api/v1/leaderboard?phase=progress|evaluation
//   POST /api/v1/admin/teams            header X-Admin-Credential, JSON body
//   POST /api/v1/admin/keys             header X-Admin-Credential, JSON body
//   POST /api/v1/admin/phase            header X-Admin-Credential, JSON body
//   GET  /api/v1/admin/audit            header X-Admin-Credential
//   GET  /api/v1/health
class ServiceHttp {
 public:
  explicit ServiceHttp(ChallengeService& service);
  ~ServiceHttp();

  // Blocks until stop(); returns false if the port cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; serve with listen_after_bind.
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();

 private:
  void route();

  ChallengeService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace fame
