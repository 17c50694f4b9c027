#pragma once

// JSON-over-HTTP front of CurationService.
//
//   POST   /projects                         {name, schema, documents?}
//   GET    /projects
//   GET    /projects/{id}
//   PUT    /projects/{id}/schema             {schema}
//   POST   /projects/{id}/documents          {documents}
//   POST   /projects/{id}/batches            {phase, doc_ids}
//   GET    /projects/{id}/export?format=csv|json&include_irrelevant=false
//   GET    /projects/{id}/audit
//   GET    /batches/{id}
//   GET    /records/{id}
//   PATCH  /records/{id}/cells/{column}      {value}
//   POST   /records/{id}/lock | /unlock | /irrelevant
//   DELETE /records/{id}/irrelevant
//   GET    /records/{id}/provenance
//   GET    /records/{id}/support?column=&k=3
//   POST   /records/{id}/explain             {column}
//
// Documents are `"path"` or `{"doc_id", "path"}`. The acting curator comes
// from the body's `actor` or the `X-Actor` header. Errors are
// `{"error": {"code", "message"}}`.

#include <memory>
#include <string>

#include <json.hpp>

#include "curate/error.hpp"
#include "curate/service.hpp"

namespace curate {

struct ApiOptions {
  /// Required as `Authorization: Bearer <token>` when non-empty.
  std::string bearer_token;
};

int http_status_for(ErrorCode code);

nlohmann::json project_json(const ProjectView& view);
nlohmann::json batch_json(const BatchView& view);
nlohmann::json audit_json(const AuditEvent& event);

class ApiServer {
 public:
  ApiServer(CurationService& service, ApiOptions options = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Port 0 picks a free port; returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  /// bind() plus listen() on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace curate
