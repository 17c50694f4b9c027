#include "curate/http_api.hpp"

#include <httplib.h>

#include <thread>

namespace curate {

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownDoc:
      return 404;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::RecordLocked:
    case ErrorCode::AlreadyLocked:
    case ErrorCode::InvalidTransition:
    case ErrorCode::DuplicateName:
      return 409;
    case ErrorCode::ServiceUnavailable:
    case ErrorCode::GenerationFailed:
      return 502;
    case ErrorCode::IoError:
      return 500;
    default:
      return 400;
  }
}

namespace {

nlohmann::json batch_summary(const BatchRow& b) {
  return {{"batch_id", b.id},
          {"project_id", b.project_id},
          {"seq", b.seq},
          {"phase", to_string(b.phase)},
          {"doc_ids", b.doc_ids},
          {"pool_version_used", b.pool_version_used},
          {"created_at", b.created_at},
          {"failures", b.failures}};
}

nlohmann::json document_json(const DocumentRow& d) {
  nlohmann::json j = {{"doc_id", d.doc_id},
                      {"source_uri", d.source_uri},
                      {"status", d.parsed ? "INGESTED" : "FAILED"},
                      {"error", d.error}};
  nlohmann::json variants = nlohmann::json::array();
  if (d.parsed) {
    for (const auto& [kind, _] : d.parsed->variants) variants.push_back(to_string(kind));
    j["ocr_applied"] = d.parsed->ocr_applied;
    j["tables"] = d.parsed->tables.size();
    j["failures"] = d.parsed->failures;
  }
  j["variants"] = std::move(variants);
  return j;
}

}  // namespace

nlohmann::json project_json(const ProjectView& v) {
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : v.documents) docs.push_back(document_json(d));
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& b : v.batches) samples.push_back(batch_summary(b));
  return {{"project_id", v.project.id},
          {"name", v.project.name},
          {"schema", v.project.schema},
          {"schema_version", v.project.schema.version()},
          {"retired", v.project.retired},
          {"pool_version", v.project.pool_version},
          {"created_at", v.project.created_at},
          {"documents", std::move(docs)},
          {"samples", std::move(samples)}};
}

nlohmann::json batch_json(const BatchView& v) {
  nlohmann::json j = batch_summary(v.batch);
  j["records"] = v.records;
  return j;
}

nlohmann::json audit_json(const AuditEvent& e) {
  return {{"event_id", e.event_id},
          {"actor", e.actor},
          {"kind", to_string(e.kind)},
          {"record_id", e.record_id ? nlohmann::json(*e.record_id) : nlohmann::json(nullptr)},
          {"column", e.column},
          {"before", e.before},
          {"after", e.after},
          {"timestamp", e.timestamp}};
}

struct ApiServer::Impl {
  CurationService& service;
  ApiOptions options;
  httplib::Server server;
  std::thread thread;

  Impl(CurationService& s, ApiOptions o) : service(s), options(std::move(o)) { routes(); }

  static void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, {{"error", {{"code", to_string(code)}, {"message", message}}}}, http_status_for(code));
  }

  static nlohmann::json body_of(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "request body must be a JSON object");
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("request body is not JSON: ") + e.what());
    }
  }

  static std::string actor_of(const httplib::Request& req, const nlohmann::json& body) {
    if (body.contains("actor") && body["actor"].is_string()) return body["actor"].get<std::string>();
    if (req.has_header("X-Actor")) return req.get_header_value("X-Actor");
    return "anonymous";
  }

  static std::int64_t id_of(const httplib::Request& req, std::size_t i = 1) { return std::stoll(req.matches[i]); }

  static std::string schema_text(const nlohmann::json& body) {
    if (!body.contains("schema")) throw Error(ErrorCode::SchemaParseError, "request has no schema");
    const auto& s = body["schema"];
    return s.is_string() ? s.get<std::string>() : s.dump();
  }

  static std::vector<DocumentSource> documents_of(const nlohmann::json& body) {
    std::vector<DocumentSource> out;
    if (!body.contains("documents")) return out;
    if (!body["documents"].is_array()) throw Error(ErrorCode::InvalidConfig, "documents must be a list");
    for (const auto& d : body["documents"]) {
      if (d.is_string()) {
        out.push_back({"", d.get<std::string>()});
      } else if (d.is_object() && d.contains("path")) {
        out.push_back({d.value("doc_id", std::string{}), d["path"].get<std::string>()});
      } else {
        throw Error(ErrorCode::InvalidConfig, "a document is a path or {doc_id, path}");
      }
    }
    return out;
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Authentication and error mapping around every route.
  Handler wrap(Handler h) {
    return [this, h](const httplib::Request& req, httplib::Response& res) {
      try {
        if (!options.bearer_token.empty() &&
            req.get_header_value("Authorization") != "Bearer " + options.bearer_token) {
          throw Error(ErrorCode::Unauthorized, "missing or wrong bearer token");
        }
        h(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::InvalidConfig, e.what());
      }
    };
  }

  void routes() {
    auto& s = service;
    server.Post("/projects", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      if (!body.contains("name") || !body["name"].is_string()) {
        throw Error(ErrorCode::InvalidConfig, "project needs a name");
      }
      const ProjectRow p = s.create_project(body["name"].get<std::string>(), schema_text(body), documents_of(body));
      send_json(res, project_json(s.project(p.id)), 201);
    }));
    server.Get("/projects", wrap([&s](const httplib::Request&, httplib::Response& res) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& p : s.projects()) {
        arr.push_back({{"project_id", p.id}, {"name", p.name}, {"schema", p.schema}, {"created_at", p.created_at}});
      }
      send_json(res, arr);
    }));
    server.Get(R"(/projects/(\d+))", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      send_json(res, project_json(s.project(id_of(req))));
    }));
    server.Put(R"(/projects/(\d+)/schema)", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      s.update_schema(id_of(req), schema_text(body));
      send_json(res, project_json(s.project(id_of(req))));
    }));
    server.Post(R"(/projects/(\d+)/documents)", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      const IngestSummary sum = s.add_documents(id_of(req), documents_of(body));
      send_json(res, {{"ingested", sum.ingested}, {"failed", sum.failed}}, 201);
    }));
    server.Post(R"(/projects/(\d+)/batches)", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      const Phase phase = phase_from_string(body.value("phase", std::string("PILOT")));
      const auto ids = body.value("doc_ids", std::vector<std::string>{});
      send_json(res, batch_json(s.run_batch(id_of(req), ids, phase)), 201);
    }));
    server.Get(R"(/projects/(\d+)/export)", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      const std::string fmt = req.has_param("format") ? req.get_param_value("format") : "json";
      const ExportFormat format = export_format_from_string(fmt);
      const std::string inc = req.has_param("include_irrelevant") ? req.get_param_value("include_irrelevant") : "";
      const std::string bytes = s.export_project(id_of(req), format, inc == "true" || inc == "1");
      res.set_content(bytes, format == ExportFormat::Csv ? "text/csv; charset=utf-8" : "application/json");
    }));
    server.Get(R"(/projects/(\d+)/audit)", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& e : s.audit(id_of(req))) arr.push_back(audit_json(e));
      send_json(res, arr);
    }));
    server.Get(R"(/batches/(\d+))", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      send_json(res, batch_json(s.batch(id_of(req))));
    }));
    server.Get(R"(/records/(\d+))", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      send_json(res, s.record(id_of(req)));
    }));
    server.Patch(R"(/records/(\d+)/cells/([^/]+))", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      if (!body.contains("value") || !body["value"].is_string()) {
        throw Error(ErrorCode::InvalidConfig, "edit needs a string value");
      }
      const std::string column = httplib::detail::decode_url(req.matches[2], false);
      send_json(res, s.apply_edit(id_of(req), column, body["value"].get<std::string>(), actor_of(req, body)));
    }));
    auto action = [&s](auto fn) {
      return [&s, fn](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        (s.*fn)(id_of(req), actor_of(req, body));
        send_json(res, s.record(id_of(req)));
      };
    };
    server.Post(R"(/records/(\d+)/lock)", wrap(action(&CurationService::lock_record)));
    server.Post(R"(/records/(\d+)/unlock)", wrap(action(&CurationService::unlock_record)));
    server.Post(R"(/records/(\d+)/irrelevant)", wrap(action(&CurationService::mark_irrelevant)));
    server.Delete(R"(/records/(\d+)/irrelevant)", wrap(action(&CurationService::unmark_irrelevant)));
    server.Get(R"(/records/(\d+)/provenance)", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      send_json(res, {{"record_id", id_of(req)}, {"cells", s.provenance(id_of(req))}});
    }));
    server.Get(R"(/records/(\d+)/support)", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      const std::string column = req.has_param("column") ? req.get_param_value("column") : "";
      const std::size_t k = req.has_param("k") ? std::stoul(req.get_param_value("k")) : kDefaultSupportK;
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& p : s.support(id_of(req), column, k, actor_of(req, nlohmann::json::object()))) {
        arr.push_back({{"index", p.paragraph.index},
                       {"text", p.paragraph.text},
                       {"char_span", {p.paragraph.char_span.begin, p.paragraph.char_span.end}},
                       {"score", p.score},
                       {"highlighted", p.highlighted}});
      }
      send_json(res, {{"record_id", id_of(req)}, {"column", column}, {"paragraphs", std::move(arr)}});
    }));
    server.Post(R"(/records/(\d+)/explain)", wrap([&s](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      const std::string column = body.value("column", std::string{});
      const auto ex = s.explain(id_of(req), column, actor_of(req, body));
      send_json(res, {{"record_id", id_of(req)}, {"column", column}, {"explanation", ex.text}});
    }));
  }
};

ApiServer::ApiServer(CurationService& service, ApiOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

int ApiServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ApiServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace curate
