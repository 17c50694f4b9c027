// Eigen before httplib; <resolv.h> defines a `_res` macro.
#include "curate/aligner.hpp"
#include "curate/error.hpp"
#include "curate/llm.hpp"
#include "curate/parser_service.hpp"

#include <httplib.h>

#include <filesystem>

namespace curate {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Endpoint split_url(const std::string& url) {
  std::string u = url.find("://") == std::string::npos ? "http://" + url : url;
  const std::size_t host_start = u.find("://") + 3;
  const std::size_t slash = u.find('/', host_start);
  Endpoint e;
  e.origin = slash == std::string::npos ? u : u.substr(0, slash);
  e.prefix = slash == std::string::npos ? "" : u.substr(slash);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

httplib::Client make_client(const Endpoint& e, int read_timeout_s) {
  httplib::Client cli(e.origin);
  cli.set_connection_timeout(10, 0);
  cli.set_read_timeout(read_timeout_s, 0);
  cli.set_write_timeout(60, 0);
  return cli;
}

std::string expect_ok(const httplib::Result& res, const std::string& what) {
  if (!res) throw Error(ErrorCode::ServiceUnavailable, what + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::ServiceUnavailable, what + ": HTTP " + std::to_string(res->status));
  }
  return res->body;
}

}  // namespace

std::string GrobidClient::extract(const SourceFile& source) {
  const Endpoint e = split_url(base_url_);
  auto cli = make_client(e, 300);
  httplib::MultipartFormDataItems items = {
      {"input", source.bytes, std::filesystem::path(source.path).filename().string(), "application/pdf"},
      {"consolidateHeader", "0", "", ""},
  };
  return expect_ok(cli.Post(e.prefix + "/api/processFulltextDocument", items), "structured parser");
}

std::string TikaClient::extract(const SourceFile& source) {
  const Endpoint e = split_url(base_url_);
  auto cli = make_client(e, 300);
  httplib::Headers headers = {{"Accept", "text/plain"}};
  return expect_ok(cli.Put(e.prefix + "/tika", headers, source.bytes, "application/octet-stream"), "text parser");
}

HttpLlmProvider::HttpLlmProvider(std::string base_url, std::string model, std::string token,
                                 std::size_t context_chars)
    : base_url_(std::move(base_url)), model_(std::move(model)), token_(std::move(token)),
      context_chars_(context_chars) {}

std::string HttpLlmProvider::complete(const std::string& prompt) {
  const Endpoint e = split_url(base_url_);
  auto cli = make_client(e, 600);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  const nlohmann::json body = {{"model", model_},
                               {"temperature", 0},
                               {"messages", {{{"role", "user"}, {"content", prompt}}}}};
  const std::string raw =
      expect_ok(cli.Post(e.prefix + "/v1/chat/completions", headers, body.dump(), "application/json"), "LLM");
  try {
    const auto j = nlohmann::json::parse(raw);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ServiceUnavailable, std::string("LLM response has no message content: ") + ex.what());
  }
}

Eigen::VectorXd HttpEmbeddingProvider::embed(std::string_view text) {
  const Eigen::MatrixXd m = embed_batch({std::string(text)});
  return m.row(0).transpose();
}

Eigen::MatrixXd HttpEmbeddingProvider::embed_batch(const std::vector<std::string>& texts) {
  const Endpoint e = split_url(url_);
  auto cli = make_client(e, 120);
  const nlohmann::json body = {{"input", texts}};
  const std::string raw = expect_ok(cli.Post(e.prefix.empty() ? "/" : e.prefix, body.dump(), "application/json"),
                                    "embedding service");
  std::vector<std::vector<double>> vectors;
  try {
    const auto j = nlohmann::json::parse(raw);
    if (j.contains("data")) {
      for (const auto& item : j["data"]) vectors.push_back(item.at("embedding").get<std::vector<double>>());
    } else {
      vectors = j.at("embeddings").get<std::vector<std::vector<double>>>();
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ServiceUnavailable, std::string("embedding response: ") + ex.what());
  }
  if (vectors.size() != texts.size()) {
    throw Error(ErrorCode::ServiceUnavailable, "embedding service returned " + std::to_string(vectors.size()) +
                                                   " vectors for " + std::to_string(texts.size()) + " inputs");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(texts.size()), dim_);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (static_cast<Eigen::Index>(vectors[i].size()) != dim_) {
      throw Error(ErrorCode::ServiceUnavailable, "embedding has dimension " + std::to_string(vectors[i].size()));
    }
    for (Eigen::Index c = 0; c < dim_; ++c) {
      const double v = vectors[i][static_cast<std::size_t>(c)];
      if (!std::isfinite(v)) throw Error(ErrorCode::ServiceUnavailable, "embedding has a non-finite component");
      m(static_cast<Eigen::Index>(i), c) = v;
    }
  }
  return m;
}

}  // namespace curate
