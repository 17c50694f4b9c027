#pragma once

#include <memory>
#include <string>

#include "curate/ingest.hpp"

namespace curate {

class Config;

/// Raw extraction service for one pipeline. Returns TEI XML for the
/// structured pipeline and plain text for the generic one.
class ParserServiceClient {
 public:
  virtual ~ParserServiceClient() = default;
  virtual std::string extract(const SourceFile& source) = 0;
};

/// GROBID-compatible `POST /api/processFulltextDocument` (multipart `input`).
class GrobidClient final : public ParserServiceClient {
 public:
  explicit GrobidClient(std::string base_url) : base_url_(std::move(base_url)) {}
  std::string extract(const SourceFile& source) override;

 private:
  std::string base_url_;
};

/// Tika-compatible `PUT /tika` with `Accept: text/plain`.
class TikaClient final : public ParserServiceClient {
 public:
  explicit TikaClient(std::string base_url) : base_url_(std::move(base_url)) {}
  std::string extract(const SourceFile& source) override;

 private:
  std::string base_url_;
};

/// Offline stand-in that reads pre-extracted sidecars next to the source:
/// `<stem>.tei.xml` for the structured pipeline and `<stem>.txt` for the
/// generic one. A source that already is one of those files is used as is.
class SidecarParserService final : public ParserServiceClient {
 public:
  explicit SidecarParserService(ParserKind kind) : kind_(kind) {}
  std::string extract(const SourceFile& source) override;

 private:
  ParserKind kind_;
};

struct ParserServices {
  std::unique_ptr<ParserServiceClient> structured;
  std::unique_ptr<ParserServiceClient> generic;

  PipelineClients clients() const { return {structured.get(), generic.get()}; }
};

/// `parser_profile = http | sidecar`.
ParserServices make_parser_services(const Config& config);

}  // namespace curate
