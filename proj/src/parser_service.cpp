#include "curate/parser_service.hpp"

#include <filesystem>

#include "curate/config.hpp"
#include "curate/error.hpp"
#include "internal.hpp"

namespace curate {

namespace fs = std::filesystem;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string SidecarParserService::extract(const SourceFile& source) {
  const bool structured = kind_ == ParserKind::StructuredTei;
  const std::string own_ext = structured ? ".tei.xml" : ".txt";
  if (ends_with(source.path, own_ext)) return source.bytes;
  const fs::path sidecar = detail::sidecar_path(source.path, own_ext);
  if (!fs::exists(sidecar)) {
    throw Error(ErrorCode::ServiceUnavailable,
                std::string(to_string(kind_)) + " output not available for " + source.path);
  }
  return detail::read_file(sidecar.string());
}

ParserServices make_parser_services(const Config& config) {
  ParserServices services;
  const std::string profile = config.get("parser_profile", "http");
  if (profile == "sidecar") {
    services.structured = std::make_unique<SidecarParserService>(ParserKind::StructuredTei);
    services.generic = std::make_unique<SidecarParserService>(ParserKind::GenericText);
  } else if (profile == "http") {
    services.structured = std::make_unique<GrobidClient>(config.get("grobid_url"));
    services.generic = std::make_unique<TikaClient>(config.get("tika_url"));
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown parser_profile: " + profile);
  }
  return services;
}

}  // namespace curate
