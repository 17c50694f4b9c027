#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "curate/ingest.hpp"

namespace curate::detail {

ParsedVariant variant_from_paragraphs(const std::vector<std::string>& paragraphs);

/// `dir/doc.pdf` + `.txt` -> `dir/doc.txt`; known extensions are stripped first.
std::filesystem::path sidecar_path(const std::string& source_path, const std::string& suffix);

std::string read_file(const std::string& path);

}  // namespace curate::detail
