#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace curate::csv {

/// RFC 4180 field quoting: fields containing a comma, quote, CR or LF are
/// wrapped in quotes with embedded quotes doubled.
std::string escape(std::string_view field);

std::string format_row(const std::vector<std::string>& fields);

/// Parses all rows; quoted fields may span lines. Lines end in LF or CRLF.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace curate::csv
