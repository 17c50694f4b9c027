#pragma once

// Minimal tag scanner for the XML/HTML fragments the parser pipelines
// return. Not a validating parser: it yields a flat token stream.

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace curate::markup {

struct Token {
  enum class Kind { Text, Open, Close, SelfClosing };
  Kind kind = Kind::Text;
  /// Lowercased local name (namespace prefix dropped) for tags.
  std::string name;
  std::map<std::string, std::string> attrs;
  /// Entity-decoded text for Text tokens.
  std::string text;
};

std::string decode_entities(std::string_view s);

/// Comments, processing instructions, doctype and CDATA markers are
/// dropped (CDATA content is kept as text).
std::vector<Token> scan(std::string_view source);

}  // namespace curate::markup
