#include <string>
#include <vector>

#include "curate/ingest.hpp"
#include "internal.hpp"
#include "markup.hpp"

namespace curate {

ParsedVariant tei_to_variant(std::string_view tei_xml) {
  using markup::Token;
  const auto tokens = markup::scan(tei_xml);

  std::vector<std::string> paragraphs;
  std::string current;
  int skip_depth = 0;      // inside figure/note/table
  bool in_title_stmt = false;
  bool title_taken = false;
  bool in_abstract = false;
  bool in_body = false;
  int block_depth = 0;     // inside head/p/title being collected

  auto flush = [&] {
    std::string t = text::collapse_whitespace(current);
    if (!t.empty()) paragraphs.push_back(std::move(t));
    current.clear();
  };

  for (const Token& tok : tokens) {
    switch (tok.kind) {
      case Token::Kind::Open:
        if (tok.name == "figure" || tok.name == "note" || tok.name == "table" ||
            tok.name == "listbibl") {
          ++skip_depth;
        } else if (tok.name == "titlestmt") {
          in_title_stmt = true;
        } else if (tok.name == "abstract") {
          in_abstract = true;
        } else if (tok.name == "body") {
          in_body = true;
        } else if (skip_depth == 0 &&
                   ((tok.name == "title" && in_title_stmt && !title_taken) ||
                    ((tok.name == "p" || tok.name == "head") && (in_abstract || in_body)))) {
          if (block_depth == 0) current.clear();
          ++block_depth;
        } else if (tok.name == "lb" && block_depth > 0) {
          current += ' ';
        }
        break;
      case Token::Kind::Close:
        if (tok.name == "figure" || tok.name == "note" || tok.name == "table" ||
            tok.name == "listbibl") {
          if (skip_depth > 0) --skip_depth;
        } else if (tok.name == "titlestmt") {
          in_title_stmt = false;
        } else if (tok.name == "abstract") {
          in_abstract = false;
        } else if (tok.name == "body") {
          in_body = false;
        } else if (skip_depth == 0 && block_depth > 0 &&
                   (tok.name == "title" || tok.name == "p" || tok.name == "head")) {
          if (--block_depth == 0) {
            if (tok.name == "title") title_taken = true;
            flush();
          }
        }
        break;
      case Token::Kind::SelfClosing:
        if (block_depth > 0) current += ' ';
        break;
      case Token::Kind::Text:
        if (block_depth > 0 && skip_depth == 0) current += tok.text;
        break;
    }
  }
  return detail::variant_from_paragraphs(paragraphs);
}

}  // namespace curate
