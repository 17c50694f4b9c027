#include <algorithm>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "curate/error.hpp"
#include "curate/ingest.hpp"
#include "markup.hpp"

namespace curate {

namespace {

struct RawCell {
  std::string text;
  std::size_t rowspan = 1;
  std::size_t colspan = 1;
};

std::size_t span_attr(const std::map<std::string, std::string>& attrs, const char* key) {
  const auto it = attrs.find(key);
  if (it == attrs.end()) return 1;
  const long v = std::strtol(it->second.c_str(), nullptr, 10);
  return v >= 1 ? static_cast<std::size_t>(std::min(v, 1000L)) : 1;
}

std::string escape_cell(const std::string& raw) {
  std::string out;
  for (char c : text::collapse_whitespace(raw)) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string render_row(const std::vector<std::string>& cells) {
  std::string line = "|";
  for (const auto& c : cells) line += " " + c + " |";
  return line;
}

}  // namespace

std::string html_table_to_markdown(std::string_view html_table) {
  using markup::Token;
  std::vector<std::vector<RawCell>> rows;
  bool in_row = false;
  int cell_depth = 0;
  for (const Token& tok : markup::scan(html_table)) {
    if (tok.kind == Token::Kind::Open && tok.name == "tr") {
      rows.emplace_back();
      in_row = true;
      cell_depth = 0;
    } else if (tok.kind == Token::Kind::Close && tok.name == "tr") {
      in_row = false;
      cell_depth = 0;
    } else if (in_row && tok.kind == Token::Kind::Open && (tok.name == "td" || tok.name == "th")) {
      rows.back().push_back({{}, span_attr(tok.attrs, "rowspan"), span_attr(tok.attrs, "colspan")});
      cell_depth = 1;
    } else if (in_row && tok.kind == Token::Kind::Close && (tok.name == "td" || tok.name == "th")) {
      cell_depth = 0;
    } else if (cell_depth > 0 && tok.kind == Token::Kind::Text) {
      rows.back().back().text += tok.text;
    } else if (cell_depth > 0 && tok.kind != Token::Kind::Text) {
      rows.back().back().text += ' ';
    }
  }
  rows.erase(std::remove_if(rows.begin(), rows.end(), [](const auto& r) { return r.empty(); }),
             rows.end());
  if (rows.empty()) throw Error(ErrorCode::MalformedTable, "no table rows found");

  // Flatten spans by duplicating content into every covered slot.
  std::vector<std::vector<std::string>> grid;
  std::map<std::size_t, std::pair<std::string, std::size_t>> carried;  // col -> (text, rows left)
  for (const auto& row : rows) {
    std::vector<std::string> out;
    std::size_t col = 0;
    auto fill_carried = [&] {
      while (true) {
        const auto it = carried.find(col);
        if (it == carried.end()) break;
        out.resize(std::max(out.size(), col + 1));
        out[col] = it->second.first;
        if (--it->second.second == 0) carried.erase(it);
        ++col;
      }
    };
    for (const auto& cell : row) {
      fill_carried();
      const std::string value = escape_cell(cell.text);
      for (std::size_t k = 0; k < cell.colspan; ++k) {
        out.resize(std::max(out.size(), col + 1));
        out[col] = value;
        if (cell.rowspan > 1) carried[col] = {value, cell.rowspan - 1};
        ++col;
      }
    }
    fill_carried();
    // Carried cells beyond the last explicit cell of this row.
    for (auto it = carried.begin(); it != carried.end();) {
      if (it->first >= col) {
        out.resize(std::max(out.size(), it->first + 1));
        out[it->first] = it->second.first;
        if (--it->second.second == 0) {
          it = carried.erase(it);
          continue;
        }
      }
      ++it;
    }
    grid.push_back(std::move(out));
  }

  std::size_t width = 0;
  for (const auto& r : grid) width = std::max(width, r.size());
  for (auto& r : grid) r.resize(width);

  std::vector<std::string> lines;
  lines.push_back(render_row(grid.front()));
  lines.push_back(render_row(std::vector<std::string>(width, "---")));
  for (std::size_t i = 1; i < grid.size(); ++i) lines.push_back(render_row(grid[i]));
  return text::join(lines, "\n");
}

}  // namespace curate
