#include "markup.hpp"

#include <cctype>
#include <cstdlib>

#include "curate/text.hpp"

namespace curate::markup {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string local_name(std::string_view name) {
  const auto colon = name.find(':');
  if (colon != std::string_view::npos) name = name.substr(colon + 1);
  return lower(name);
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

void parse_tag(std::string_view body, Token& tok) {
  std::size_t i = 0;
  while (i < body.size() && !is_ws(body[i]) && body[i] != '/') ++i;
  tok.name = local_name(body.substr(0, i));
  while (i < body.size()) {
    while (i < body.size() && (is_ws(body[i]) || body[i] == '/')) ++i;
    const std::size_t name_start = i;
    while (i < body.size() && !is_ws(body[i]) && body[i] != '=' && body[i] != '/') ++i;
    if (i == name_start) break;
    const std::string attr = local_name(body.substr(name_start, i - name_start));
    while (i < body.size() && is_ws(body[i])) ++i;
    std::string value;
    if (i < body.size() && body[i] == '=') {
      ++i;
      while (i < body.size() && is_ws(body[i])) ++i;
      if (i < body.size() && (body[i] == '"' || body[i] == '\'')) {
        const char quote = body[i++];
        const std::size_t vstart = i;
        while (i < body.size() && body[i] != quote) ++i;
        value = decode_entities(body.substr(vstart, i - vstart));
        if (i < body.size()) ++i;
      } else {
        const std::size_t vstart = i;
        while (i < body.size() && !is_ws(body[i])) ++i;
        value = decode_entities(body.substr(vstart, i - vstart));
      }
    }
    tok.attrs[attr] = value;
  }
}

}  // namespace

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += s[i++];
      continue;
    }
    const std::string_view ent = s.substr(i + 1, semi - i - 1);
    std::u32string cp;
    if (ent == "amp") cp = U"&";
    else if (ent == "lt") cp = U"<";
    else if (ent == "gt") cp = U">";
    else if (ent == "quot") cp = U"\"";
    else if (ent == "apos") cp = U"'";
    else if (ent == "nbsp") cp = U" ";
    else if (!ent.empty() && ent[0] == '#') {
      const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      const std::string digits(ent.substr(hex ? 2 : 1));
      char* end = nullptr;
      const long v = std::strtol(digits.c_str(), &end, hex ? 16 : 10);
      if (!digits.empty() && end && *end == '\0' && v > 0 && v < 0x110000) {
        cp = std::u32string(1, static_cast<char32_t>(v));
      }
    }
    if (cp.empty()) {
      out += s[i++];
      continue;
    }
    out += text::to_utf8(cp);
    i = semi + 1;
  }
  return out;
}

std::vector<Token> scan(std::string_view src) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  auto emit_text = [&](std::string_view raw, bool decode) {
    if (raw.empty()) return;
    Token t;
    t.kind = Token::Kind::Text;
    t.text = decode ? decode_entities(raw) : std::string(raw);
    tokens.push_back(std::move(t));
  };
  while (i < src.size()) {
    const auto lt = src.find('<', i);
    if (lt == std::string_view::npos) {
      emit_text(src.substr(i), true);
      break;
    }
    emit_text(src.substr(i, lt - i), true);
    if (src.compare(lt, 4, "<!--") == 0) {
      const auto end = src.find("-->", lt + 4);
      i = end == std::string_view::npos ? src.size() : end + 3;
      continue;
    }
    if (src.compare(lt, 9, "<![CDATA[") == 0) {
      const auto end = src.find("]]>", lt + 9);
      const auto stop = end == std::string_view::npos ? src.size() : end;
      emit_text(src.substr(lt + 9, stop - lt - 9), false);
      i = end == std::string_view::npos ? src.size() : end + 3;
      continue;
    }
    const auto gt = src.find('>', lt + 1);
    if (gt == std::string_view::npos) {
      emit_text(src.substr(lt), true);
      break;
    }
    std::string_view body = src.substr(lt + 1, gt - lt - 1);
    i = gt + 1;
    if (body.empty() || body[0] == '?' || body[0] == '!') continue;
    Token t;
    if (body[0] == '/') {
      t.kind = Token::Kind::Close;
      t.name = local_name(text::trim(body.substr(1)));
    } else {
      const bool self_closing = body.back() == '/';
      if (self_closing) body.remove_suffix(1);
      t.kind = self_closing ? Token::Kind::SelfClosing : Token::Kind::Open;
      parse_tag(body, t);
    }
    tokens.push_back(std::move(t));
  }
  return tokens;
}

}  // namespace curate::markup
