#include "curate/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cstdio>

#include "curate/error.hpp"

namespace curate {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableSource: return "UnreadableSource";
    case ErrorCode::ServiceUnavailable: return "ServiceUnavailable";
    case ErrorCode::EmptyExtraction: return "EmptyExtraction";
    case ErrorCode::MalformedTable: return "MalformedTable";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UnknownDoc: return "UnknownDoc";
    case ErrorCode::EmptySchema: return "EmptySchema";
    case ErrorCode::OutputUnparseable: return "OutputUnparseable";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::MalformedDump: return "MalformedDump";
    case ErrorCode::DocIdMismatch: return "DocIdMismatch";
    case ErrorCode::SchemaParseError: return "SchemaParseError";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::DocsNotIngested: return "DocsNotIngested";
    case ErrorCode::PilotCapExceeded: return "PilotCapExceeded";
    case ErrorCode::RecordLocked: return "RecordLocked";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::AlreadyLocked: return "AlreadyLocked";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::NoBatches: return "NoBatches";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace text {

namespace {

template <typename Fn>
void for_each_code_point(std::string_view utf8, Fn&& fn) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto n = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < n) {
    const int32_t start = i;
    UChar32 c = 0;
    U8_NEXT(bytes, i, n, c);
    if (c < 0) c = 0xFFFD;
    fn(static_cast<char32_t>(c), static_cast<std::size_t>(start));
  }
}

}  // namespace

std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  for_each_code_point(utf8, [&](char32_t c, std::size_t) { out.push_back(c); });
  return out;
}

std::string to_utf8(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t c : cps) {
    uint8_t buf[4];
    int32_t len = 0;
    UBool error = false;
    U8_APPEND(buf, len, 4, static_cast<UChar32>(c), error);
    if (error) {
      out += "\xEF\xBF\xBD";
    } else {
      out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
    }
  }
  return out;
}

std::size_t length(std::string_view utf8) {
  std::size_t n = 0;
  for_each_code_point(utf8, [&](char32_t, std::size_t) { ++n; });
  return n;
}

std::vector<std::size_t> code_point_offsets(std::string_view utf8) {
  std::vector<std::size_t> offsets;
  offsets.reserve(utf8.size() + 1);
  for_each_code_point(utf8, [&](char32_t, std::size_t at) { offsets.push_back(at); });
  offsets.push_back(utf8.size());
  return offsets;
}

std::string slice(std::string_view utf8, Span span) {
  const auto offsets = code_point_offsets(utf8);
  const std::size_t last = offsets.size() - 1;
  const std::size_t b = offsets[std::min(span.begin, last)];
  const std::size_t e = offsets[std::min(span.end, last)];
  if (e <= b) return {};
  return std::string(utf8.substr(b, e - b));
}

bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

bool is_alnum(char32_t cp) { return u_isalnum(static_cast<UChar32>(cp)); }

char32_t fold_simple(char32_t cp) {
  return static_cast<char32_t>(u_foldCase(static_cast<UChar32>(cp), U_FOLD_CASE_DEFAULT));
}

std::string fold_case(std::string_view utf8) {
  auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  us.foldCase(U_FOLD_CASE_DEFAULT);
  std::string out;
  us.toUTF8String(out);
  return out;
}

std::string to_nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(utf8);
  auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString normalized = nfc->normalize(us, status);
  if (U_FAILURE(status)) return std::string(utf8);
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string trim(std::string_view s) {
  const auto cps = to_u32(s);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && is_space(cps[b])) ++b;
  while (e > b && is_space(cps[e - 1])) --e;
  return to_utf8(std::u32string_view(cps).substr(b, e - b));
}

std::string collapse_whitespace(std::string_view utf8) {
  std::u32string out;
  bool pending_space = false;
  for_each_code_point(utf8, [&](char32_t c, std::size_t) {
    if (is_space(c)) {
      pending_space = !out.empty();
      return;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  });
  return to_utf8(out);
}

std::vector<std::string> tokenize(std::string_view utf8) {
  std::vector<std::string> tokens;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(fold_case(to_utf8(current)));
      current.clear();
    }
  };
  for_each_code_point(utf8, [&](char32_t c, std::size_t) {
    if (is_alnum(c)) {
      current.push_back(c);
    } else {
      flush();
    }
  });
  flush();
  return tokens;
}

FoldedText fold_for_matching(std::string_view utf8) {
  FoldedText out;
  bool pending_space = false;
  std::size_t pending_index = 0;
  std::size_t index = 0;
  for_each_code_point(utf8, [&](char32_t c, std::size_t) {
    if (is_space(c)) {
      if (!out.chars.empty() && !pending_space) {
        pending_space = true;
        pending_index = index;
      }
    } else {
      if (pending_space) {
        out.chars.push_back(U' ');
        out.source_index.push_back(pending_index);
        pending_space = false;
      }
      out.chars.push_back(fold_simple(c));
      out.source_index.push_back(index);
    }
    ++index;
  });
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(s.substr(start));
      break;
    }
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace text
}  // namespace curate
