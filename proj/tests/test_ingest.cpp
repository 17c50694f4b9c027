#include <gtest/gtest.h>

#include <random>

#include "curate/error.hpp"
#include "curate/ingest.hpp"
#include "curate/parser_service.hpp"
#include "support.hpp"

#include <httplib.h>

using namespace curate;
using curate::testing_support::fixture;
using curate::testing_support::read_all;
using curate::testing_support::TempDir;
using curate::testing_support::write_all;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

/// Independent reader for the pipe-table dialect: header, separator, rows.
std::vector<std::vector<std::string>> parse_markdown_table(const std::string& md) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& line : text::split(md, '\n')) {
    if (line.rfind("| ---", 0) == 0) continue;
    std::vector<std::string> cells;
    std::string cur;
    for (std::size_t i = 1; i < line.size(); ++i) {
      if (line[i] == '\\' && i + 1 < line.size() && line[i + 1] == '|') {
        cur += '|';
        ++i;
      } else if (line[i] == '|') {
        cells.push_back(text::trim(cur));
        cur.clear();
      } else {
        cur += line[i];
      }
    }
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Routing, TextLayerDecidesOcr) {
  TempDir dir;
  write_all(dir.path() / "a.pdf", "%PDF-1.4 /Font /F1");
  write_all(dir.path() / "b.pdf", "%PDF-1.4 /Image only");
  write_all(dir.path() / "c.txt", "plain");
  write_all(dir.path() / "empty.pdf", "");

  EXPECT_FALSE(route_document(probe_source(dir.file("a.pdf"))).ocr);
  EXPECT_TRUE(route_document(probe_source(dir.file("b.pdf"))).ocr);
  EXPECT_FALSE(route_document(probe_source(dir.file("c.txt"))).ocr);
  EXPECT_EQ(route_document(probe_source(dir.file("a.pdf"))).parsers.size(), 2u);
  EXPECT_EQ(code_of([&] { route_document(probe_source(dir.file("empty.pdf"))); }), ErrorCode::UnreadableSource);
  EXPECT_EQ(code_of([&] { route_document(probe_source(dir.file("missing.pdf"))); }), ErrorCode::UnreadableSource);
}

TEST(Segment, ParagraphSpansIndexTheJoinedText) {
  const ParsedVariant v = segment_paragraphs("  First line\nwraps here.\n\n\n\nSecond \xC3\xA9t\xC3\xA9.\n  \n\nThird");
  ASSERT_EQ(v.paragraphs.size(), 3u);
  EXPECT_EQ(v.paragraphs[0].text, "First line\nwraps here.");
  EXPECT_EQ(v.text, "First line\nwraps here.\n\nSecond \xC3\xA9t\xC3\xA9.\n\nThird");
  for (const auto& p : v.paragraphs) EXPECT_EQ(text::slice(v.text, p.char_span), p.text);
  EXPECT_EQ(v.paragraphs[1].char_span, (text::Span{24, 35}));
}

TEST(Tei, FixtureDocumentParagraphs) {
  const ParsedVariant v = tei_to_variant(read_all(fixture("corpus/qa_bert.tei.xml")));
  ASSERT_GE(v.paragraphs.size(), 8u);
  EXPECT_EQ(v.paragraphs[0].text, "Pre-training Deep Bidirectional Transformers for Reading Comprehension");
  EXPECT_EQ(v.paragraphs[2].text, "Introduction");
  EXPECT_EQ(v.text.find("Reference entry"), std::string::npos);
  for (const auto& p : v.paragraphs) EXPECT_EQ(text::slice(v.text, p.char_span), p.text);
}

TEST(Tei, SkipsFiguresAndDecodesEntities) {
  const std::string tei = R"(<TEI><text><body><div><p>A &amp; B<figure><p>caption text</p></figure> end</p>
    <note place="foot"><p>footnote</p></note><p>x&lt;y &#233;</p></div></body></text></TEI>)";
  const ParsedVariant v = tei_to_variant(tei);
  ASSERT_EQ(v.paragraphs.size(), 2u);
  EXPECT_EQ(v.paragraphs[0].text, "A & B end");
  EXPECT_EQ(v.paragraphs[1].text, "x<y \xC3\xA9");
}

TEST(HtmlTable, SpansAreDuplicated) {
  const std::string html =
      "<table><tr><th rowspan=2>Model</th><th colspan=2>Error</th></tr>"
      "<tr><th>top-1</th><th>top-5</th></tr>"
      "<tr><td>A|B</td><td>19.38</td><td>4.49</td></tr></table>";
  const std::string md = html_table_to_markdown(html);
  EXPECT_EQ(md,
            "| Model | Error | Error |\n"
            "| --- | --- | --- |\n"
            "| Model | top-1 | top-5 |\n"
            "| A\\|B | 19.38 | 4.49 |");
}

TEST(HtmlTable, NoRowsIsMalformed) {
  EXPECT_EQ(code_of([] { html_table_to_markdown("<table></table>"); }), ErrorCode::MalformedTable);
  EXPECT_EQ(code_of([] { html_table_to_markdown("not a table"); }), ErrorCode::MalformedTable);
}

TEST(HtmlTable, RandomGridsRoundTripThroughMarkdown) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> words = {"a", "b|c", "19.38", "x y", "&amp;", "\xC3\xA9"};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = 1 + rng() % 4;
    const std::size_t cols = 1 + rng() % 4;
    std::vector<std::vector<std::string>> grid(rows, std::vector<std::string>(cols));
    std::string html = "<table>";
    for (auto& row : grid) {
      html += "<tr>";
      for (auto& cell : row) {
        const std::string w = words[rng() % words.size()];
        html += "<td>" + w + "</td>";
        cell = w == "&amp;" ? "&" : w;
      }
      html += "</tr>";
    }
    html += "</table>";
    ASSERT_EQ(parse_markdown_table(html_table_to_markdown(html)), grid) << html;
  }
}

TEST(MergeTables, InsertsAtNextParagraphBoundary) {
  const std::string t = "Alpha.\n\nBeta gamma.\n\nDelta.";
  const std::string merged = merge_tables(t, {{"| a |\n| --- |", "Table 1", 9}});
  EXPECT_EQ(merged, "Alpha.\n\nBeta gamma.\n\nTable 1\n\n| a |\n| --- |\n\nDelta.");
  EXPECT_EQ(merge_tables(t, {{"| z |", "", 1000}}), t + "\n\n| z |");
  EXPECT_EQ(merge_tables(t, {}), t);
}

TEST(MergeTables, MatchesParagraphListOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> paras(1 + rng() % 5);
    for (auto& p : paras) p = std::string(1 + rng() % 12, static_cast<char>('a' + rng() % 26));
    const std::string t = text::join(paras, "\n\n");
    std::vector<TableBlock> tables(rng() % 4);
    for (std::size_t i = 0; i < tables.size(); ++i) {
      tables[i] = {"| t" + std::to_string(i) + " |", rng() % 2 ? "Cap " + std::to_string(i) : "",
                   static_cast<std::size_t>(rng() % (t.size() + 3))};
    }
    // Oracle: a table lands after the first paragraph whose end reaches its anchor.
    std::vector<std::size_t> ends;
    std::size_t pos = 0;
    for (const auto& p : paras) {
      pos += p.size();
      ends.push_back(pos);
      pos += 2;
    }
    auto sorted = tables;
    std::stable_sort(sorted.begin(), sorted.end(), [](const TableBlock& a, const TableBlock& b) {
      return std::tie(a.anchor_char_offset, a.caption, a.markdown) <
             std::tie(b.anchor_char_offset, b.caption, b.markdown);
    });
    std::string expect;
    for (std::size_t i = 0; i < paras.size(); ++i) {
      if (i) expect += "\n\n";
      expect += paras[i];
      for (const auto& tb : sorted) {
        const std::size_t anchor = std::min(tb.anchor_char_offset, t.size());
        const bool here = anchor <= ends[i] && (i == 0 || anchor > ends[i - 1]);
        if (!here) continue;
        expect += "\n\n" + (tb.caption.empty() ? "" : tb.caption + "\n\n") + tb.markdown;
      }
    }
    ASSERT_EQ(merge_tables(t, tables), expect);
  }
}

TEST(Chunking, WorkedExample) {
  const auto chunks = chunk_text(std::string(250, 'x'), 100, 0.10);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].span, (text::Span{0, 100}));
  EXPECT_EQ(chunks[1].span, (text::Span{90, 190}));
  EXPECT_EQ(chunks[2].span, (text::Span{180, 250}));
}

TEST(Chunking, ShortTextIsOneChunk) {
  const auto chunks = chunk_text("short", 100);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].text, "short");
}

TEST(Chunking, RejectsDegenerateParameters) {
  EXPECT_EQ(code_of([] { chunk_text("abc", 0); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { chunk_text("abc", 10, 1.0); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { chunk_text("abc", 10, -0.1); }), ErrorCode::InvalidConfig);
}

TEST(Chunking, CountsCodePoints) {
  std::string s;
  for (int i = 0; i < 30; ++i) s += "\xC3\xA9";
  const auto chunks = chunk_text(s, 20, 0.5);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[1].span, (text::Span{10, 30}));
  EXPECT_EQ(text::length(chunks[1].text), 20u);
}

TEST(Chunking, CoverageAndExactOverlapProperty) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t len = rng() % 400;
    const std::size_t window = 1 + rng() % 120;
    const double overlap = static_cast<double>(rng() % 95) / 100.0;
    const std::string t(len, 'a');
    const auto chunks = chunk_text(t, window, overlap);
    const std::size_t ov = static_cast<std::size_t>(std::floor(static_cast<double>(window) * overlap));
    ASSERT_FALSE(chunks.empty());
    EXPECT_EQ(chunks.front().span.begin, 0u);
    EXPECT_EQ(chunks.back().span.end, len);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      EXPECT_LE(chunks[i].span.size(), window);
      if (i > 0) EXPECT_EQ(chunks[i - 1].span.end - chunks[i].span.begin, ov);
    }
  }
}

TEST(Ingest, SidecarServicesProduceBothVariants) {
  SidecarParserService tei(ParserKind::StructuredTei);
  SidecarParserService txt(ParserKind::GenericText);
  const ParsedDocument doc = ingest_document("img_resnet", fixture("corpus/img_resnet.pdf"), {&tei, &txt}, {});
  EXPECT_FALSE(doc.failed());
  EXPECT_TRUE(doc.has(ParserKind::StructuredTei));
  EXPECT_TRUE(doc.has(ParserKind::GenericText));
  EXPECT_FALSE(doc.ocr_applied);
  ASSERT_EQ(doc.tables.size(), 1u);
  EXPECT_EQ(doc.preferred_kind(), ParserKind::StructuredTei);

  const std::string prompt = doc.prompt_text(ParserKind::StructuredTei);
  const auto results = prompt.find("ImageNet validation set.");
  const auto table = prompt.find("| ResNet-152 | 19.38 | 4.49 |");
  const auto analysis = prompt.find("Analysis");
  ASSERT_NE(table, std::string::npos);
  EXPECT_LT(results, table);
  EXPECT_LT(table, analysis);
  EXPECT_EQ(doc.prompt_text(ParserKind::GenericText).find("| ResNet-152"), std::string::npos);
}

TEST(Ingest, MissingSidecarIsAPerVariantFailure) {
  TempDir dir;
  write_all(dir.path() / "only.pdf", "%PDF /Font");
  write_all(dir.path() / "only.txt", "Just text.\n\nTwo paragraphs.");
  SidecarParserService tei(ParserKind::StructuredTei);
  SidecarParserService txt(ParserKind::GenericText);
  const ParsedDocument doc = ingest_document("only", dir.file("only.pdf"), {&tei, &txt}, {});
  EXPECT_FALSE(doc.has(ParserKind::StructuredTei));
  EXPECT_EQ(doc.preferred_kind(), ParserKind::GenericText);
  EXPECT_EQ(doc.failures.count("STRUCTURED_TEI"), 1u);
}

TEST(Ingest, OcrCommandRunsForScannedPdf) {
  TempDir dir;
  write_all(dir.path() / "scan.pdf", "%PDF-1.4 image only");
  write_all(dir.path() / "scan.txt", "Recovered by OCR.");
  SidecarParserService txt(ParserKind::GenericText);
  EXPECT_EQ(code_of([&] { ingest_document("scan", dir.file("scan.pdf"), {nullptr, &txt}, {}); }),
            ErrorCode::UnreadableSource);
  const ParsedDocument doc = ingest_document("scan", dir.file("scan.pdf"), {nullptr, &txt}, {"cp {input} {output}"});
  EXPECT_TRUE(doc.ocr_applied);
  EXPECT_EQ(doc.variants.at(ParserKind::GenericText).text, "Recovered by OCR.");
}

TEST(Ingest, HttpParserServices) {
  httplib::Server server;
  std::string received_name;
  server.Post("/api/processFulltextDocument", [&](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("input")) {
      res.status = 400;
      return;
    }
    received_name = req.get_file_value("input").filename;
    res.set_content(read_all(fixture("corpus/qa_bert.tei.xml")), "application/xml");
  });
  server.Put("/tika", [&](const httplib::Request& req, httplib::Response& res) {
    res.set_content(req.get_header_value("Accept") == "text/plain" ? "Plain words.\n\nMore words." : "",
                    "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  GrobidClient grobid("http://127.0.0.1:" + std::to_string(port));
  TikaClient tika("127.0.0.1:" + std::to_string(port));
  const ParsedDocument doc = ingest_document("qa_bert", fixture("corpus/qa_bert.pdf"), {&grobid, &tika}, {});
  server.stop();
  th.join();

  EXPECT_EQ(received_name, "qa_bert.pdf");
  EXPECT_TRUE(doc.failures.empty());
  EXPECT_EQ(doc.variants.at(ParserKind::GenericText).paragraphs.size(), 2u);
  EXPECT_NE(doc.prompt_text(ParserKind::StructuredTei).find("SQuAD v1.1"), std::string::npos);
}

TEST(Ingest, UnreachableServicesFailEveryVariant) {
  GrobidClient grobid("http://127.0.0.1:1");
  TikaClient tika("http://127.0.0.1:1");
  const ParsedDocument doc = ingest_document("qa_bert", fixture("corpus/qa_bert.pdf"), {&grobid, &tika}, {});
  EXPECT_TRUE(doc.failed());
  EXPECT_NE(doc.failures.at("GENERIC_TEXT").find("ServiceUnavailable"), std::string::npos);
}
