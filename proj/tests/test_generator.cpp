#include <gtest/gtest.h>

#include <atomic>

#include "curate/error.hpp"
#include "curate/generator.hpp"
#include "curate/sampler.hpp"
#include "support.hpp"

using namespace curate;

namespace {

const Schema kAB = Schema::from_names({"A", "B"});

ParsedDocument two_variant_doc(const std::string& tei_body, const std::string& txt_body) {
  ParsedDocument d;
  d.doc_id = "d";
  d.variants[ParserKind::StructuredTei] = segment_paragraphs(tei_body);
  d.variants[ParserKind::GenericText] = segment_paragraphs(txt_body);
  return d;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Prompt, ZeroShotTemplate) {
  const std::string p = build_prompt(kAB, "Body text.", {});
  EXPECT_EQ(p,
            "Please, extract A, B from the given article.\n\n"
            "For the extracted information, you MUST respond in a list of JSON dictionaries structure with the "
            "given Dictionary Key Mapping.\n\n"
            "[Dictionary Key Mapping in your response]\n{\nA: (example: ),\nB: (example: )\n}\n\n"
            "[Given Article Start]\nBody text.\n[Given Article End]\n");
  EXPECT_EQ(count(p, "A: (example"), 1u);
  EXPECT_EQ(build_prompt(kAB, "Body text.", {}), p);
}

TEST(Prompt, OneShotFillsHintsAndDemonstration) {
  const std::string p = build_prompt(kAB, "Body.", {{"Example body.", {{{"A", "x"}, {"B", ""}}}}});
  EXPECT_NE(p.find("A: (example: x),\n"), std::string::npos);
  EXPECT_NE(p.find("[Example Article Start]\nExample body.\n[Example Article End]\n[Example Response]\n"
                   "[{\"A\":\"x\",\"B\":\"\"}]\n\n[Given Article Start]"),
            std::string::npos);
}

TEST(Prompt, SchemaHintsFillZeroShotSlots) {
  const Schema s = Schema::parse_csv("A,B\nx1,\n");
  EXPECT_NE(build_prompt(s, "t", {}).find("A: (example: x1),\nB: (example: )\n"), std::string::npos);
}

TEST(Prompt, EmptySchemaIsRejected) {
  EXPECT_EQ(code_of([] { build_prompt(Schema{}, "t", {}); }), ErrorCode::EmptySchema);
}

TEST(ParseOutput, PlainFencedAndProse) {
  const auto plain = parse_llm_output(R"([{"A":"1","B":"2"}])", kAB);
  ASSERT_EQ(plain.size(), 1u);
  EXPECT_EQ(plain[0], (ValueMap{{"A", "1"}, {"B", "2"}}));
  EXPECT_EQ(parse_llm_output("```json\n[{\"A\":\"1\",\"B\":\"2\"}]\n```", kAB), plain);
  EXPECT_EQ(parse_llm_output("Sure [see below]: [{\"A\":\"1\",\"B\":\"2\"}] done", kAB), plain);
}

TEST(ParseOutput, KeysAndScalars) {
  const auto r = parse_llm_output(R"([{" A ": 72.50, "C": "drop", "B": null}, {"B": true}, {"A": 3}])", kAB);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0], (ValueMap{{"A", "72.5"}, {"B", ""}}));
  EXPECT_EQ(r[1], (ValueMap{{"A", ""}, {"B", "true"}}));
  EXPECT_EQ(r[2].at("A"), "3");
  EXPECT_TRUE(parse_llm_output("[]", kAB).empty());
}

TEST(ParseOutput, NoArrayIsUnparseable) {
  EXPECT_EQ(code_of([] { parse_llm_output("no json here", kAB); }), ErrorCode::OutputUnparseable);
  EXPECT_EQ(code_of([] { parse_llm_output("[1, 2]", kAB); }), ErrorCode::OutputUnparseable);
  EXPECT_EQ(code_of([] { parse_llm_output("[{\"A\": ", kAB); }), ErrorCode::OutputUnparseable);
}

TEST(Generate, ChunkOutputsAreDeduplicated) {
  std::atomic<int> calls = 0;
  FunctionLlmProvider llm(
      [&](const std::string&) {
        ++calls;
        return std::string(R"([{"A":"1","B":"2"}])");
      },
      8000);
  ParsedDocument doc;
  doc.doc_id = "d";
  doc.variants[ParserKind::GenericText] = segment_paragraphs(std::string(250, 'x'));
  GenerationOptions opts;
  opts.window_chars = 100;
  const auto sets = generate_records(doc, kAB, CorrectionPool{}, llm, opts);
  EXPECT_EQ(calls.load(), 3);
  ASSERT_EQ(sets.sets.at(ParserKind::GenericText).size(), 1u);
  EXPECT_EQ(sets.sets.at(ParserKind::GenericText)[0].origin, Origin::GenericText);
}

TEST(Generate, ChunkOrderIsKept) {
  FunctionLlmProvider llm(
      [](const std::string& p) {
        const std::string article = article_section(p);
        return std::string(R"([{"A":")") + article.substr(0, 1) + R"("}, {"A":"z"}])";
      },
      8000);
  ParsedDocument doc;
  doc.doc_id = "d";
  doc.variants[ParserKind::GenericText] = segment_paragraphs(std::string(100, 'p') + std::string(100, 'q'));
  GenerationOptions opts;
  opts.window_chars = 100;
  opts.overlap = 0.0;
  const auto& recs = generate_records(doc, kAB, {}, llm, opts).sets.at(ParserKind::GenericText);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].value("A"), "p");
  EXPECT_EQ(recs[1].value("A"), "z");
  EXPECT_EQ(recs[2].value("A"), "q");
}

TEST(Generate, RetriesOnceWithReminder) {
  std::vector<std::string> prompts;
  FunctionLlmProvider llm(
      [&](const std::string& p) {
        prompts.push_back(p);
        return prompts.size() == 1 ? std::string("sorry, no") : std::string(R"([{"A":"ok"}])");
      },
      8000);
  ParsedDocument doc;
  doc.doc_id = "d";
  doc.variants[ParserKind::GenericText] = segment_paragraphs("short");
  const auto sets = generate_records(doc, kAB, {}, llm);
  ASSERT_EQ(prompts.size(), 2u);
  EXPECT_NE(prompts[1].find(std::string(kJsonOnlyReminder)), std::string::npos);
  EXPECT_EQ(sets.sets.at(ParserKind::GenericText)[0].value("A"), "ok");
}

TEST(Generate, SecondUnparseableFailsTheVariant) {
  FunctionLlmProvider llm(
      [](const std::string& p) {
        return article_section(p).find("TEI") != std::string::npos ? std::string("garbage")
                                                                    : std::string(R"([{"A":"t"}])");
      },
      8000);
  const auto sets = generate_records(two_variant_doc("TEI body", "text body"), kAB, {}, llm);
  EXPECT_EQ(sets.sets.count(ParserKind::StructuredTei), 0u);
  ASSERT_EQ(sets.failures.count(ParserKind::StructuredTei), 1u);
  EXPECT_EQ(sets.failures.at(ParserKind::StructuredTei).raw_output, "garbage");
  EXPECT_EQ(sets.sets.at(ParserKind::GenericText).size(), 1u);
}

TEST(Generate, BothVariantsFailing) {
  FunctionLlmProvider llm([](const std::string&) -> std::string { throw Error(ErrorCode::ServiceUnavailable, "x"); },
                          8000);
  EXPECT_EQ(code_of([&] { generate_records(two_variant_doc("a", "b"), kAB, {}, llm); }),
            ErrorCode::GenerationFailed);
  EXPECT_EQ(code_of([&] { generate_records(ParsedDocument{}, kAB, {}, llm); }), ErrorCode::GenerationFailed);
}

TEST(Generate, TwoVariantsTaggedWithOrigin) {
  FunctionLlmProvider llm([](const std::string&) { return std::string(R"([{"A":"1"}])"); }, 8000);
  const auto sets = generate_records(two_variant_doc("a", "b"), kAB, {}, llm);
  EXPECT_EQ(sets.sets.at(ParserKind::StructuredTei)[0].origin, Origin::StructuredTei);
  EXPECT_EQ(sets.sets.at(ParserKind::GenericText)[0].origin, Origin::GenericText);
  for (const auto& [kind, recs] : sets.sets) {
    for (const auto& r : recs) {
      for (const auto& [col, cell] : r.cells) EXPECT_TRUE(kAB.contains(col));
    }
  }
}

TEST(Generate, EchoOfDemonstrationRoundTrips) {
  MockLlmProvider llm(R"({"rules": [{"prompt_contains": ["[Example Response]"], "response": "$EXAMPLE_RESPONSE"}]})");
  CorrectionPool pool;
  const std::vector<ValueMap> verified = {{{"A", "x"}, {"B", "y \"q\""}}, {{"A", "2"}, {"B", ""}}};
  for (const auto& r : verified) pool.add("p", "pool doc text", r);
  ParsedDocument doc;
  doc.doc_id = "d";
  doc.variants[ParserKind::GenericText] = segment_paragraphs("target text");
  const auto sets = generate_records(doc, kAB, pool, llm);
  EXPECT_EQ(sets.examples_used, 1u);
  std::vector<ValueMap> got;
  for (const auto& r : sets.sets.at(ParserKind::GenericText)) got.push_back(r.values());
  EXPECT_EQ(got, verified);
}

TEST(Generate, WindowDefaultsToEightyPercentOfContext) {
  FunctionLlmProvider llm([](const std::string&) { return std::string("[]"); }, 1000);
  EXPECT_EQ(effective_window({}, llm), 800u);
  GenerationOptions o;
  o.window_chars = 7;
  EXPECT_EQ(effective_window(o, llm), 7u);
}

TEST(MockLlm, LookupOrder) {
  const std::string prompt = build_prompt(kAB, "alpha beta", {});
  nlohmann::json fixture = {
      {"responses", {{MockLlmProvider::prompt_hash(prompt), "by-hash"}}},
      {"rules", {{{"article_contains", {"alpha"}}, {"response", "by-rule"}},
                 {{"article_contains", {"boom"}}, {"error", "scripted"}}}},
      {"default", "fallback"}};
  MockLlmProvider llm(fixture.dump());
  EXPECT_EQ(llm.complete(prompt), "by-hash");
  EXPECT_EQ(llm.complete(build_prompt(kAB, "alpha", {})), "by-rule");
  EXPECT_EQ(llm.complete(build_prompt(kAB, "Extract A", {})), "fallback");
  EXPECT_EQ(code_of([&] { llm.complete(build_prompt(kAB, "boom", {})); }), ErrorCode::ServiceUnavailable);
  EXPECT_EQ(llm.calls().size(), 4u);
  EXPECT_EQ(MockLlmProvider::prompt_hash(""), "cbf29ce484222325");
}

TEST(MockLlm, ArticleSectionIgnoresInstructions) {
  // The instruction line mentions "A", the article does not.
  MockLlmProvider llm(R"({"rules": [{"article_contains": ["extract"], "response": "hit"}]})");
  EXPECT_EQ(llm.complete(build_prompt(kAB, "nothing", {})), "[]");
  EXPECT_EQ(article_section(build_prompt(kAB, "line one\nline two", {})), "line one\nline two");
}

TEST(MockLlm, FixtureFileLoads) {
  const auto llm = MockLlmProvider::from_file(testing_support::fixture("mock_llm.json"));
  EXPECT_EQ(llm->context_chars(), 8000u);
  EXPECT_EQ(code_of([] { MockLlmProvider("{not json"); }), ErrorCode::InvalidConfig);
}
