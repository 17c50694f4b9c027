#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace curate {

class Config;

/// Text-completion backend. `complete` either returns the full response or
/// throws; the engine never truncates silently.
class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string name() const = 0;
  virtual std::size_t context_chars() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;
  /// Providers that cannot take concurrent calls return false; the engine
  /// then serializes calls to them.
  virtual bool concurrent_safe() const { return true; }
};

/// OpenAI-style `POST {base}/v1/chat/completions`.
class HttpLlmProvider final : public LlmProvider {
 public:
  HttpLlmProvider(std::string base_url, std::string model, std::string token, std::size_t context_chars);

  std::string name() const override { return model_; }
  std::size_t context_chars() const override { return context_chars_; }
  std::string complete(const std::string& prompt) override;

 private:
  std::string base_url_;
  std::string model_;
  std::string token_;
  std::size_t context_chars_;
};

/// Scripted provider driven by a JSON fixture:
///
///   {
///     "name": "mock", "context_chars": 8000,
///     "responses": { "<prompt hash>": "<raw text>" },
///     "rules": [ { "prompt_contains": [..], "article_contains": [..],
///                  "response": "..." | "error": "..." } ],
///     "default": "[]"
///   }
///
/// Lookup order: exact prompt hash, then the first matching rule, then the
/// default. A rule response of `$EXAMPLE_RESPONSE` echoes the first
/// demonstration block's records.
class MockLlmProvider final : public LlmProvider {
 public:
  explicit MockLlmProvider(const std::string& fixture_json);
  static std::unique_ptr<MockLlmProvider> from_file(const std::string& path);

  /// Key used in the `responses` map.
  static std::string prompt_hash(const std::string& prompt);

  std::string name() const override { return name_; }
  std::size_t context_chars() const override { return context_chars_; }
  std::string complete(const std::string& prompt) override;

  std::vector<std::string> calls() const;

 private:
  struct Rule {
    std::vector<std::string> prompt_contains;
    std::vector<std::string> article_contains;
    std::string response;
    std::string error;
  };

  std::string name_ = "mock";
  std::size_t context_chars_ = 8000;
  std::vector<std::pair<std::string, std::string>> responses_;
  std::vector<Rule> rules_;
  std::string default_response_ = "[]";
  mutable std::mutex mutex_;
  std::vector<std::string> calls_;
};

/// Adapter over a callable; handy for tests and embedding the engine.
class FunctionLlmProvider final : public LlmProvider {
 public:
  using Fn = std::function<std::string(const std::string&)>;
  FunctionLlmProvider(Fn fn, std::size_t context_chars, std::string name = "function")
      : fn_(std::move(fn)), context_chars_(context_chars), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  std::size_t context_chars() const override { return context_chars_; }
  std::string complete(const std::string& prompt) override { return fn_(prompt); }

 private:
  Fn fn_;
  std::size_t context_chars_;
  std::string name_;
};

/// `llm_profile = mock | http`.
std::unique_ptr<LlmProvider> make_llm_provider(const Config& config);

/// Text between the article fences of a generation or explanation prompt.
std::string article_section(const std::string& prompt);

}  // namespace curate
