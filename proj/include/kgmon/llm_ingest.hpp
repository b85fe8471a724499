#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgmon/error.hpp"
#include "kgmon/extract.hpp"
#include "kgmon/kg.hpp"
#include "kgmon/ontology.hpp"

namespace kgmon {

struct EndpointConfig {
  std::string url;
  std::string auth_env;  // empty: send no Authorization header
  std::string model_name;
  double temperature = 0.0;
  double timeout = 60.0;  // seconds
  int max_retries = 3;
  int parallelism = 4;
  double backoff_base = 1.0;  // seconds; doubles per retry, plus jitter

  /// Throws ConfigError on a malformed url, timeout <= 0 or parallelism < 1.
  void validate() const;

  static EndpointConfig from_json(std::string_view document);
  static EndpointConfig load_file(const std::filesystem::path& path);
};

class PromptTemplate {
 public:
  /// Both `{{ARTICLE}}` and `{{ONTOLOGY}}` must appear exactly once.
  static PromptTemplate parse(std::string text);
  static PromptTemplate load_file(const std::filesystem::path& path);

  /// Single pass: substituted text is never re-expanded.
  std::string render(const ArticleDoc& article, const Ontology& ontology) const;

  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

struct ExtractionResponse {
  std::string article_id;
  std::string raw;
  KnowledgeGraph graph;
  std::size_t unparsed_lines = 0;
};

/// Parses the E/T records between the first `BEGIN_KG` and the following
/// `END_KG` line; provenance is forced to `article_id`. Without both
/// sentinels the graph is empty and every line counts as unparsed.
ExtractionResponse parse_llm_response(std::string_view raw, std::string_view article_id);

/// Pulls the model text out of an HTTP response body.
using ResponseAdapter = std::function<std::string(std::string_view body)>;

/// Expects a JSON object with a string `text` field.
std::string default_response_adapter(std::string_view body);

struct ArticleDiagnostic {
  std::string article_id;
  int attempts = 0;
  int retries = 0;
  bool ok = false;
  std::string error;
  std::size_t unparsed_lines = 0;
};

struct BatchExtraction {
  KnowledgeGraph graph;
  std::vector<ArticleDiagnostic> diagnostics;  // batch order
};

class ExtractionFailed : public Error {
 public:
  ExtractionFailed(const std::string& message, std::vector<ArticleDiagnostic> diagnostics)
      : Error(message), diagnostics_(std::move(diagnostics)) {}

  const std::vector<ArticleDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<ArticleDiagnostic> diagnostics_;
};

/// One POST per article, at most `parallelism` in flight, each retried with
/// exponential backoff. Failed articles contribute nothing. Throws
/// ConfigError if the auth variable is unset (before any request) and
/// ExtractionFailed if every article failed.
BatchExtraction extract_batch(std::span<const ArticleDoc> batch, const EndpointConfig& config,
                              const PromptTemplate& prompt, const Ontology& ontology,
                              const ResponseAdapter& adapter = default_response_adapter);

KnowledgeGraph ingest_offline(const std::filesystem::path& path);

}  // namespace kgmon
