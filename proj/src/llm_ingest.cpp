#include "kgmon/llm_ingest.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "kgmon/text.hpp"

namespace kgmon {

namespace {

constexpr std::string_view kArticleSlot = "{{ARTICLE}}";
constexpr std::string_view kOntologySlot = "{{ONTOLOGY}}";

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint url lacks a scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported url scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.origin.size() <= scheme_end + 3) throw ConfigError("endpoint url lacks a host: " + url);
  return out;
}

}  // namespace

void EndpointConfig::validate() const {
  split_url(url);
  if (!(timeout > 0)) throw ConfigError("endpoint timeout must be positive");
  if (parallelism < 1) throw ConfigError("endpoint parallelism must be >= 1");
  if (max_retries < 0) throw ConfigError("endpoint max_retries must be >= 0");
  if (temperature < 0) throw ConfigError("endpoint temperature must be >= 0");
  if (backoff_base < 0) throw ConfigError("endpoint backoff_base must be >= 0");
}

EndpointConfig EndpointConfig::from_json(std::string_view document) {
  EndpointConfig c;
  try {
    const auto j = nlohmann::json::parse(document);
    c.url = j.at("url").get<std::string>();
    c.auth_env = j.value("auth_env", std::string{});
    c.model_name = j.value("model", std::string{});
    c.temperature = j.value("temperature", 0.0);
    c.timeout = j.value("timeout", 60.0);
    c.max_retries = j.value("max_retries", 3);
    c.parallelism = j.value("parallelism", 4);
    c.backoff_base = j.value("backoff_base", 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("endpoint config: ") + e.what());
  }
  c.validate();
  return c;
}

EndpointConfig EndpointConfig::load_file(const std::filesystem::path& path) {
  return from_json(text::read_file(path));
}

PromptTemplate PromptTemplate::parse(std::string text) {
  if (count_occurrences(text, kArticleSlot) != 1 || count_occurrences(text, kOntologySlot) != 1) {
    throw ConfigError("prompt template needs {{ARTICLE}} and {{ONTOLOGY}} exactly once each");
  }
  PromptTemplate t;
  t.text_ = std::move(text);
  return t;
}

PromptTemplate PromptTemplate::load_file(const std::filesystem::path& path) { return parse(text::read_file(path)); }

std::string PromptTemplate::render(const ArticleDoc& article, const Ontology& ontology) const {
  const auto a = text_.find(kArticleSlot);
  const auto o = text_.find(kOntologySlot);
  struct Slot {
    std::size_t pos;
    std::size_t len;
    const std::string* value;
  };
  Slot first{a, kArticleSlot.size(), &article.text};
  Slot second{o, kOntologySlot.size(), &ontology.source_text()};
  if (o < a) std::swap(first, second);
  std::string out;
  out.reserve(text_.size() + article.text.size() + ontology.source_text().size());
  out.append(text_, 0, first.pos);
  out += *first.value;
  out.append(text_, first.pos + first.len, second.pos - first.pos - first.len);
  out += *second.value;
  out.append(text_, second.pos + second.len);
  return out;
}

ExtractionResponse parse_llm_response(std::string_view raw, std::string_view article_id) {
  ExtractionResponse out;
  out.article_id = std::string(article_id);
  out.raw = std::string(raw);
  const auto all = text::lines(raw);

  std::size_t begin = all.size();
  std::size_t end = all.size();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (text::trim(all[i]) == "BEGIN_KG") {
      begin = i;
      break;
    }
  }
  for (std::size_t i = begin + 1; i < all.size(); ++i) {
    if (text::trim(all[i]) == "END_KG") {
      end = i;
      break;
    }
  }
  if (begin == all.size() || end == all.size()) {
    out.unparsed_lines = all.size();
    return out;
  }

  std::string block;
  for (std::size_t i = begin + 1; i < end; ++i) {
    block.append(all[i]);
    block.push_back('\n');
  }
  auto parsed = parse_records(block);
  out.graph = std::move(parsed.graph);
  out.graph.set_all_provenance(out.article_id);
  out.unparsed_lines = parsed.malformed + parsed.closure_violations.size();
  return out;
}

std::string default_response_adapter(std::string_view body) {
  const auto j = nlohmann::json::parse(body);
  return j.at("text").get<std::string>();
}

BatchExtraction extract_batch(std::span<const ArticleDoc> batch, const EndpointConfig& config,
                              const PromptTemplate& prompt, const Ontology& ontology,
                              const ResponseAdapter& adapter) {
  config.validate();
  std::string token;
  if (!config.auth_env.empty()) {
    const char* value = std::getenv(config.auth_env.c_str());
    if (value == nullptr) throw ConfigError("auth variable " + config.auth_env + " is not set");
    token = value;
  }
  const auto url = split_url(config.url);

  BatchExtraction out;
  out.diagnostics.resize(batch.size());
  std::vector<KnowledgeGraph> fragments(batch.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration<double>(config.timeout);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    if (!token.empty()) client.set_bearer_token_auth(token);

    for (std::size_t i = next++; i < batch.size(); i = next++) {
      const ArticleDoc& article = batch[i];
      ArticleDiagnostic& diag = out.diagnostics[i];  // single writer per slot
      diag.article_id = article.id;
      const nlohmann::json body = {{"model", config.model_name},
                                   {"temperature", config.temperature},
                                   {"prompt", prompt.render(article, ontology)}};
      const std::string payload = body.dump();
      std::mt19937_64 jitter_rng(std::hash<std::string>{}(article.id));

      for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
          const double delay = config.backoff_base * std::ldexp(1.0, attempt - 1);
          const double jitter = std::uniform_real_distribution<double>(0.0, 0.5 * delay)(jitter_rng);
          std::this_thread::sleep_for(std::chrono::duration<double>(delay + jitter));
          ++diag.retries;
        }
        ++diag.attempts;
        auto res = client.Post(url.path, payload, "application/json");
        if (!res) {
          diag.error = "transport: " + httplib::to_string(res.error());
          continue;
        }
        if (res->status < 200 || res->status >= 300) {
          diag.error = "http status " + std::to_string(res->status);
          continue;
        }
        try {
          auto parsed = parse_llm_response(adapter(res->body), article.id);
          fragments[i] = std::move(parsed.graph);
          diag.unparsed_lines = parsed.unparsed_lines;
          diag.ok = true;
          diag.error.clear();
          break;
        } catch (const std::exception& e) {
          diag.error = std::string("bad response body: ") + e.what();
        }
      }
    }
  };

  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), batch.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::size_t failed = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!out.diagnostics[i].ok) {
      ++failed;
      continue;
    }
    out.graph = merge(out.graph, fragments[i]).graph;
  }
  if (!batch.empty() && failed == batch.size()) {
    throw ExtractionFailed("all " + std::to_string(failed) + " articles failed extraction",
                           std::move(out.diagnostics));
  }
  return out;
}

KnowledgeGraph ingest_offline(const std::filesystem::path& path) {
  return parse_records(text::read_file(path)).graph;
}

}  // namespace kgmon
