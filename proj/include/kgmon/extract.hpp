#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgmon/kg.hpp"
#include "kgmon/ontology.hpp"

namespace kgmon {

struct ArticleDoc {
  std::string id;
  std::int64_t published_at = 0;
  std::string text;
};

/// Parses `id<TAB>published_at<TAB>text` records; `\n`, `\t` and `\\` in
/// the text field are unescaped.
std::vector<ArticleDoc> parse_batch_records(std::string_view input);
std::string format_batch_record(const ArticleDoc& doc);

/// `*.txt` files in name order; id is the file stem, published_at the
/// modification time.
std::vector<ArticleDoc> load_batch_directory(const std::filesystem::path& dir);

struct Token {
  std::string text;
  std::size_t offset = 0;  // byte offset into the source text

  bool operator==(const Token&) const = default;
};

/// Whitespace separates tokens; every ASCII punctuation byte is a token of
/// its own. Offsets are strictly increasing.
std::vector<Token> tokenize(std::string_view text);

struct DictionaryEntry {
  std::string surface;
  std::string cls;
};

/// Gazetteer compiled for token-sequence lookup.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(std::vector<DictionaryEntry> entries, const Ontology& ontology);

  /// `surface<TAB>class` per line, '#' comments.
  static Dictionary parse(std::string_view document, const Ontology& ontology);
  static Dictionary load_file(const std::filesystem::path& path, const Ontology& ontology);

  struct Compiled {
    std::vector<std::string> tokens;
    std::string cls;
  };

  const std::vector<DictionaryEntry>& entries() const noexcept { return entries_; }

  /// Candidates starting with `first_token`, longest first.
  std::span<const Compiled> candidates(std::string_view first_token) const;

 private:
  std::vector<DictionaryEntry> entries_;
  std::map<std::string, std::vector<Compiled>, std::less<>> by_first_;
};

struct NerMatch {
  std::string surface;  // normalized span text
  std::string cls;
  std::size_t offset = 0;
  std::size_t first_token = 0;
  std::size_t token_count = 0;

  bool operator==(const NerMatch&) const = default;
};

/// Greedy longest-match, left to right, non-overlapping, case-sensitive.
std::vector<NerMatch> dict_ner(std::span<const Token> tokens, const Dictionary& dictionary);

struct TemplateLiteral {
  std::string folded;
};

struct TemplateSlot {
  enum class Role { kSubject, kObject };
  Role role;
  std::string cls;
};

using TemplateItem = std::variant<TemplateLiteral, TemplateSlot>;

struct PatternRule {
  std::string rule_id;
  std::vector<TemplateItem> items;
  std::string predicate;
};

struct RuleSet {
  std::vector<PatternRule> rules;
  /// Rules excluded at load, one line each naming the rule_id.
  std::vector<std::string> diagnostics;

  /// `rule_id<TAB>template<TAB>predicate` per line. Unknown classes or
  /// properties and bad slot counts throw ParseError; rules whose slot
  /// classes are impermissible for the predicate are dropped with a
  /// diagnostic.
  static RuleSet parse(std::string_view document, const Ontology& ontology);
  static RuleSet load_file(const std::filesystem::path& path, const Ontology& ontology);
};

struct RuleOutput {
  std::vector<TripleAssertion> triples;
  std::size_t rejected = 0;  // fired but not permissible
};

/// Fires each rule over every contiguous unit window of every sentence. A
/// unit is an NER match or a single unmatched token; sentences end at `.`,
/// `!`, `?` tokens outside NER matches.
RuleOutput apply_rules(const ArticleDoc& article, std::span<const Token> tokens,
                       std::span<const NerMatch> matches, const RuleSet& rules, const Ontology& ontology);

struct ArticleExtraction {
  KnowledgeGraph fragment;
  std::size_t rejected = 0;
};

ArticleExtraction extract_article(const ArticleDoc& article, const Dictionary& dictionary, const RuleSet& rules,
                                  const Ontology& ontology);

struct BaselineOptions {
  std::string batch_id;
  std::int64_t timestamp = 0;
  int workers = 1;
};

struct BaselineResult {
  KnowledgeGraph graph;
  std::size_t rejected = 0;
  std::size_t conflicts = 0;
};

/// OpenMP kernel: articles are extracted in parallel and fragments are
/// merged by a pairwise tree reduction. Duplicate article ids throw before
/// any extraction.
BaselineResult build_baseline(std::span<const ArticleDoc> batch, const Dictionary& dictionary, const RuleSet& rules,
                              const Ontology& ontology, const BaselineOptions& options = {});

/// Serial reference for build_baseline.
BaselineResult build_baseline_serial(std::span<const ArticleDoc> batch, const Dictionary& dictionary,
                                     const RuleSet& rules, const Ontology& ontology,
                                     const BaselineOptions& options = {});

}  // namespace kgmon
