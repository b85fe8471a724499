#include "kgmon/extract.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <set>

#include <omp.h>

#include "kgmon/error.hpp"
#include "kgmon/text.hpp"

namespace kgmon {

namespace {

bool is_punct(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && ((u >= 0x21 && u <= 0x2f) || (u >= 0x3a && u <= 0x40) || (u >= 0x5b && u <= 0x60) ||
                      (u >= 0x7b && u <= 0x7e));
}

bool is_sentence_end(std::string_view tok) { return tok == "." || tok == "!" || tok == "?"; }

std::string unescape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[i + 1];
      if (n == 'n') { out.push_back('\n'); ++i; continue; }
      if (n == 't') { out.push_back('\t'); ++i; continue; }
      if (n == '\\') { out.push_back('\\'); ++i; continue; }
    }
    out.push_back(s[i]);
  }
  return out;
}

std::string escape_text(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else if (c == '\t') out += "\\t";
    else out.push_back(c);
  }
  return out;
}

void check_unique_ids(std::span<const ArticleDoc> batch) {
  std::set<std::string_view> seen;
  for (const auto& a : batch) {
    if (!seen.insert(a.id).second) throw Error("duplicate article id in batch: " + a.id);
  }
}

std::vector<std::string> token_texts(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : tokenize(s)) out.push_back(std::move(t.text));
  return out;
}

}  // namespace

std::vector<ArticleDoc> parse_batch_records(std::string_view input) {
  std::vector<ArticleDoc> out;
  auto all = text::lines(input);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (text::trim(all[i]).empty()) continue;
    auto first = all[i].find('\t');
    auto second = first == std::string_view::npos ? first : all[i].find('\t', first + 1);
    if (second == std::string_view::npos) throw ParseError(i + 1, "expected id<TAB>published_at<TAB>text");
    ArticleDoc doc;
    doc.id = std::string(text::trim(all[i].substr(0, first)));
    auto ts = text::trim(all[i].substr(first + 1, second - first - 1));
    try {
      std::size_t used = 0;
      doc.published_at = std::stoll(std::string(ts), &used);
      if (used != ts.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(i + 1, "published_at is not an integer: " + std::string(ts));
    }
    doc.text = unescape_text(all[i].substr(second + 1));
    if (doc.id.empty() || text::contains_space(doc.id)) throw ParseError(i + 1, "bad article id");
    if (text::trim(doc.text).empty()) throw ParseError(i + 1, "empty article text");
    out.push_back(std::move(doc));
  }
  return out;
}

std::string format_batch_record(const ArticleDoc& doc) {
  return doc.id + '\t' + std::to_string(doc.published_at) + '\t' + escape_text(doc.text);
}

std::vector<ArticleDoc> load_batch_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ArticleDoc> out;
  for (const auto& f : files) {
    struct stat st {};
    if (::stat(f.c_str(), &st) != 0) throw IoError("cannot stat " + f.string());
    out.push_back({f.stem().string(), static_cast<std::int64_t>(st.st_mtime), text::read_file(f)});
  }
  return out;
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (text::is_space(s[i])) {
      ++i;
    } else if (is_punct(s[i])) {
      out.push_back({std::string(1, s[i]), i});
      ++i;
    } else {
      const std::size_t start = i;
      while (i < s.size() && !text::is_space(s[i]) && !is_punct(s[i])) ++i;
      out.push_back({std::string(s.substr(start, i - start)), start});
    }
  }
  return out;
}

Dictionary::Dictionary(std::vector<DictionaryEntry> entries, const Ontology& ontology) : entries_(std::move(entries)) {
  std::map<std::vector<std::string>, std::string> seen;
  for (const auto& e : entries_) {
    if (text::trim(e.surface).empty()) throw Error("dictionary entry with empty surface");
    if (!ontology.has_class(e.cls)) throw Error("dictionary class not in ontology: " + e.cls);
    auto toks = token_texts(e.surface);
    auto [it, inserted] = seen.emplace(toks, e.cls);
    if (!inserted) {
      if (it->second != e.cls) throw Error("dictionary surface mapped to two classes: " + e.surface);
      continue;
    }
    by_first_[toks.front()].push_back({std::move(toks), e.cls});
  }
  for (auto& [first, list] : by_first_) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Compiled& a, const Compiled& b) { return a.tokens.size() > b.tokens.size(); });
  }
}

Dictionary Dictionary::parse(std::string_view document, const Ontology& ontology) {
  std::vector<DictionaryEntry> entries;
  auto all = text::lines(document);
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto line = all[i];
    if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
    auto f = text::split(line, '\t');
    if (f.size() != 2 || text::trim(f[0]).empty()) throw ParseError(i + 1, "expected surface<TAB>class");
    std::string cls(text::trim(f[1]));
    if (!ontology.has_class(cls)) throw ParseError(i + 1, "unknown class " + cls);
    entries.push_back({text::normalize_surface(f[0]), std::move(cls)});
  }
  return Dictionary(std::move(entries), ontology);
}

Dictionary Dictionary::load_file(const std::filesystem::path& path, const Ontology& ontology) {
  return parse(text::read_file(path), ontology);
}

std::span<const Dictionary::Compiled> Dictionary::candidates(std::string_view first_token) const {
  auto it = by_first_.find(first_token);
  if (it == by_first_.end()) return {};
  return it->second;
}

std::vector<NerMatch> dict_ner(std::span<const Token> tokens, const Dictionary& dictionary) {
  std::vector<NerMatch> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const Dictionary::Compiled* hit = nullptr;
    for (const auto& cand : dictionary.candidates(tokens[i].text)) {
      if (i + cand.tokens.size() > tokens.size()) continue;
      bool ok = true;
      for (std::size_t k = 1; k < cand.tokens.size() && ok; ++k) ok = tokens[i + k].text == cand.tokens[k];
      if (ok) {
        hit = &cand;
        break;
      }
    }
    if (!hit) {
      ++i;
      continue;
    }
    // Rebuild the normalized span: a single space wherever the source had
    // a gap between consecutive tokens.
    std::string surface = tokens[i].text;
    for (std::size_t k = 1; k < hit->tokens.size(); ++k) {
      const auto& prev = tokens[i + k - 1];
      if (prev.offset + prev.text.size() != tokens[i + k].offset) surface.push_back(' ');
      surface += tokens[i + k].text;
    }
    out.push_back({std::move(surface), hit->cls, tokens[i].offset, i, hit->tokens.size()});
    i += hit->tokens.size();
  }
  return out;
}

RuleSet RuleSet::parse(std::string_view document, const Ontology& ontology) {
  RuleSet set;
  std::set<std::string> ids;
  auto all = text::lines(document);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::size_t lineno = i + 1;
    auto line = all[i];
    if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
    auto f = text::split(line, '\t');
    if (f.size() != 3) throw ParseError(lineno, "expected rule_id<TAB>template<TAB>predicate");
    PatternRule rule;
    rule.rule_id = std::string(text::trim(f[0]));
    rule.predicate = std::string(text::trim(f[2]));
    if (rule.rule_id.empty()) throw ParseError(lineno, "empty rule_id");
    if (!ids.insert(rule.rule_id).second) throw ParseError(lineno, "duplicate rule_id " + rule.rule_id);
    if (!ontology.has_property(rule.predicate)) {
      throw ParseError(lineno, "rule " + rule.rule_id + ": unknown property " + rule.predicate);
    }

    const TemplateSlot* subject = nullptr;
    const TemplateSlot* object = nullptr;
    int subjects = 0;
    int objects = 0;
    for (auto word : text::split_ws(f[1])) {
      if (word.size() > 2 && word.front() == '{' && word.back() == '}') {
        auto body = word.substr(1, word.size() - 2);
        auto colon = body.find(':');
        auto role = body.substr(0, colon);
        if (colon == std::string_view::npos || (role != "subject" && role != "object")) {
          throw ParseError(lineno, "rule " + rule.rule_id + ": bad slot " + std::string(word));
        }
        std::string cls(body.substr(colon + 1));
        if (!ontology.has_class(cls)) throw ParseError(lineno, "rule " + rule.rule_id + ": unknown class " + cls);
        const bool is_subject = role == "subject";
        (is_subject ? subjects : objects)++;
        rule.items.emplace_back(
            TemplateSlot{is_subject ? TemplateSlot::Role::kSubject : TemplateSlot::Role::kObject, std::move(cls)});
      } else {
        for (auto& tok : token_texts(word)) rule.items.emplace_back(TemplateLiteral{text::fold_case(tok)});
      }
    }
    if (subjects != 1 || objects != 1) {
      throw ParseError(lineno, "rule " + rule.rule_id + ": needs exactly one subject and one object slot");
    }
    for (const auto& item : rule.items) {
      if (const auto* slot = std::get_if<TemplateSlot>(&item)) {
        (slot->role == TemplateSlot::Role::kSubject ? subject : object) = slot;
      }
    }
    if (!ontology.is_permissible(subject->cls, rule.predicate, object->cls)) {
      const auto& p = ontology.property(rule.predicate);
      set.diagnostics.push_back("rule " + rule.rule_id + " rejected: (" + subject->cls + ", " + rule.predicate +
                                ", " + object->cls + ") violates " + p.domain + " -> " + p.range);
      continue;
    }
    set.rules.push_back(std::move(rule));
  }
  return set;
}

RuleSet RuleSet::load_file(const std::filesystem::path& path, const Ontology& ontology) {
  return parse(text::read_file(path), ontology);
}

RuleOutput apply_rules(const ArticleDoc& article, std::span<const Token> tokens,
                       std::span<const NerMatch> matches, const RuleSet& rules, const Ontology& ontology) {
  struct Unit {
    const NerMatch* match = nullptr;
    std::string folded;
  };

  std::vector<std::vector<Unit>> sentences(1);
  std::size_t next_match = 0;
  for (std::size_t i = 0; i < tokens.size();) {
    if (next_match < matches.size() && matches[next_match].first_token == i) {
      sentences.back().push_back({&matches[next_match], {}});
      i += matches[next_match].token_count;
      ++next_match;
    } else if (is_sentence_end(tokens[i].text)) {
      if (!sentences.back().empty()) sentences.emplace_back();
      ++i;
    } else {
      sentences.back().push_back({nullptr, text::fold_case(tokens[i].text)});
      ++i;
    }
  }

  RuleOutput out;
  for (const auto& units : sentences) {
    for (const auto& rule : rules.rules) {
      const std::size_t len = rule.items.size();
      for (std::size_t start = 0; start + len <= units.size(); ++start) {
        const NerMatch* subject = nullptr;
        const NerMatch* object = nullptr;
        bool ok = true;
        for (std::size_t k = 0; k < len && ok; ++k) {
          const Unit& u = units[start + k];
          if (const auto* lit = std::get_if<TemplateLiteral>(&rule.items[k])) {
            ok = u.match == nullptr && u.folded == lit->folded;
          } else {
            const auto& slot = std::get<TemplateSlot>(rule.items[k]);
            ok = u.match != nullptr && ontology.is_subclass_of(u.match->cls, slot.cls);
            if (ok) (slot.role == TemplateSlot::Role::kSubject ? subject : object) = u.match;
          }
        }
        if (!ok) continue;
        if (!ontology.is_permissible(subject->cls, rule.predicate, object->cls)) {
          ++out.rejected;
          continue;
        }
        out.triples.push_back({subject->surface, rule.predicate, object->surface, article.id});
      }
    }
  }
  return out;
}

ArticleExtraction extract_article(const ArticleDoc& article, const Dictionary& dictionary, const RuleSet& rules,
                                  const Ontology& ontology) {
  const auto tokens = tokenize(article.text);
  const auto matches = dict_ner(tokens, dictionary);
  ArticleExtraction out;
  for (const auto& m : matches) out.fragment.add_entity({m.surface, m.cls, article.id});
  auto fired = apply_rules(article, tokens, matches, rules, ontology);
  out.rejected = fired.rejected;
  for (auto& t : fired.triples) out.fragment.add_triple(std::move(t));
  return out;
}

BaselineResult build_baseline(std::span<const ArticleDoc> batch, const Dictionary& dictionary, const RuleSet& rules,
                              const Ontology& ontology, const BaselineOptions& options) {
  check_unique_ids(batch);
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  const int workers = std::max(1, options.workers);

  std::vector<KnowledgeGraph> level(batch.size());
  std::vector<std::size_t> rejected(batch.size(), 0);

#pragma omp parallel for num_threads(workers) schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto ex = extract_article(batch[i], dictionary, rules, ontology);
    level[i] = std::move(ex.fragment);
    rejected[i] = ex.rejected;
  }

  std::size_t conflicts = 0;
  while (level.size() > 1) {
    const auto pairs = static_cast<std::ptrdiff_t>(level.size() / 2);
    std::vector<KnowledgeGraph> next((level.size() + 1) / 2);
    std::vector<std::size_t> pair_conflicts(next.size(), 0);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < pairs; ++i) {
      auto m = merge(level[2 * i], level[2 * i + 1]);
      next[i] = std::move(m.graph);
      pair_conflicts[i] = m.conflicts;
    }
    if (level.size() % 2) next.back() = std::move(level.back());
    for (auto c : pair_conflicts) conflicts += c;
    level = std::move(next);
  }

  BaselineResult out;
  if (!level.empty()) out.graph = std::move(level.front());
  out.graph.batch_id = options.batch_id;
  out.graph.timestamp = options.timestamp;
  for (auto r : rejected) out.rejected += r;
  out.conflicts = conflicts;
  return out;
}

BaselineResult build_baseline_serial(std::span<const ArticleDoc> batch, const Dictionary& dictionary,
                                     const RuleSet& rules, const Ontology& ontology,
                                     const BaselineOptions& options) {
  check_unique_ids(batch);
  BaselineResult out;
  for (const auto& article : batch) {
    auto ex = extract_article(article, dictionary, rules, ontology);
    out.rejected += ex.rejected;
    auto m = merge(out.graph, ex.fragment);
    out.graph = std::move(m.graph);
    out.conflicts += m.conflicts;
  }
  out.graph.batch_id = options.batch_id;
  out.graph.timestamp = options.timestamp;
  return out;
}

}  // namespace kgmon
