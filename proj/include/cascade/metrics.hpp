#pragma once

/**
 * Terminology-focused and general translation-quality metrics.
 *
 * Term matching is word based: a target matches when its words appear as a
 * contiguous run of the hypothesis's whitespace-separated words. This is the
 * same boundary rule the decoders enforce, so decoder-reported fulfillment
 * and metric-reported accuracy agree. EMA/LMA aggregate corpus-level
 * (micro-average over all term entries).
 */

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "terms.hpp"

namespace cascade {

struct SentenceEval {
  int matched = 0;
  int total = 0;
  int matched_lemma = 0;
};

/// Table-driven lemmatizer; unknown words map to themselves. The table must
/// be idempotent: every lemma must map to itself.
class Lemmatizer {
public:
  Lemmatizer() = default;

  explicit Lemmatizer(std::map<std::string, std::string> table) : table_(std::move(table)) {
    for (const auto& [surface, lemma] : table_) {
      auto it = table_.find(lemma);
      if (it != table_.end() && it->second != lemma) {
        throw std::invalid_argument("lemmatizer: table not idempotent at '" + surface + "' -> '" +
                                    lemma + "' -> '" + it->second + "'");
      }
    }
  }

  const std::string& lemma(const std::string& word) const {
    auto it = table_.find(word);
    return it != table_.end() ? it->second : word;
  }

private:
  std::map<std::string, std::string> table_;
};

inline Lemmatizer load_lemmatizer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lemma file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("lemma file " + path + ": " + e.what());
  }
  return Lemmatizer(j.get<std::map<std::string, std::string>>());
}

namespace detail {

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<std::string> match_words(std::string_view text, bool case_sensitive,
                                            const Lemmatizer* lemmatizer) {
  std::vector<std::string> words = split_words(text);
  for (std::string& w : words) {
    if (!case_sensitive) w = lower(std::move(w));
    if (lemmatizer) w = lemmatizer->lemma(w);
  }
  return words;
}

inline bool contains_run(const std::vector<std::string>& haystack,
                         const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i))) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Word-boundary-delimited occurrence of any target alternative.
inline bool term_matched(std::string_view hypothesis, const TerminologyEntry& entry,
                         bool case_sensitive = true, const Lemmatizer* lemmatizer = nullptr) {
  std::vector<std::string> hyp_words = detail::match_words(hypothesis, case_sensitive, lemmatizer);
  for (const std::string& target : entry.targets) {
    std::vector<std::string> tgt_words = detail::match_words(target, case_sensitive, lemmatizer);
    if (detail::contains_run(hyp_words, tgt_words)) return true;
  }
  return false;
}

inline SentenceEval evaluate_sentence(std::string_view hypothesis, const TermList& terms,
                                      bool case_sensitive = true,
                                      const Lemmatizer* lemmatizer = nullptr) {
  SentenceEval ev;
  ev.total = terms.count();
  for (const TerminologyEntry& e : terms.entries) {
    if (term_matched(hypothesis, e, case_sensitive, nullptr)) ++ev.matched;
    if (lemmatizer) {
      if (term_matched(hypothesis, e, case_sensitive, lemmatizer)) ++ev.matched_lemma;
    }
  }
  if (!lemmatizer) ev.matched_lemma = ev.matched;
  return ev;
}

using EvalCorpus = std::vector<std::pair<std::string, TermList>>;

/// Exact match accuracy: matched term entries over total term entries across
/// the corpus. A corpus with no terms at all is vacuously 1.0 (with a warning).
inline double ema(const EvalCorpus& corpus, bool case_sensitive = true) {
  long matched = 0;
  long total = 0;
  for (const auto& [hyp, terms] : corpus) {
    SentenceEval ev = evaluate_sentence(hyp, terms, case_sensitive, nullptr);
    matched += ev.matched;
    total += ev.total;
  }
  if (total == 0) {
    std::cerr << "warning: ema over corpus without terms, defining as 1.0\n";
    return 1.0;
  }
  return static_cast<double>(matched) / static_cast<double>(total);
}

/// Lemmatized match accuracy: as ema after lemmatizing hypothesis and target
/// words.
inline double lma(const EvalCorpus& corpus, const Lemmatizer& lemmatizer,
                  bool case_sensitive = true) {
  long matched = 0;
  long total = 0;
  for (const auto& [hyp, terms] : corpus) {
    SentenceEval ev = evaluate_sentence(hyp, terms, case_sensitive, &lemmatizer);
    matched += ev.matched_lemma;
    total += ev.total;
  }
  if (total == 0) {
    std::cerr << "warning: lma over corpus without terms, defining as 1.0\n";
    return 1.0;
  }
  return static_cast<double>(matched) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// BLEU
// ---------------------------------------------------------------------------

/**
 * Corpus BLEU-4: geometric mean of modified n-gram precisions (n = 1..4)
 * times the brevity penalty, on whitespace-tokenized text, scaled to
 * [0, 100]. Any zero precision makes the score 0 unless `smooth` enables
 * add-one smoothing on orders >= 2.
 */
inline double bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references, bool smooth = false) {
  if (hypotheses.empty()) throw std::invalid_argument("bleu: empty corpus");
  if (hypotheses.size() != references.size()) {
    throw std::invalid_argument("bleu: hypothesis/reference count mismatch");
  }
  constexpr int kMaxOrder = 4;
  long match[kMaxOrder] = {0, 0, 0, 0};
  long total[kMaxOrder] = {0, 0, 0, 0};
  long hyp_len = 0;
  long ref_len = 0;

  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    std::vector<std::string> hyp = detail::split_words(hypotheses[s]);
    std::vector<std::string> ref = detail::split_words(references[s]);
    hyp_len += static_cast<long>(hyp.size());
    ref_len += static_cast<long>(ref.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
      std::map<std::vector<std::string>, long> ref_counts;
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= ref.size(); ++i) {
        ref_counts[{ref.begin() + static_cast<std::ptrdiff_t>(i),
                    ref.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(n))}]++;
      }
      std::map<std::vector<std::string>, long> hyp_counts;
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= hyp.size(); ++i) {
        hyp_counts[{hyp.begin() + static_cast<std::ptrdiff_t>(i),
                    hyp.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(n))}]++;
      }
      for (const auto& [gram, count] : hyp_counts) {
        total[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) match[n - 1] += std::min(count, it->second);
      }
    }
  }

  double log_precision = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    long m = match[n];
    long t = total[n];
    if (smooth && n >= 1) {
      m += 1;
      t += 1;
    }
    if (m == 0 || t == 0) return 0.0;
    log_precision += std::log(static_cast<double>(m) / static_cast<double>(t));
  }
  double bp = 1.0;
  if (hyp_len == 0) return 0.0;
  if (hyp_len < ref_len) {
    bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  }
  return 100.0 * bp * std::exp(log_precision / kMaxOrder);
}

}  // namespace cascade
