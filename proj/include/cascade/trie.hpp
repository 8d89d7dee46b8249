#pragma once

/**
 * Character-level trie over terminology target strings.
 *
 * The trie decides whether a token's characters start, continue, complete, or
 * break a terminology match, independently of how a tokenizer would have
 * split the target. A match in progress is identified by the exact character
 * prefix consumed so far; every target alternative consistent with that
 * prefix stays reachable, so the caller only needs to remember one
 * representative cursor. Multi-word targets store their internal single
 * spaces as trie characters; a word boundary in the token stream consumes
 * exactly one of them.
 *
 * Matches must begin at a word boundary (a word-opening token) and only count
 * as complete when the consuming token's last character lands exactly on the
 * target's last character. Confirmation that nothing follows within the same
 * word is the caller's job (see distributor.hpp).
 */

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "guidance.hpp"
#include "terms.hpp"
#include "vocab.hpp"

namespace cascade {

/// Position inside one target alternative: char_pos characters consumed.
/// char_pos == target length marks a complete match.
struct MatchCursor {
  int term_index = -1;
  int target_alternative = -1;
  int char_pos = 0;

  friend bool operator==(const MatchCursor&, const MatchCursor&) = default;
  friend auto operator<=>(const MatchCursor&, const MatchCursor&) = default;
};

enum class StepOutcome { Starts, Continues, Completes, NoMatch };

inline const char* to_string(StepOutcome o) {
  switch (o) {
    case StepOutcome::Starts: return "Starts";
    case StepOutcome::Continues: return "Continues";
    case StepOutcome::Completes: return "Completes";
    case StepOutcome::NoMatch: return "NoMatch";
  }
  return "?";
}

/// Result of feeding one token into the matcher. `cursors` holds every
/// (term, alternative) consistent with the consumed characters, sorted by
/// (term, alternative); complete cursors have char_pos == target length.
struct StepResult {
  StepOutcome outcome = StepOutcome::NoMatch;
  std::vector<MatchCursor> cursors;

  bool matched() const { return outcome != StepOutcome::NoMatch; }

  /// First complete cursor, if any.
  std::optional<MatchCursor> complete_cursor(const TermList& terms) const {
    for (const MatchCursor& c : cursors) {
      if (c.char_pos ==
          static_cast<int>(terms.entries[c.term_index].targets[c.target_alternative].size())) {
        return c;
      }
    }
    return std::nullopt;
  }
};

class TermTrie {
public:
  explicit TermTrie(TermList terms, bool case_sensitive = true)
      : terms_(std::move(terms)), case_sensitive_(case_sensitive) {
    nodes_.emplace_back();  // root
    for (const TerminologyEntry& e : terms_.entries) {
      for (std::size_t alt = 0; alt < e.targets.size(); ++alt) {
        insert(e.targets[alt], e.index, static_cast<int>(alt));
      }
    }
  }

  const TermList& terms() const { return terms_; }
  bool case_sensitive() const { return case_sensitive_; }

  const std::string& target(int term_index, int alternative) const {
    return terms_.entries.at(term_index).targets.at(alternative);
  }

  const std::string& target(const MatchCursor& c) const {
    return target(c.term_index, c.target_alternative);
  }

  bool cursor_complete(const MatchCursor& c) const {
    return c.char_pos == static_cast<int>(target(c).size());
  }

  /// True when s is a prefix of some target alternative (any term).
  bool accepts_prefix(std::string_view s) const { return find(s) >= 0; }

  /**
   * Feed one token into the matcher.
   *
   * Without a cursor the token must open a word and its characters must be a
   * prefix of some target of an open term. With a cursor the token's
   * characters must extend the consumed prefix; a word-opening token is only
   * admissible when the next target character is a space, which the boundary
   * consumes. Completion requires the target to end exactly at the token's
   * last character. A cursor at its target's end is allowed and probes
   * longer alternatives sharing the completed string as a prefix.
   */
  StepResult step(const std::optional<MatchCursor>& cursor, const TokenInfo& token,
                  const std::set<int>& open_terms) const {
    StepResult result;
    if (token.text.empty() || open_terms.empty()) return result;

    std::string consumed;
    if (cursor) {
      if (cursor->term_index < 0 || cursor->term_index >= terms_.count()) {
        throw std::invalid_argument("trie step: cursor references unknown term " +
                                    std::to_string(cursor->term_index));
      }
      const std::string& tgt = target(*cursor);
      consumed.assign(tgt, 0, static_cast<std::size_t>(cursor->char_pos));
      if (token.begins_word) {
        consumed.push_back(' ');  // boundary must consume a target-internal space
      }
    } else {
      if (!token.begins_word) return result;
    }
    consumed += token.text;

    int node = find(consumed);
    if (node < 0) return result;

    const int pos = static_cast<int>(consumed.size());
    bool any_complete = false;
    for (const auto& [term, alt] : nodes_[node].prefix_of) {
      if (!open_terms.contains(term)) continue;
      result.cursors.push_back({term, alt, pos});
      if (pos == static_cast<int>(target(term, alt).size())) any_complete = true;
    }
    if (result.cursors.empty()) return result;

    if (any_complete) {
      result.outcome = StepOutcome::Completes;
    } else {
      result.outcome = cursor ? StepOutcome::Continues : StepOutcome::Starts;
    }
    return result;
  }

  /**
   * Guide-token set T' for the logit boost: the vocabulary tokens that start
   * or continue a terminology from the given cursor over the open terms.
   *
   * All: every token whose step outcome is Starts/Continues/Completes.
   * Longest: of those, per (term, alternative) only the longest text, ties
   *          broken by lowest id.
   * Tokenizer: the single next token of the canonical tokenization of each
   *            reachable target, provided the consumed prefix lines up with a
   *            canonical token boundary.
   * With at_text_start, continuation tokens also count as word-opening (the
   * first token of a sequence opens a word in the detokenized text).
   * Returns ids sorted ascending; never throws (uncoverable targets are
   * skipped, an empty set is a valid result).
   */
  std::vector<TokenId> guide_tokens(const Vocabulary& vocab,
                                    const std::optional<MatchCursor>& cursor,
                                    const std::set<int>& open_terms, PushStrategy strategy,
                                    bool at_text_start = false) const {
    std::set<TokenId> out;
    if (strategy == PushStrategy::None || open_terms.empty()) return {};

    if (strategy == PushStrategy::Tokenizer) {
      collect_tokenizer_guides(vocab, cursor, open_terms, out);
      return {out.begin(), out.end()};
    }

    // (term, alt) -> (text length, id) of the longest starter/continuer.
    std::map<std::pair<int, int>, std::pair<std::size_t, TokenId>> longest;
    for (TokenId id = 0; id < vocab.size(); ++id) {
      if (vocab.is_special(id)) continue;
      TokenInfo tok = vocab.token(id);
      if (at_text_start && !cursor) tok.begins_word = true;
      StepResult r = step(cursor, tok, open_terms);
      if (!r.matched()) continue;
      if (strategy == PushStrategy::All) {
        out.insert(id);
        continue;
      }
      for (const MatchCursor& c : r.cursors) {
        auto key = std::make_pair(c.term_index, c.target_alternative);
        auto it = longest.find(key);
        if (it == longest.end() || tok.text.size() > it->second.first) {
          longest[key] = {tok.text.size(), id};
        }
      }
    }
    if (strategy == PushStrategy::Longest) {
      for (const auto& [key, val] : longest) out.insert(val.second);
    }
    return {out.begin(), out.end()};
  }

private:
  struct Node {
    std::map<char, int> children;
    std::vector<std::pair<int, int>> prefix_of;  // (term, alternative) passing through
  };

  char fold(char c) const {
    if (case_sensitive_) return c;
    if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
    return c;
  }

  void insert(const std::string& target, int term, int alt) {
    int node = 0;
    for (char raw : target) {
      char c = fold(raw);
      auto it = nodes_[node].children.find(c);
      if (it == nodes_[node].children.end()) {
        nodes_.emplace_back();
        it = nodes_[node].children.emplace(c, static_cast<int>(nodes_.size()) - 1).first;
      }
      node = it->second;
      nodes_[node].prefix_of.emplace_back(term, alt);
    }
  }

  /// Node index for string s, or -1. The root is the empty string.
  int find(std::string_view s) const {
    int node = 0;
    for (char raw : s) {
      auto it = nodes_[node].children.find(fold(raw));
      if (it == nodes_[node].children.end()) return -1;
      node = it->second;
    }
    return node;
  }

  void collect_tokenizer_guides(const Vocabulary& vocab, const std::optional<MatchCursor>& cursor,
                                const std::set<int>& open_terms, std::set<TokenId>& out) const {
    // Alternatives consistent with the consumed prefix (all open targets when
    // there is no cursor).
    std::vector<std::pair<int, int>> live;
    std::size_t consumed_len = 0;
    if (cursor) {
      const std::string& tgt = target(*cursor);
      consumed_len = static_cast<std::size_t>(cursor->char_pos);
      int node = find(std::string_view(tgt).substr(0, consumed_len));
      if (node < 0) return;
      for (const auto& ta : nodes_[node].prefix_of) {
        if (open_terms.contains(ta.first)) live.push_back(ta);
      }
    } else {
      for (int term : open_terms) {
        if (term < 0 || term >= terms_.count()) continue;
        const auto& targets = terms_.entries[term].targets;
        for (std::size_t alt = 0; alt < targets.size(); ++alt) {
          live.emplace_back(term, static_cast<int>(alt));
        }
      }
    }

    for (const auto& [term, alt] : live) {
      const std::string& tgt = target(term, alt);
      if (!vocab.coverable(tgt)) continue;
      std::vector<TokenSpan> spans = vocab.tokenize_spans(tgt);
      // Next canonical token: the span starting at the consumed position,
      // allowing one intervening space (consumed by the word boundary).
      for (const TokenSpan& sp : spans) {
        if (sp.begin < consumed_len) continue;
        bool only_spaces = true;
        for (std::size_t i = consumed_len; i < sp.begin; ++i) {
          if (tgt[i] != ' ') only_spaces = false;
        }
        if (only_spaces) out.insert(sp.id);
        break;
      }
    }
  }

  TermList terms_;
  bool case_sensitive_;
  std::vector<Node> nodes_;
};

}  // namespace cascade
