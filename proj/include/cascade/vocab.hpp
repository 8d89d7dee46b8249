#pragma once

/**
 * Vocabulary model: token surface forms, word-boundary flags, detokenization
 * and the canonical (greedy longest-match) tokenizer.
 *
 * A token is a run of characters plus a flag saying whether it opens a new
 * word. Detokenization inserts a single space in front of every word-opening
 * token, so word boundaries in generated text are fully determined by the
 * token sequence. BOS/EOS/PAD contribute no characters.
 */

#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cascade {

using TokenId = int;

struct TokenInfo {
  TokenId id = -1;
  std::string text;
  bool begins_word = false;
};

/// Character range [begin, end) of one token inside a tokenized string.
/// Spaces between words belong to no span.
struct TokenSpan {
  TokenId id = -1;
  std::size_t begin = 0;
  std::size_t end = 0;
};

class Vocabulary {
public:
  /// Token ids are implied by position in `tokens`. Throws std::invalid_argument
  /// if the specials are not distinct valid ids, a non-special token is empty
  /// or contains whitespace, or two non-special tokens share (text, begins_word).
  Vocabulary(std::vector<TokenInfo> tokens, TokenId bos, TokenId eos, TokenId pad)
      : tokens_(std::move(tokens)), bos_(bos), eos_(eos), pad_(pad) {
    const int n = static_cast<int>(tokens_.size());
    for (TokenId s : {bos_, eos_, pad_}) {
      if (s < 0 || s >= n) {
        throw std::invalid_argument("vocabulary: special id " + std::to_string(s) +
                                    " out of range [0," + std::to_string(n) + ")");
      }
    }
    if (bos_ == eos_ || bos_ == pad_ || eos_ == pad_) {
      throw std::invalid_argument("vocabulary: bos/eos/pad must be distinct");
    }
    std::set<std::pair<std::string, bool>> seen;
    for (int i = 0; i < n; ++i) {
      tokens_[i].id = i;
      if (is_special(i)) continue;
      const TokenInfo& t = tokens_[i];
      if (t.text.empty()) {
        throw std::invalid_argument("vocabulary: token " + std::to_string(i) + " has empty text");
      }
      for (char c : t.text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
          throw std::invalid_argument("vocabulary: token " + std::to_string(i) +
                                      " contains whitespace");
        }
      }
      if (!seen.insert({t.text, t.begins_word}).second) {
        throw std::invalid_argument("vocabulary: duplicate (text, begins_word) for token " +
                                    std::to_string(i) + " '" + t.text + "'");
      }
    }
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  TokenId bos() const { return bos_; }
  TokenId eos() const { return eos_; }
  TokenId pad() const { return pad_; }

  bool is_special(TokenId id) const { return id == bos_ || id == eos_ || id == pad_; }

  bool valid(TokenId id) const { return id >= 0 && id < size(); }

  const TokenInfo& token(TokenId id) const {
    if (!valid(id)) {
      throw std::invalid_argument("vocabulary: unknown token id " + std::to_string(id));
    }
    return tokens_[id];
  }

  /// Concatenates token texts, inserting one space before each word-opening
  /// token unless nothing has been emitted yet. Specials emit nothing.
  /// Throws std::invalid_argument naming the sequence position of an unknown id.
  std::string detokenize(std::span<const TokenId> ids) const {
    std::string out;
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
      TokenId id = ids[pos];
      if (!valid(id)) {
        throw std::invalid_argument("detokenize: unknown token id " + std::to_string(id) +
                                    " at position " + std::to_string(pos));
      }
      if (is_special(id)) continue;
      const TokenInfo& t = tokens_[id];
      if (t.begins_word && !out.empty()) out.push_back(' ');
      out += t.text;
    }
    return out;
  }

  std::string detokenize(const std::vector<TokenId>& ids) const {
    return detokenize(std::span<const TokenId>(ids));
  }

  /// Greedy longest-match-from-left segmentation. The first token of each word
  /// must be word-opening, later tokens must not be. Runs of spaces act as one
  /// word boundary. Throws std::invalid_argument naming the character position
  /// of the first uncoverable spot.
  std::vector<TokenSpan> tokenize_spans(std::string_view s) const {
    if (s.empty()) throw std::invalid_argument("tokenize: empty input");
    std::vector<TokenSpan> spans;
    std::size_t pos = 0;
    bool at_word_start = true;
    while (pos < s.size()) {
      if (s[pos] == ' ') {
        at_word_start = true;
        ++pos;
        continue;
      }
      TokenId best = -1;
      std::size_t best_len = 0;
      for (int id = 0; id < size(); ++id) {
        if (is_special(id)) continue;
        const TokenInfo& t = tokens_[id];
        if (t.begins_word != at_word_start) continue;
        if (t.text.size() <= best_len) continue;
        if (s.compare(pos, t.text.size(), t.text) == 0) {
          best = id;
          best_len = t.text.size();
        }
      }
      if (best < 0) {
        throw std::invalid_argument("tokenize: no token covers character at position " +
                                    std::to_string(pos));
      }
      spans.push_back({best, pos, pos + best_len});
      pos += best_len;
      at_word_start = false;
    }
    if (spans.empty()) throw std::invalid_argument("tokenize: input has no tokenizable content");
    return spans;
  }

  std::vector<TokenId> canonical_tokenize(std::string_view s) const {
    std::vector<TokenId> ids;
    for (const TokenSpan& sp : tokenize_spans(s)) ids.push_back(sp.id);
    return ids;
  }

  /// True when canonical_tokenize(s) would succeed.
  bool coverable(std::string_view s) const {
    if (s.empty()) return false;
    try {
      tokenize_spans(s);
      return true;
    } catch (const std::invalid_argument&) {
      return false;
    }
  }

private:
  std::vector<TokenInfo> tokens_;
  TokenId bos_;
  TokenId eos_;
  TokenId pad_;
};

// ---------------------------------------------------------------------------
// JSON serialization
//
// { "tokens": [{"text": "...", "begins_word": bool}, ...],
//   "bos": id, "eos": id, "pad": id }
// ---------------------------------------------------------------------------

inline Vocabulary vocabulary_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
    throw std::invalid_argument("vocabulary json: expected object with 'tokens' array");
  }
  std::vector<TokenInfo> tokens;
  for (const auto& tj : j["tokens"]) {
    TokenInfo t;
    t.text = tj.at("text").get<std::string>();
    t.begins_word = tj.at("begins_word").get<bool>();
    tokens.push_back(std::move(t));
  }
  return Vocabulary(std::move(tokens), j.at("bos").get<TokenId>(), j.at("eos").get<TokenId>(),
                    j.at("pad").get<TokenId>());
}

inline nlohmann::json vocabulary_to_json(const Vocabulary& v) {
  nlohmann::json tokens = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) {
    tokens.push_back({{"text", v.token(i).text}, {"begins_word", v.token(i).begins_word}});
  }
  return {{"tokens", tokens}, {"bos", v.bos()}, {"eos", v.eos()}, {"pad", v.pad()}};
}

inline Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("vocabulary file " + path + ": " + e.what());
  }
  return vocabulary_from_json(j);
}

}  // namespace cascade
