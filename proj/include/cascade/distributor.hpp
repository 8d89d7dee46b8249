#pragma once

/**
 * Cascade level distributor.
 *
 * For every (hypothesis state, candidate token) pair this decides whether the
 * hypothesis moves up a level, stays, or drops, and produces the updated
 * constraint state. The eight cases:
 *
 *   previous token finished a terminology (pending confirmation):
 *     (1) token opens a word and starts another open terminology -> Up
 *     (4) token opens a word (or is EOS) but starts nothing      -> Stay,
 *         the pending terminology is confirmed
 *     (7) token extends the same word without matching           -> Down,
 *         the provisional completion is invalidated
 *   mid-terminology (cursor present):
 *     (5) token continues or completes the match                 -> Stay
 *     (6) token breaks the match but starts a terminology        -> Stay,
 *         the cursor is replaced
 *     (8) token breaks the match and starts nothing              -> Down
 *   not in a terminology:
 *     (2) token starts an open terminology                       -> Up
 *     (3) otherwise                                              -> Stay
 *
 * A terminology whose last character was just produced is only provisionally
 * complete ("pending"): it is confirmed by the next word boundary (a
 * word-opening token or EOS) and invalidated when the word keeps going
 * without continuing a longer alternative. EOS acts as a word boundary: it
 * confirms a pending match (case 4) and invalidates an open cursor (case 8).
 *
 * The level of a state is |completed| plus one for an active cursor or a
 * pending confirmation. Completed terms are closed for further matching;
 * the pending term stays open so that a longer alternative sharing the
 * completed string as a prefix can still be continued (a case-5 analog of
 * case 7, chosen here because the decision tree does not cover overlapping
 * alternatives).
 */

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "trie.hpp"

namespace cascade {

/// Per-hypothesis constraint bookkeeping. `cursor` and `pending` are never
/// both set; `pending` is a complete cursor (char_pos == target length).
struct ConstraintState {
  std::vector<int> completed;  // sorted, unique term indices
  std::optional<MatchCursor> cursor;
  std::optional<MatchCursor> pending;

  int level() const {
    return static_cast<int>(completed.size()) + (cursor ? 1 : 0) + (pending ? 1 : 0);
  }

  bool is_completed(int term) const {
    return std::binary_search(completed.begin(), completed.end(), term);
  }

  friend bool operator==(const ConstraintState&, const ConstraintState&) = default;
};

enum class LevelMove { Up, Stay, Down };

inline const char* to_string(LevelMove m) {
  switch (m) {
    case LevelMove::Up: return "up";
    case LevelMove::Stay: return "stay";
    case LevelMove::Down: return "down";
  }
  return "?";
}

struct LevelAction {
  LevelMove move = LevelMove::Stay;
  ConstraintState new_state;
  int case_id = 0;  // 1..8, for tracing
};

namespace detail {

inline void mark_completed(ConstraintState& s, int term) {
  auto it = std::lower_bound(s.completed.begin(), s.completed.end(), term);
  if (it == s.completed.end() || *it != term) s.completed.insert(it, term);
}

inline std::set<int> open_terms(const ConstraintState& s, int term_count) {
  std::set<int> open;
  for (int i = 0; i < term_count; ++i) {
    if (!s.is_completed(i)) open.insert(i);
  }
  return open;
}

// Install the step result on the state: a complete match becomes pending,
// an incomplete one becomes the cursor (first cursor is the representative;
// completion wins over continuing a longer alternative).
inline void install_match(ConstraintState& s, const StepResult& r, const TermTrie& trie) {
  s.cursor.reset();
  s.pending.reset();
  if (r.outcome == StepOutcome::Completes) {
    s.pending = r.complete_cursor(trie.terms());
  } else {
    s.cursor = r.cursors.front();
  }
}

}  // namespace detail

/**
 * Decide the level movement for appending `token` to a hypothesis in state
 * `state`. `is_eos` marks the end-of-sequence token, which carries no
 * characters but acts as a word boundary. Total: every input maps to exactly
 * one case.
 */
inline LevelAction decide(const ConstraintState& state, const TokenInfo& token,
                          const TermTrie& trie, bool is_eos) {
  const int c = trie.terms().count();
  LevelAction action;
  action.new_state = state;
  ConstraintState& next = action.new_state;

  if (state.pending) {
    const int pend_term = state.pending->term_index;
    const bool boundary = is_eos || token.begins_word;
    if (!boundary) {
      // Same word continues: longer alternative or invalidation.
      StepResult r = trie.step(state.pending, token, detail::open_terms(state, c));
      if (r.matched()) {
        detail::install_match(next, r, trie);
        action.move = LevelMove::Stay;
        action.case_id = 5;
        return action;
      }
      next.pending.reset();
      action.move = LevelMove::Down;
      action.case_id = 7;
      return action;
    }
    // Word boundary confirms the pending terminology.
    detail::mark_completed(next, pend_term);
    next.pending.reset();
    if (!is_eos) {
      StepResult r = trie.step(std::nullopt, token, detail::open_terms(next, c));
      if (r.matched()) {
        detail::install_match(next, r, trie);
        action.move = LevelMove::Up;
        action.case_id = 1;
        return action;
      }
    }
    action.move = LevelMove::Stay;
    action.case_id = 4;
    return action;
  }

  if (state.cursor) {
    if (!is_eos) {
      StepResult r = trie.step(state.cursor, token, detail::open_terms(state, c));
      if (r.matched()) {
        detail::install_match(next, r, trie);
        action.move = LevelMove::Stay;
        action.case_id = 5;
        return action;
      }
      if (token.begins_word) {
        // The broken match costs a level, a fresh start regains it.
        StepResult r2 = trie.step(std::nullopt, token, detail::open_terms(state, c));
        if (r2.matched()) {
          detail::install_match(next, r2, trie);
          action.move = LevelMove::Stay;
          action.case_id = 6;
          return action;
        }
      }
    }
    next.cursor.reset();
    action.move = LevelMove::Down;
    action.case_id = 8;
    return action;
  }

  if (!is_eos) {
    StepResult r = trie.step(std::nullopt, token, detail::open_terms(state, c));
    if (r.matched()) {
      detail::install_match(next, r, trie);
      action.move = LevelMove::Up;
      action.case_id = 2;
      return action;
    }
  }
  action.move = LevelMove::Stay;
  action.case_id = 3;
  return action;
}

}  // namespace cascade
