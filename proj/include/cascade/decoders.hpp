#pragma once

/**
 * Decoding algorithms over a pluggable autoregressive scorer:
 *
 *   beam_search            standard beam search; optionally guided by the
 *                          logit boost when a terminology list is supplied
 *   grid_beam_search       fixed-tokenization constrained search with one
 *                          bank per fulfilled constraint token; the
 *                          disjunctive variant admits any target alternative
 *   cascaded_beam_search   one bank per terminology, character-trie matching
 *                          accepts any tokenization of a target
 *
 * All decoders are deterministic: candidates are ordered by score, then
 * shorter sequence, then lexicographically smaller token ids. Finished
 * hypotheses are collected with the level they finished at; the output is the
 * final hypothesis maximizing (level, score). Scores are cumulative log
 * probabilities of the distribution actually used for ranking (the guided
 * distribution when guidance is on). PAD and BOS are never expanded.
 *
 * grid_beam_search ranks and forces on raw scores; the guidance config only
 * affects beam_search and cascaded_beam_search.
 */

#include <algorithm>
#include <cassert>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distributor.hpp"
#include "guidance.hpp"
#include "scorer.hpp"
#include "trie.hpp"
#include "vocab.hpp"

namespace cascade {

struct Hypothesis {
  std::vector<TokenId> tokens;  // starts with BOS
  double score = 0.0;
  ConstraintState state;
  bool finished = false;
  int level = 0;
};

struct DecodeConfig {
  int beams = 5;     // k: beams per level (total beams for plain beam search)
  int max_len = 32;  // maximum sequence length including BOS and EOS
  GuidanceConfig guidance;
  bool length_normalization = false;
  std::ostream* trace_distributor = nullptr;

  void validate() const {
    if (beams < 1) throw std::invalid_argument("decode config: beams must be >= 1");
    if (max_len < 2) throw std::invalid_argument("decode config: max_len must be >= 2");
  }
};

struct DecodeStats {
  int steps = 0;
  int peak_live_hypotheses = 0;
  std::vector<std::vector<int>> level_occupancy;  // per step, per level
};

struct DecodeResult {
  Hypothesis output;
  std::vector<Hypothesis> finals;
  DecodeStats stats;
  bool truncated = false;  // no hypothesis finished within max_len
};

// ---------------------------------------------------------------------------
// Ordering
// ---------------------------------------------------------------------------

inline double ranking_score(const Hypothesis& h, bool length_norm) {
  if (!length_norm) return h.score;
  const auto steps = h.tokens.size() > 1 ? h.tokens.size() - 1 : 1;
  return h.score / static_cast<double>(steps);
}

/// Higher score, then shorter sequence, then lexicographically smaller ids.
inline bool hyp_better(const Hypothesis& a, const Hypothesis& b, bool length_norm = false) {
  const double sa = ranking_score(a, length_norm);
  const double sb = ranking_score(b, length_norm);
  if (sa != sb) return sa > sb;
  if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
  return a.tokens < b.tokens;
}

/// Best finished hypothesis by (level, score); ties by shorter sequence then
/// token ids. Empty finals fall back to `fallback`; throws when both are empty.
inline Hypothesis finalize(const std::vector<Hypothesis>& finals,
                           const std::optional<Hypothesis>& fallback,
                           bool length_normalization = false) {
  if (finals.empty()) {
    if (fallback) return *fallback;
    throw std::runtime_error("finalize: no final hypotheses and no fallback");
  }
  const Hypothesis* best = &finals.front();
  for (const Hypothesis& h : finals) {
    if (h.level != best->level ? h.level > best->level : hyp_better(h, *best, length_normalization)) {
      best = &h;
    }
  }
  return *best;
}

namespace detail {

/// One beam-search selection step on a mixed candidate pool: finished
/// candidates ranking within the overall top k move to `finals` (the
/// "top-scoring" rule), the best k unfinished candidates become the new pool.
/// Returns the number of finals emitted.
inline int select_candidates(std::vector<Hypothesis>& candidates, int k,
                             std::vector<Hypothesis>& pool_out,
                             std::vector<Hypothesis>& finals) {
  std::sort(candidates.begin(), candidates.end(),
            [](const Hypothesis& a, const Hypothesis& b) { return hyp_better(a, b); });
  pool_out.clear();
  int emitted = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].finished) {
      if (i < static_cast<std::size_t>(k)) {
        finals.push_back(std::move(candidates[i]));
        ++emitted;
      }
    } else if (static_cast<int>(pool_out.size()) < k) {
      pool_out.push_back(std::move(candidates[i]));
    }
  }
  return emitted;
}

inline Hypothesis extend(const Hypothesis& h, TokenId t, double step_log_prob) {
  Hypothesis out = h;
  out.tokens.push_back(t);
  out.score += step_log_prob;
  return out;
}

inline std::optional<Hypothesis> best_live(const std::vector<Hypothesis>& pool) {
  std::optional<Hypothesis> best;
  for (const Hypothesis& h : pool) {
    if (!best || h.level > best->level ||
        (h.level == best->level && hyp_better(h, *best))) {
      best = h;
    }
  }
  return best;
}

inline void trace_decision(std::ostream* os, const LevelAction& a, int level_before) {
  if (!os) return;
  (*os) << "distributor case=" << a.case_id << " move=" << to_string(a.move)
        << " level=" << level_before << "->" << a.new_state.level() << "\n";
}

/// The first content token of a hypothesis opens a word in the detokenized
/// text no matter what its flag says, so matching must treat it as
/// word-opening.
inline bool at_text_start(const Hypothesis& h) { return h.tokens.size() == 1; }

inline TokenInfo effective_token(const Vocabulary& vocab, TokenId t, bool text_start) {
  TokenInfo tok = vocab.token(t);
  if (text_start) tok.begins_word = true;
  return tok;
}

/// Guide set for a hypothesis: continue an active match, otherwise start a
/// terminology that is still needed. A pending term counts as provisionally
/// fulfilled and is not pushed again.
inline std::vector<TokenId> guide_for(const Hypothesis& h, const TermTrie& trie,
                                      const Vocabulary& vocab, PushStrategy strategy) {
  const ConstraintState& state = h.state;
  std::set<int> open = open_terms(state, trie.terms().count());
  if (state.cursor) return trie.guide_tokens(vocab, state.cursor, open, strategy);
  if (state.pending) open.erase(state.pending->term_index);
  return trie.guide_tokens(vocab, std::nullopt, open, strategy, at_text_start(h));
}

inline std::vector<double> scored_distribution(const Scorer& scorer,
                                               std::span<const TokenId> source,
                                               const Hypothesis& h, const TermTrie* trie,
                                               const Vocabulary& vocab,
                                               const GuidanceConfig& guidance) {
  std::vector<double> lp = scorer.log_probs(source, h.tokens);
  if (trie && guidance.active()) {
    std::vector<TokenId> guide = guide_for(h, *trie, vocab, guidance.strategy);
    lp = apply_guidance(lp, guide, guidance.alpha);
  }
  return lp;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Standard beam search
// ---------------------------------------------------------------------------

/**
 * Standard beam search. With a non-null terminology list, per-hypothesis
 * constraint states are tracked and the guidance transform reshapes the
 * distribution (logit modification as a decoding method of its own); there is
 * still a single beam pool and no level-based selection. Stops when k
 * hypotheses have finished or max_len is reached. With k=1 this is greedy
 * decoding.
 */
inline DecodeResult beam_search(const Vocabulary& vocab, const Scorer& scorer,
                                std::span<const TokenId> source, const TermTrie* trie,
                                const DecodeConfig& config) {
  config.validate();
  if (scorer.vocab_size() != vocab.size()) {
    throw std::invalid_argument("beam_search: scorer/vocabulary size mismatch");
  }
  const bool track = trie != nullptr && trie->terms().count() > 0;
  const int k = config.beams;

  DecodeResult result;
  std::vector<Hypothesis> pool(1);
  pool[0].tokens = {vocab.bos()};

  int cur_len = 1;
  while (!pool.empty() && cur_len < config.max_len &&
         static_cast<int>(result.finals.size()) < k) {
    std::vector<Hypothesis> candidates;
    for (const Hypothesis& h : pool) {
      std::vector<double> lp = detail::scored_distribution(scorer, source, h, track ? trie : nullptr,
                                                           vocab, config.guidance);
      for (TokenId t = 0; t < vocab.size(); ++t) {
        if (t == vocab.pad() || t == vocab.bos()) continue;
        Hypothesis cand = detail::extend(h, t, lp[static_cast<std::size_t>(t)]);
        if (track) {
          LevelAction a = decide(h.state, detail::effective_token(vocab, t, detail::at_text_start(h)),
                                 *trie, t == vocab.eos());
          detail::trace_decision(config.trace_distributor, a, h.state.level());
          cand.state = std::move(a.new_state);
          cand.level = cand.state.level();
        }
        if (t == vocab.eos()) {
          if (cand.score == -std::numeric_limits<double>::infinity()) continue;
          cand.finished = true;
        }
        candidates.push_back(std::move(cand));
      }
    }
    detail::select_candidates(candidates, k, pool, result.finals);
    ++result.stats.steps;
    ++cur_len;
    result.stats.level_occupancy.push_back({static_cast<int>(pool.size())});
    result.stats.peak_live_hypotheses =
        std::max(result.stats.peak_live_hypotheses, static_cast<int>(pool.size()));
  }

  result.truncated = result.finals.empty();
  result.output = finalize(result.finals, detail::best_live(pool), config.length_normalization);
  return result;
}

inline DecodeResult beam_search(const Vocabulary& vocab, const Scorer& scorer,
                                std::span<const TokenId> source, const DecodeConfig& config) {
  return beam_search(vocab, scorer, source, nullptr, config);
}

// ---------------------------------------------------------------------------
// Grid beam search (fixed-tokenization constraints)
// ---------------------------------------------------------------------------

namespace detail {

struct GbsProgress {
  int term = -1;
  int alt = -1;
  std::size_t consumed = 0;  // forced tokens consumed so far

  friend auto operator<=>(const GbsProgress&, const GbsProgress&) = default;
};

struct GbsHyp {
  Hypothesis hyp;
  std::vector<int> done;  // sorted fulfilled term indices
  std::optional<GbsProgress> in_progress;
  int bank = 0;  // fulfilled constraint tokens

  // Strict deterministic order: usual hypothesis order plus the constraint
  // bookkeeping (identical token sequences can differ in what they fulfill).
  bool better(const GbsHyp& o) const {
    if (hyp.score != o.hyp.score || hyp.tokens != o.hyp.tokens) return hyp_better(hyp, o.hyp);
    if (done != o.done) return done < o.done;
    const GbsProgress a = in_progress.value_or(GbsProgress{});
    const GbsProgress b = o.in_progress.value_or(GbsProgress{});
    return a < b;
  }
};

}  // namespace detail

/**
 * Grid beam search over the canonical tokenizations of the targets. Banks are
 * indexed by the number of fulfilled constraint tokens; each consumed
 * constraint token moves a hypothesis up one bank. Forced tokens are taken
 * regardless of their model probability. With disjunctive=false only the
 * first target alternative of each term is a constraint; with true any one
 * alternative per term counts. Throws when a required target alternative is
 * not canonically tokenizable, naming the term.
 */
inline DecodeResult grid_beam_search(const Vocabulary& vocab, const Scorer& scorer,
                                     std::span<const TokenId> source, const TermList& terms,
                                     const DecodeConfig& config, bool disjunctive) {
  config.validate();
  if (terms.empty()) return beam_search(vocab, scorer, source, config);
  if (scorer.vocab_size() != vocab.size()) {
    throw std::invalid_argument("grid_beam_search: scorer/vocabulary size mismatch");
  }
  const int k = config.beams;
  const int c = terms.count();

  // term -> allowed alternatives as canonical token sequences
  std::vector<std::vector<std::vector<TokenId>>> constraint_tokens(terms.entries.size());
  for (const TerminologyEntry& e : terms.entries) {
    const std::size_t alt_count = disjunctive ? e.targets.size() : 1;
    for (std::size_t alt = 0; alt < alt_count; ++alt) {
      try {
        constraint_tokens[static_cast<std::size_t>(e.index)].push_back(
            vocab.canonical_tokenize(e.targets[alt]));
      } catch (const std::invalid_argument& err) {
        throw std::invalid_argument("grid_beam_search: term '" + e.source +
                                    "' target not tokenizable: " + err.what());
      }
    }
  }

  using detail::GbsHyp;
  std::map<int, std::vector<GbsHyp>> banks;
  GbsHyp root;
  root.hyp.tokens = {vocab.bos()};
  banks[0].push_back(root);

  DecodeResult result;
  auto fulfills_all = [c](const GbsHyp& g) { return static_cast<int>(g.done.size()) == c; };
  int top_finals = 0;

  std::vector<GbsHyp> gbs_finals;
  int cur_len = 1;
  bool live = true;
  while (live && cur_len < config.max_len && top_finals < k) {
    std::map<int, std::vector<GbsHyp>> next;
    for (const auto& [bank, members] : banks) {
      for (const GbsHyp& g : members) {
        std::vector<double> lp = scorer.log_probs(source, g.hyp.tokens);
        if (g.in_progress) {
          // Mid-constraint: only the forced next token.
          const auto& seq = constraint_tokens[static_cast<std::size_t>(g.in_progress->term)]
                                             [static_cast<std::size_t>(g.in_progress->alt)];
          TokenId forced = seq[g.in_progress->consumed];
          GbsHyp cand = g;
          cand.hyp = detail::extend(g.hyp, forced, lp[static_cast<std::size_t>(forced)]);
          cand.bank = g.bank + 1;
          cand.in_progress->consumed += 1;
          if (cand.in_progress->consumed == seq.size()) {
            cand.done.insert(
                std::lower_bound(cand.done.begin(), cand.done.end(), cand.in_progress->term),
                cand.in_progress->term);
            cand.in_progress.reset();
          }
          cand.hyp.level = cand.bank;
          next[cand.bank].push_back(std::move(cand));
          continue;
        }
        // Free continuations (EOS finishes at the current bank).
        for (TokenId t = 0; t < vocab.size(); ++t) {
          if (t == vocab.pad() || t == vocab.bos()) continue;
          GbsHyp cand = g;
          cand.hyp = detail::extend(g.hyp, t, lp[static_cast<std::size_t>(t)]);
          cand.hyp.level = cand.bank;
          if (t == vocab.eos()) {
            if (cand.hyp.score == -std::numeric_limits<double>::infinity()) continue;
            cand.hyp.finished = true;
          }
          next[cand.bank].push_back(std::move(cand));
        }
        // Constraint starts.
        for (int term = 0; term < c; ++term) {
          if (std::binary_search(g.done.begin(), g.done.end(), term)) continue;
          const auto& alts = constraint_tokens[static_cast<std::size_t>(term)];
          for (std::size_t alt = 0; alt < alts.size(); ++alt) {
            TokenId first = alts[alt][0];
            GbsHyp cand = g;
            cand.hyp = detail::extend(g.hyp, first, lp[static_cast<std::size_t>(first)]);
            cand.bank = g.bank + 1;
            if (alts[alt].size() == 1) {
              cand.done.insert(std::lower_bound(cand.done.begin(), cand.done.end(), term), term);
            } else {
              cand.in_progress = detail::GbsProgress{term, static_cast<int>(alt), 1};
            }
            cand.hyp.level = cand.bank;
            next[cand.bank].push_back(std::move(cand));
          }
        }
      }
    }
    for (auto& [bank, members] : next) {
      std::sort(members.begin(), members.end(),
                [](const GbsHyp& a, const GbsHyp& b) { return a.better(b); });
      std::vector<GbsHyp> kept;
      for (std::size_t i = 0; i < members.size(); ++i) {
        if (members[i].hyp.finished) {
          if (i < static_cast<std::size_t>(k)) {
            if (fulfills_all(members[i])) ++top_finals;
            gbs_finals.push_back(std::move(members[i]));
          }
        } else if (static_cast<int>(kept.size()) < k) {
          kept.push_back(std::move(members[i]));
        }
      }
      members = std::move(kept);
    }
    banks = std::move(next);
    ++result.stats.steps;
    ++cur_len;
    int total = 0;
    int max_bank = banks.empty() ? 0 : banks.rbegin()->first;
    std::vector<int> row(static_cast<std::size_t>(max_bank) + 1, 0);
    for (const auto& [bank, members] : banks) {
      row[static_cast<std::size_t>(bank)] = static_cast<int>(members.size());
      total += static_cast<int>(members.size());
    }
    result.stats.level_occupancy.push_back(std::move(row));
    result.stats.peak_live_hypotheses = std::max(result.stats.peak_live_hypotheses, total);
    live = false;
    for (const auto& [bank, members] : banks) {
      if (!members.empty()) live = true;
    }
  }

  for (GbsHyp& g : gbs_finals) {
    g.hyp.state.completed = g.done;  // report fulfilled terms in the final state
    result.finals.push_back(std::move(g.hyp));
  }
  result.truncated = result.finals.empty();
  std::vector<Hypothesis> live_pool;
  for (const auto& [bank, members] : banks) {
    for (const GbsHyp& g : members) live_pool.push_back(g.hyp);
  }
  result.output = finalize(result.finals, detail::best_live(live_pool),
                           config.length_normalization);
  return result;
}

// ---------------------------------------------------------------------------
// Cascaded beam search
// ---------------------------------------------------------------------------

/**
 * Cascaded beam search: one bank per terminology level. Each step scores
 * every live hypothesis (optionally guided), routes every candidate token
 * through the level distributor, keeps the top k unfinished candidates per
 * level and collects finished candidates into the finals with their level.
 * Stops once k finals fulfill every terminology or max_len is reached. The
 * total number of live hypotheses never exceeds k*(c+1).
 */
inline DecodeResult cascaded_beam_search(const Vocabulary& vocab, const Scorer& scorer,
                                         std::span<const TokenId> source, const TermTrie& trie,
                                         const DecodeConfig& config) {
  config.validate();
  if (trie.terms().empty()) return beam_search(vocab, scorer, source, config);
  if (scorer.vocab_size() != vocab.size()) {
    throw std::invalid_argument("cascaded_beam_search: scorer/vocabulary size mismatch");
  }
  const int k = config.beams;
  const int c = trie.terms().count();

  std::vector<std::vector<Hypothesis>> banks(static_cast<std::size_t>(c) + 1);
  banks[0].emplace_back();
  banks[0][0].tokens = {vocab.bos()};

  DecodeResult result;
  int top_finals = 0;
  int cur_len = 1;
  bool live = true;
  while (live && cur_len < config.max_len && top_finals < k) {
    std::vector<std::vector<Hypothesis>> pools(static_cast<std::size_t>(c) + 1);
    for (const auto& bank : banks) {
      for (const Hypothesis& h : bank) {
        std::vector<double> lp =
            detail::scored_distribution(scorer, source, h, &trie, vocab, config.guidance);
        for (TokenId t = 0; t < vocab.size(); ++t) {
          if (t == vocab.pad() || t == vocab.bos()) continue;
          const bool is_eos = t == vocab.eos();
          LevelAction a =
              decide(h.state, detail::effective_token(vocab, t, detail::at_text_start(h)), trie,
                     is_eos);
          detail::trace_decision(config.trace_distributor, a, h.state.level());
          Hypothesis cand = detail::extend(h, t, lp[static_cast<std::size_t>(t)]);
          cand.state = std::move(a.new_state);
          cand.level = cand.state.level();
          assert(cand.level >= 0 && cand.level <= c);
          if (is_eos) {
            if (cand.score == -std::numeric_limits<double>::infinity()) continue;
            cand.finished = true;
          }
          pools[static_cast<std::size_t>(cand.level)].push_back(std::move(cand));
        }
      }
    }
    live = false;
    int total = 0;
    std::vector<int> row(static_cast<std::size_t>(c) + 1, 0);
    for (std::size_t lvl = 0; lvl <= static_cast<std::size_t>(c); ++lvl) {
      const int emitted = detail::select_candidates(pools[lvl], k, banks[lvl], result.finals);
      if (lvl == static_cast<std::size_t>(c)) top_finals += emitted;
      row[lvl] = static_cast<int>(banks[lvl].size());
      total += row[lvl];
      if (!banks[lvl].empty()) live = true;
    }
    ++result.stats.steps;
    ++cur_len;
    result.stats.level_occupancy.push_back(std::move(row));
    result.stats.peak_live_hypotheses = std::max(result.stats.peak_live_hypotheses, total);
  }

  result.truncated = result.finals.empty();
  std::vector<Hypothesis> live_pool;
  for (const auto& bank : banks) {
    for (const Hypothesis& h : bank) live_pool.push_back(h);
  }
  result.output = finalize(result.finals, detail::best_live(live_pool),
                           config.length_normalization);
  return result;
}

}  // namespace cascade
