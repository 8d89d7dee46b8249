#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>
#include <string>
#include <vector>

#include <cascade/trie.hpp>

#include "support/oracle.hpp"
#include "support/testutil.hpp"

using namespace cascade;
using testutil::continuation;
using testutil::make_terms;
using testutil::make_vocab;
using testutil::open_set;
using testutil::word_start;

TEST_CASE("trie accepts exactly the prefix set of its targets") {
  SECTION("single string") {
    TermTrie trie(make_terms({{"COVID-19"}}));
    const std::string t = "COVID-19";
    for (std::size_t len = 1; len <= t.size(); ++len) {
      CHECK(trie.accepts_prefix(t.substr(0, len)));
    }
    CHECK_FALSE(trie.accepts_prefix("COVX"));
    CHECK_FALSE(trie.accepts_prefix("OVID"));
  }

  SECTION("shared prefixes branch") {
    TermTrie trie(make_terms({{"toux", "tousse", "tousses"}}));
    // brute-force prefix enumeration over all alternatives
    std::set<std::string> expected;
    for (const std::string& t : {std::string("toux"), std::string("tousse"),
                                 std::string("tousses")}) {
      for (std::size_t len = 1; len <= t.size(); ++len) expected.insert(t.substr(0, len));
    }
    // check every string up to length 7 over the involved alphabet
    const std::string alphabet = "touxse";
    std::vector<std::string> frontier = {""};
    for (int len = 1; len <= 7; ++len) {
      std::vector<std::string> next;
      for (const std::string& p : frontier) {
        for (char c : alphabet) {
          std::string q = p + c;
          CHECK(trie.accepts_prefix(q) == expected.contains(q));
          next.push_back(std::move(q));
        }
      }
      frontier = std::move(next);
    }
  }

  SECTION("empty list accepts nothing") {
    TermTrie trie(make_terms({}));
    CHECK_FALSE(trie.accepts_prefix("a"));
    CHECK(trie.terms().count() == 0);
  }
}

TEST_CASE("step classification") {
  TermTrie trie(make_terms({{"COVID-19"}, {"SARS-COV-2"}, {"flu"}}));
  const std::set<int> open = open_set(3);

  SECTION("continuation inside a word") {
    MatchCursor at_co{0, 0, 2};  // consumed "CO"
    StepResult r = trie.step(at_co, continuation("V"), open);
    CHECK(r.outcome == StepOutcome::Continues);
    REQUIRE(r.cursors.size() == 1);
    CHECK(r.cursors[0] == MatchCursor{0, 0, 3});
  }

  SECTION("word-start token that starts nothing") {
    StepResult r = trie.step(std::nullopt, word_start("coffee"), open);
    CHECK(r.outcome == StepOutcome::NoMatch);
    CHECK(r.cursors.empty());
  }

  SECTION("mid-word token that breaks the match") {
    MatchCursor at_cov{0, 0, 3};  // consumed "COV"
    StepResult r = trie.step(at_cov, continuation("ERT"), open);
    CHECK(r.outcome == StepOutcome::NoMatch);
  }

  SECTION("whole term in one token completes") {
    StepResult r = trie.step(std::nullopt, word_start("flu"), open);
    CHECK(r.outcome == StepOutcome::Completes);
    REQUIRE(r.cursors.size() == 1);
    CHECK(trie.cursor_complete(r.cursors[0]));
  }

  SECTION("start requires a word boundary") {
    CHECK(trie.step(std::nullopt, continuation("flu"), open).outcome == StepOutcome::NoMatch);
  }

  SECTION("closed terms do not match") {
    CHECK(trie.step(std::nullopt, word_start("flu"), {0, 1}).outcome == StepOutcome::NoMatch);
  }

  SECTION("completion only at the token's last character") {
    // "COVID-19" ends mid-token; the extra characters break the match.
    MatchCursor at_covid19{0, 0, 7};  // consumed "COVID-1"
    StepResult r = trie.step(at_covid19, continuation("990"), open);
    CHECK(r.outcome == StepOutcome::NoMatch);
  }
}

TEST_CASE("multi-word targets consume one space per boundary") {
  TermTrie trie(make_terms({{"New York"}}));
  const std::set<int> open = open_set(1);

  StepResult r1 = trie.step(std::nullopt, word_start("New"), open);
  REQUIRE(r1.outcome == StepOutcome::Starts);
  StepResult r2 = trie.step(r1.cursors[0], word_start("York"), open);
  CHECK(r2.outcome == StepOutcome::Completes);

  // a continuation token cannot bridge the space
  StepResult r3 = trie.step(r1.cursors[0], continuation("York"), open);
  CHECK(r3.outcome == StepOutcome::NoMatch);
  // and a word boundary is wrong when no space is expected
  StepResult r4 = trie.step(r1.cursors[0], word_start("ew"), open);
  CHECK(r4.outcome == StepOutcome::NoMatch);
}

TEST_CASE("overrun continues into a longer alternative when one exists") {
  TermTrie trie(make_terms({{"COVID", "COVID-19"}}));
  const std::set<int> open = open_set(1);

  // token runs past "COVID" but stays inside "COVID-19"
  StepResult r = trie.step(std::nullopt, word_start("COVID-"), open);
  CHECK(r.outcome == StepOutcome::Starts);
  REQUIRE(r.cursors.size() == 1);
  CHECK(r.cursors[0].target_alternative == 1);

  // completing the short alternative keeps the longer one reachable from the
  // completed cursor
  StepResult done = trie.step(std::nullopt, word_start("COVID"), open);
  REQUIRE(done.outcome == StepOutcome::Completes);
  MatchCursor complete = *done.complete_cursor(trie.terms());
  StepResult longer = trie.step(complete, continuation("-19"), open);
  CHECK(longer.outcome == StepOutcome::Completes);
}

TEST_CASE("case-insensitive matching behind the flag") {
  TermTrie cs(make_terms({{"COVID"}}), true);
  TermTrie ci(make_terms({{"COVID"}}), false);
  CHECK(cs.step(std::nullopt, word_start("covid"), open_set(1)).outcome == StepOutcome::NoMatch);
  CHECK(ci.step(std::nullopt, word_start("covid"), open_set(1)).outcome ==
        StepOutcome::Completes);
}

TEST_CASE("tokenization independence") {
  // For every segmentation of a target into tokens, stepping the segments
  // yields Starts, Continues*, Completes.
  std::mt19937 rng(11);
  TermTrie trie(make_terms({{"abab"}, {"bbaa"}, {"aab"}}));
  const std::set<int> open = open_set(3);

  for (const std::string target : {"abab", "bbaa", "aab"}) {
    // enumerate all splits into pieces of length 1..3
    std::vector<std::vector<std::string>> segmentations;
    std::vector<std::string> cur;
    auto rec = [&](auto&& self, std::size_t at) -> void {
      if (at == target.size()) {
        segmentations.push_back(cur);
        return;
      }
      for (std::size_t len = 1; len <= 3 && at + len <= target.size(); ++len) {
        cur.push_back(target.substr(at, len));
        self(self, at + len);
        cur.pop_back();
      }
    };
    rec(rec, 0);

    for (const auto& segs : segmentations) {
      CAPTURE(target, segs);
      std::optional<MatchCursor> cursor;
      for (std::size_t i = 0; i < segs.size(); ++i) {
        TokenInfo tok = i == 0 ? word_start(segs[i]) : continuation(segs[i]);
        StepResult r = trie.step(cursor, tok, open);
        if (i == 0 && segs.size() == 1) {
          REQUIRE(r.outcome == StepOutcome::Completes);
        } else if (i == 0) {
          REQUIRE(r.outcome == StepOutcome::Starts);
        } else if (i + 1 == segs.size()) {
          REQUIRE(r.outcome == StepOutcome::Completes);
        } else {
          REQUIRE(r.outcome == StepOutcome::Continues);
        }
        if (i + 1 < segs.size()) {
          REQUIRE_FALSE(r.cursors.empty());
          cursor = r.cursors.front();
        }
      }
    }
  }
}

TEST_CASE("guide tokens") {
  SECTION("strategy A (longest) vs strategy B (all) on word-start candidates") {
    // Only C and CO can begin COVID; A pushes CO, B pushes both.
    Vocabulary v = make_vocab({{"C", true}, {"CO", true}, {"x", true}});
    TermTrie trie(make_terms({{"COVID"}}));
    auto longest = trie.guide_tokens(v, std::nullopt, open_set(1), PushStrategy::Longest);
    auto all = trie.guide_tokens(v, std::nullopt, open_set(1), PushStrategy::All);
    CHECK(longest == std::vector<TokenId>{4});
    CHECK(all == std::vector<TokenId>{3, 4});
  }

  SECTION("no open terms or strategy none yields the empty set") {
    Vocabulary v = make_vocab({{"f", true}});
    TermTrie trie(make_terms({{"flu"}}));
    CHECK(trie.guide_tokens(v, std::nullopt, {}, PushStrategy::All).empty());
    CHECK(trie.guide_tokens(v, std::nullopt, open_set(1), PushStrategy::None).empty());
  }

  SECTION("brute-force cross check on the flu vocabulary") {
    // ids: 3=f 4=fl 5=flu 6=l 7=u 8=x
    Vocabulary v = make_vocab({{"f", true},
                               {"fl", true},
                               {"flu", true},
                               {"l", false},
                               {"u", false},
                               {"x", false}});
    TermTrie trie(make_terms({{"flu"}}));
    const std::set<int> open = open_set(1);

    // expected "all" via direct step classification of every vocab token
    std::vector<TokenId> expected_all;
    for (TokenId id = 0; id < v.size(); ++id) {
      if (v.is_special(id)) continue;
      if (trie.step(std::nullopt, v.token(id), open).matched()) expected_all.push_back(id);
    }
    CHECK(trie.guide_tokens(v, std::nullopt, open, PushStrategy::All) == expected_all);
    CHECK(expected_all == std::vector<TokenId>{3, 4, 5});

    CHECK(trie.guide_tokens(v, std::nullopt, open, PushStrategy::Longest) ==
          std::vector<TokenId>{5});
    CHECK(trie.guide_tokens(v, std::nullopt, open, PushStrategy::Tokenizer) ==
          std::vector<TokenId>{5});

    // mid-match: consumed "f", continuations l / lu... only "l" exists
    MatchCursor after_f{0, 0, 1};
    CHECK(trie.guide_tokens(v, after_f, open, PushStrategy::All) == std::vector<TokenId>{6});
    CHECK(trie.guide_tokens(v, after_f, open, PushStrategy::Longest) == std::vector<TokenId>{6});
  }

  SECTION("tokenizer strategy pushes the next canonical token when aligned") {
    // canonical tokenization of "flu" with this vocab: [fl][u]
    Vocabulary v = make_vocab({{"fl", true}, {"u", false}, {"l", false}});
    TermTrie trie(make_terms({{"flu"}}));
    const std::set<int> open = open_set(1);
    CHECK(trie.guide_tokens(v, std::nullopt, open, PushStrategy::Tokenizer) ==
          std::vector<TokenId>{3});
    // consumed "fl": aligned, next canonical token is u
    CHECK(trie.guide_tokens(v, MatchCursor{0, 0, 2}, open, PushStrategy::Tokenizer) ==
          std::vector<TokenId>{4});
    // consumed "f": off the canonical boundary, nothing to push
    CHECK(trie.guide_tokens(v, MatchCursor{0, 0, 1}, open, PushStrategy::Tokenizer).empty());
  }

  SECTION("longest is a subset of all with at most one token per alternative") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
      oracle::TinyInstance inst = oracle::make_tiny_instance(rng, 2, 8);
      if (inst.terms.count() < 1) continue;
      TermTrie trie(inst.terms);
      auto all = trie.guide_tokens(inst.vocab, std::nullopt, open_set(inst.terms.count()),
                                   PushStrategy::All);
      auto longest = trie.guide_tokens(inst.vocab, std::nullopt, open_set(inst.terms.count()),
                                       PushStrategy::Longest);
      CHECK(std::includes(all.begin(), all.end(), longest.begin(), longest.end()));
      std::size_t alternatives = 0;
      for (const auto& e : inst.terms.entries) alternatives += e.targets.size();
      CHECK(longest.size() <= alternatives);
    }
  }
}

TEST_CASE("step is pure") {
  TermTrie trie(make_terms({{"ab"}}));
  MatchCursor c{0, 0, 1};
  StepResult r1 = trie.step(c, continuation("b"), open_set(1));
  StepResult r2 = trie.step(c, continuation("b"), open_set(1));
  CHECK(r1.outcome == r2.outcome);
  CHECK(r1.cursors == r2.cursors);
}
