#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <cascade/metrics.hpp>

#include "support/oracle.hpp"
#include "support/testutil.hpp"

using namespace cascade;
using testutil::make_terms;

TEST_CASE("ema counts matched entries over total entries") {
  SECTION("all terms present") {
    TermList terms = make_terms({{"oms"}, {"covid"}, {"flu"}});
    EvalCorpus corpus = {{"the oms covid and flu", terms}};
    CHECK(ema(corpus) == 1.0);
  }

  SECTION("micro average over sentences") {
    EvalCorpus corpus = {{"a b", make_terms({{"a"}, {"x"}})}, {"c", make_terms({{"c"}})}};
    CHECK(ema(corpus) == Catch::Approx(2.0 / 3.0));
  }

  SECTION("matches need word boundaries") {
    TermList terms = make_terms({{"flu"}});
    CHECK(ema({{"fluffy cat", terms}}) == 0.0);
    CHECK(ema({{"the flu season", terms}}) == 1.0);
    CHECK(ema({{"flu", terms}}) == 1.0);
  }

  SECTION("any alternative counts") {
    TermList terms = make_terms({{"toux", "tousse"}});
    CHECK(ema({{"une tousse", terms}}) == 1.0);
  }

  SECTION("multi-word targets") {
    TermList terms = make_terms({{"New York"}});
    CHECK(ema({{"in New York today", terms}}) == 1.0);
    CHECK(ema({{"in NewYork today", terms}}) == 0.0);
  }

  SECTION("zero-term sentences are skipped; empty denominator is vacuous") {
    EvalCorpus corpus = {{"anything", make_terms({})}};
    CHECK(ema(corpus) == 1.0);
  }

  SECTION("case sensitivity flag") {
    TermList terms = make_terms({{"COVID"}});
    CHECK(ema({{"covid here", terms}}, true) == 0.0);
    CHECK(ema({{"covid here", terms}}, false) == 1.0);
  }
}

TEST_CASE("ema is invariant to extra whitespace") {
  TermList terms = make_terms({{"a b"}});
  CHECK(ema({{"x a b y", terms}}) == ema({{"  x   a  b   y ", terms}}));
}

TEST_CASE("adding a matched occurrence never lowers ema, removing never raises it") {
  std::mt19937 rng(67);
  for (int trial = 0; trial < 40; ++trial) {
    TermList terms = make_terms({{"aa"}, {"b"}});
    std::string text;
    for (int w = 0; w < oracle::rnd_int(rng, 0, 4); ++w) {
      if (!text.empty()) text.push_back(' ');
      for (int i = 0; i < oracle::rnd_int(rng, 1, 2); ++i) {
        text.push_back(oracle::rnd_int(rng, 0, 1) ? 'a' : 'b');
      }
    }
    const double before = ema({{text, terms}});
    std::string more = text.empty() ? "aa" : text + " aa";
    CHECK(ema({{more, terms}}) >= before);
  }
}

TEST_CASE("lma") {
  SECTION("identity lemmatizer gives exactly ema") {
    std::mt19937 rng(53);
    Lemmatizer identity;
    for (int trial = 0; trial < 30; ++trial) {
      // random corpora over small words
      EvalCorpus corpus;
      for (int s = 0; s < 4; ++s) {
        std::string text;
        for (int w = 0; w < oracle::rnd_int(rng, 0, 5); ++w) {
          if (!text.empty()) text.push_back(' ');
          for (int i = 0; i < oracle::rnd_int(rng, 1, 2); ++i) {
            text.push_back(static_cast<char>('a' + oracle::rnd_int(rng, 0, 2)));
          }
        }
        std::vector<std::vector<std::string>> targets;
        for (int t = 0; t < oracle::rnd_int(rng, 0, 2); ++t) {
          std::string target;
          for (int i = 0; i < oracle::rnd_int(rng, 1, 2); ++i) {
            target.push_back(static_cast<char>('a' + oracle::rnd_int(rng, 0, 2)));
          }
          targets.push_back({target});
        }
        corpus.emplace_back(text, make_terms(targets));
      }
      bool any_terms = false;
      for (const auto& [text, terms] : corpus) any_terms = any_terms || terms.count() > 0;
      if (!any_terms) continue;
      CHECK(lma(corpus, identity) == ema(corpus));
    }
  }

  SECTION("lemma table merges inflected forms") {
    Lemmatizer lem(std::map<std::string, std::string>{{"tousses", "toux"}});
    TermList terms = make_terms({{"toux"}});
    EvalCorpus corpus = {{"il tousses beaucoup", terms}};
    CHECK(ema(corpus) == 0.0);
    CHECK(lma(corpus, lem) == 1.0);
  }

  SECTION("empty hypothesis matches nothing") {
    TermList terms = make_terms({{"x"}});
    Lemmatizer identity;
    CHECK(ema({{"", terms}}) == 0.0);
    CHECK(lma({{"", terms}}, identity) == 0.0);
  }

  SECTION("lma never falls below ema") {
    Lemmatizer lem(std::map<std::string, std::string>{{"bb", "b"}, {"ab", "a"}});
    std::mt19937 rng(59);
    for (int trial = 0; trial < 40; ++trial) {
      std::string text;
      for (int w = 0; w < oracle::rnd_int(rng, 1, 5); ++w) {
        if (!text.empty()) text.push_back(' ');
        for (int i = 0; i < oracle::rnd_int(rng, 1, 2); ++i) {
          text.push_back(oracle::rnd_int(rng, 0, 1) ? 'a' : 'b');
        }
      }
      TermList terms = make_terms({{"a"}, {"b"}});
      EvalCorpus corpus = {{text, terms}};
      CHECK(lma(corpus, lem) >= ema(corpus));
    }
  }

  SECTION("non-idempotent tables are rejected") {
    CHECK_THROWS_AS(Lemmatizer(std::map<std::string, std::string>{{"a", "b"}, {"b", "c"}}),
                    std::invalid_argument);
  }
}

TEST_CASE("sentence evaluation record") {
  TermList terms = make_terms({{"aa"}, {"bb"}});
  Lemmatizer lem(std::map<std::string, std::string>{{"bbs", "bb"}});
  SentenceEval ev = evaluate_sentence("aa and bbs", terms, true, &lem);
  CHECK(ev.total == 2);
  CHECK(ev.matched == 1);
  CHECK(ev.matched_lemma == 2);
}

TEST_CASE("bleu") {
  SECTION("identity corpus scores 100") {
    std::vector<std::string> c = {"the cat sat on the mat", "a b c d e"};
    CHECK(bleu(c, c) == 100.0);
  }

  SECTION("disjoint corpus scores 0") {
    CHECK(bleu({"a b c d"}, {"e f g h"}) == 0.0);
  }

  SECTION("invariant to corpus permutation") {
    std::vector<std::string> h = {"the cat sat down", "dogs bark at night", "x y z w q"};
    std::vector<std::string> r = {"the cat sat down now", "dogs bark at night", "x y w z q"};
    double fwd = bleu(h, r);
    std::vector<std::string> h2 = {h[2], h[0], h[1]};
    std::vector<std::string> r2 = {r[2], r[0], r[1]};
    CHECK(bleu(h2, r2) == Catch::Approx(fwd).margin(1e-12));
  }

  SECTION("smoothing rescues zero higher-order counts") {
    std::vector<std::string> h = {"a b x d"};
    std::vector<std::string> r = {"a b c d"};
    CHECK(bleu(h, r, false) == 0.0);  // no 3-gram match
    CHECK(bleu(h, r, true) > 0.0);
  }

  SECTION("errors") {
    CHECK_THROWS_AS(bleu({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(bleu({"a"}, {"a", "b"}), std::invalid_argument);
  }

  SECTION("brevity penalty punishes short hypotheses") {
    // identical 4-gram content, hypothesis shorter than reference
    double full = bleu({"a b c d e"}, {"a b c d e"});
    double brief = bleu({"a b c d"}, {"a b c d e"});
    CHECK(brief < full);
  }
}
