#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <cascade/scorer.hpp>

#include "support/oracle.hpp"
#include "support/testutil.hpp"

using namespace cascade;
using testutil::kBos;
using testutil::kEos;
using testutil::kPad;

namespace {

double exp_sum(const std::vector<double>& lp) {
  double s = 0.0;
  for (double x : lp) {
    if (std::isfinite(x)) s += std::exp(x);
  }
  return s;
}

}  // namespace

TEST_CASE("uniform scorer") {
  UniformScorer s(5, kPad);  // 4 selectable tokens
  std::vector<TokenId> prefix = {kBos};
  std::vector<double> lp = s.log_probs({}, prefix);
  REQUIRE(lp.size() == 5);
  for (TokenId t = 0; t < 5; ++t) {
    if (t == kPad) {
      CHECK(lp[static_cast<std::size_t>(t)] == -std::numeric_limits<double>::infinity());
    } else {
      CHECK(lp[static_cast<std::size_t>(t)] == Catch::Approx(std::log(0.25)));
    }
  }
  CHECK(exp_sum(lp) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("table scorer lookup and defaults") {
  // V=4: pad bos eos a
  std::map<std::vector<TokenId>, std::vector<double>> entries;
  entries[{kBos}] = {0.0, 0.0, 0.7, 0.3};
  TableScorer s(4, kPad, 1, entries, {0.0, 0.0, 0.5, 0.5});

  std::vector<TokenId> prefix = {kBos};
  std::vector<double> lp = s.log_probs({}, prefix);
  CHECK(lp[2] == Catch::Approx(std::log(0.7)));
  CHECK(lp[3] == Catch::Approx(std::log(0.3)));
  CHECK(lp[0] == -std::numeric_limits<double>::infinity());
  CHECK(lp[1] == -std::numeric_limits<double>::infinity());

  // unseen context falls back to the default
  std::vector<TokenId> other = {kBos, 3};
  CHECK(s.log_probs({}, other)[2] == Catch::Approx(std::log(0.5)));
}

TEST_CASE("table scorer validation") {
  std::map<std::vector<TokenId>, std::vector<double>> entries;
  entries[{kBos}] = {0.0, 0.0, 0.5, 0.6};  // sums to 1.1
  CHECK_THROWS_AS(TableScorer(4, kPad, 1, entries, {0.0, 0.0, 0.5, 0.5}),
                  std::invalid_argument);

  std::map<std::vector<TokenId>, std::vector<double>> pad_mass;
  pad_mass[{kBos}] = {0.5, 0.0, 0.25, 0.25};
  CHECK_THROWS_AS(TableScorer(4, kPad, 1, pad_mass, {0.0, 0.0, 0.5, 0.5}),
                  std::invalid_argument);

  UniformScorer u(4, kPad);
  std::vector<TokenId> bad = {kBos, 99};
  CHECK_THROWS_AS(u.log_probs({}, bad), std::invalid_argument);
}

TEST_CASE("normalization and determinism on random tables") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    oracle::TinyInstance inst = oracle::make_tiny_instance(rng, 1, 8);
    std::vector<TokenId> prefix = {kBos};
    for (int step = 0; step < 4; ++step) {
      std::vector<double> a = inst.scorer.log_probs({}, prefix);
      std::vector<double> b = inst.scorer.log_probs({}, prefix);
      CHECK(a == b);  // bitwise identical
      CHECK(exp_sum(a) == Catch::Approx(1.0).margin(1e-6));
      prefix.push_back(testutil::kFirstWord);
    }
  }
}

TEST_CASE("bigram chain makes its sequence the greedy argmax") {
  // V=5: pad bos eos a b — chain bos->a->b->eos
  std::map<std::vector<TokenId>, std::vector<double>> entries;
  entries[{kBos}] = {0.0, 0.0, 0.1, 0.8, 0.1};
  entries[{3}] = {0.0, 0.0, 0.1, 0.1, 0.8};
  entries[{4}] = {0.0, 0.0, 0.8, 0.1, 0.1};
  TableScorer s(5, kPad, 1, entries, {0.0, 0.0, 0.34, 0.33, 0.33});

  // enumerate all sequences up to 3 interior tokens and verify the argmax
  std::vector<TokenId> best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<TokenId> seq = {kBos};
  auto rec = [&](auto&& self, double score) -> void {
    std::vector<double> lp = s.log_probs({}, seq);
    double fin = score + lp[kEos];
    seq.push_back(kEos);
    if (fin > best_score) {
      best_score = fin;
      best = seq;
    }
    seq.pop_back();
    if (seq.size() >= 4) return;
    for (TokenId t : {3, 4}) {
      seq.push_back(t);
      self(self, score + lp[static_cast<std::size_t>(t)]);
      seq.pop_back();
    }
  };
  rec(rec, 0.0);
  CHECK(best == std::vector<TokenId>{kBos, 3, 4, kEos});
}

TEST_CASE("sequence log prob sums per-step scores") {
  UniformScorer s(5, kPad);
  std::vector<TokenId> tokens = {kBos, 3, 4, kEos};
  CHECK(sequence_log_prob(s, {}, tokens) == Catch::Approx(3.0 * std::log(0.25)));
}

TEST_CASE("json loading") {
  nlohmann::json j = {{"order", 1},
                      {"entries", nlohmann::json::array({{{"context", {1}},
                                                          {"probs", {0.0, 0.0, 0.25, 0.75}}}})},
                      {"default", {0.0, 0.0, 0.5, 0.5}}};
  TableScorer s = table_scorer_from_json(j, kPad);
  CHECK(s.vocab_size() == 4);
  CHECK(s.order() == 1);
  std::vector<TokenId> prefix = {kBos};
  CHECK(s.log_probs({}, prefix)[3] == Catch::Approx(std::log(0.75)));
}
