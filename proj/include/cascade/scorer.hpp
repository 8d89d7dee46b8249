#pragma once

/**
 * Autoregressive next-token scoring.
 *
 * A Scorer maps (source tokens, output prefix) to a vector of log
 * probabilities over the vocabulary. Implementations must be deterministic
 * and read-only after construction; the deterministic toy scorers below stand
 * in for a neural model during tests and experiments. PAD is pinned to -inf
 * so it can never be selected.
 */

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vocab.hpp"

namespace cascade {

class Scorer {
public:
  virtual ~Scorer() = default;

  virtual int vocab_size() const = 0;

  /// Log probabilities over the next token. `prefix` must begin with BOS and
  /// contain only valid ids; the returned vector has vocab_size entries whose
  /// exponentials sum to 1 (entries may be -inf).
  virtual std::vector<double> log_probs(std::span<const TokenId> source,
                                        std::span<const TokenId> prefix) const = 0;

  std::vector<double> log_probs(const std::vector<TokenId>& source,
                                const std::vector<TokenId>& prefix) const {
    return log_probs(std::span<const TokenId>(source), std::span<const TokenId>(prefix));
  }

protected:
  void check_ids(std::span<const TokenId> ids, const char* what) const {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= vocab_size()) {
        throw std::invalid_argument(std::string("scorer: invalid ") + what + " id " +
                                    std::to_string(ids[i]) + " at position " + std::to_string(i));
      }
    }
  }
};

/// Raw model score of a full sequence: sum of per-step log probabilities of
/// each token after the leading BOS.
inline double sequence_log_prob(const Scorer& scorer, std::span<const TokenId> source,
                                std::span<const TokenId> tokens) {
  double total = 0.0;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    std::vector<double> lp = scorer.log_probs(source, tokens.subspan(0, t));
    total += lp[static_cast<std::size_t>(tokens[t])];
  }
  return total;
}

inline double sequence_log_prob(const Scorer& scorer, const std::vector<TokenId>& source,
                                const std::vector<TokenId>& tokens) {
  return sequence_log_prob(scorer, std::span<const TokenId>(source),
                           std::span<const TokenId>(tokens));
}

// ---------------------------------------------------------------------------
// UniformScorer
// ---------------------------------------------------------------------------

/// Every token except PAD gets probability 1/(|V|-1); PAD gets -inf.
class UniformScorer : public Scorer {
public:
  UniformScorer(int vocab_size, TokenId pad) : vocab_size_(vocab_size), pad_(pad) {
    if (vocab_size < 2 || pad < 0 || pad >= vocab_size) {
      throw std::invalid_argument("uniform scorer: bad vocab_size/pad");
    }
  }

  int vocab_size() const override { return vocab_size_; }

  std::vector<double> log_probs(std::span<const TokenId> source,
                                std::span<const TokenId> prefix) const override {
    check_ids(source, "source");
    check_ids(prefix, "prefix");
    std::vector<double> out(static_cast<std::size_t>(vocab_size_),
                            std::log(1.0 / (vocab_size_ - 1)));
    out[static_cast<std::size_t>(pad_)] = -std::numeric_limits<double>::infinity();
    return out;
  }

private:
  int vocab_size_;
  TokenId pad_;
};

// ---------------------------------------------------------------------------
// TableScorer
// ---------------------------------------------------------------------------

/**
 * Explicit lookup table keyed by the last `order` tokens of the prefix
 * (the whole prefix when shorter). Unseen contexts fall back to a default
 * distribution. Probability vectors must sum to 1 within 1e-9; zero entries
 * become -inf.
 */
class TableScorer : public Scorer {
public:
  TableScorer(int vocab_size, TokenId pad, int order,
              std::map<std::vector<TokenId>, std::vector<double>> prob_entries,
              std::vector<double> default_probs)
      : vocab_size_(vocab_size), pad_(pad), order_(order) {
    if (vocab_size < 2 || order < 1) {
      throw std::invalid_argument("table scorer: bad vocab_size/order");
    }
    default_ = to_log(default_probs, "default");
    for (auto& [ctx, probs] : prob_entries) {
      if (static_cast<int>(ctx.size()) > order_) {
        throw std::invalid_argument("table scorer: context longer than order");
      }
      check_ids(ctx, "context");
      table_.emplace(ctx, to_log(probs, "entry"));
    }
  }

  int vocab_size() const override { return vocab_size_; }
  int order() const { return order_; }

  std::vector<double> log_probs(std::span<const TokenId> source,
                                std::span<const TokenId> prefix) const override {
    check_ids(source, "source");
    check_ids(prefix, "prefix");
    const std::size_t n = std::min<std::size_t>(prefix.size(), static_cast<std::size_t>(order_));
    std::vector<TokenId> window(prefix.end() - static_cast<std::ptrdiff_t>(n), prefix.end());
    auto it = table_.find(window);
    return it != table_.end() ? it->second : default_;
  }

private:
  std::vector<double> to_log(const std::vector<double>& probs, const char* what) const {
    if (static_cast<int>(probs.size()) != vocab_size_) {
      throw std::invalid_argument(std::string("table scorer: ") + what + " vector has " +
                                  std::to_string(probs.size()) + " entries, expected " +
                                  std::to_string(vocab_size_));
    }
    double sum = 0.0;
    for (double p : probs) {
      if (p < 0.0) throw std::invalid_argument("table scorer: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument(std::string("table scorer: ") + what +
                                  " probabilities sum to " + std::to_string(sum));
    }
    if (pad_ >= 0 && probs[static_cast<std::size_t>(pad_)] > 1e-9) {
      throw std::invalid_argument(std::string("table scorer: ") + what +
                                  " assigns probability to PAD");
    }
    std::vector<double> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      out[i] = probs[i] > 0.0 ? std::log(probs[i]) : -std::numeric_limits<double>::infinity();
    }
    if (pad_ >= 0) out[static_cast<std::size_t>(pad_)] = -std::numeric_limits<double>::infinity();
    return out;
  }

  int vocab_size_;
  TokenId pad_;
  int order_;
  std::map<std::vector<TokenId>, std::vector<double>> table_;
  std::vector<double> default_;
};

// ---------------------------------------------------------------------------
// JSON serialization
//
// { "order": n,
//   "entries": [{"context": [ids], "probs": [floats]}, ...],
//   "default": [floats] }
// ---------------------------------------------------------------------------

inline TableScorer table_scorer_from_json(const nlohmann::json& j, TokenId pad) {
  std::map<std::vector<TokenId>, std::vector<double>> entries;
  for (const auto& ej : j.at("entries")) {
    entries[ej.at("context").get<std::vector<TokenId>>()] =
        ej.at("probs").get<std::vector<double>>();
  }
  std::vector<double> def = j.at("default").get<std::vector<double>>();
  const int vocab_size = static_cast<int>(def.size());
  return TableScorer(vocab_size, pad, j.at("order").get<int>(), std::move(entries),
                     std::move(def));
}

inline TableScorer load_table_scorer(const std::string& path, TokenId pad) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scorer file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("scorer file " + path + ": " + e.what());
  }
  return table_scorer_from_json(j, pad);
}

}  // namespace cascade
