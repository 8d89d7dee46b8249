#pragma once

/**
 * Logit guidance: boosts the probability of terminology-relevant tokens.
 *
 * The transform is probs = softmax(softmax(x) + alpha * 1_{T'} / |T'|), i.e.
 * the raw scores are normalized once, the guide tokens T' get a flat additive
 * boost of alpha/|T'|, and the result is normalized again. Both softmaxes are
 * applied even when alpha is 0 or T' is empty, so scores of guided and
 * unguided hypotheses stay on the same scale. The double softmax changes
 * probability values at alpha=0 but is strictly monotone, so it never changes
 * a ranking.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

using TokenId = int;

/// Policy choosing the guide set T'.
/// - Tokenizer: next token of the canonical tokenization of each target
/// - Longest:   longest token that starts or continues a terminology,
///              per (term, alternative)
/// - All:       every token that starts or continues a terminology
enum class PushStrategy { None, Tokenizer, Longest, All };

inline const char* to_string(PushStrategy s) {
  switch (s) {
    case PushStrategy::None: return "none";
    case PushStrategy::Tokenizer: return "tokenizer";
    case PushStrategy::Longest: return "longest";
    case PushStrategy::All: return "all";
  }
  return "?";
}

inline PushStrategy parse_strategy(std::string_view s) {
  if (s == "none") return PushStrategy::None;
  if (s == "tokenizer") return PushStrategy::Tokenizer;
  if (s == "longest") return PushStrategy::Longest;
  if (s == "all") return PushStrategy::All;
  throw std::invalid_argument("unknown push strategy '" + std::string(s) + "'");
}

struct GuidanceConfig {
  double alpha = 0.1;
  PushStrategy strategy = PushStrategy::None;

  bool active() const { return strategy != PushStrategy::None; }
};

namespace detail {

// log(sum(exp(v))) over finite entries; -inf entries contribute nothing.
inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

/// Returns log(softmax(softmax(x) + alpha * 1_{guide} / |guide|)).
/// x entries may be -inf (masked tokens); guide ids must be valid indices into
/// x. An empty guide set is a no-op boost, alpha < 0 is an error.
inline std::vector<double> apply_guidance(std::span<const double> x,
                                          std::span<const TokenId> guide, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("apply_guidance: alpha must be >= 0");
  const std::size_t n = x.size();
  for (TokenId g : guide) {
    if (g < 0 || static_cast<std::size_t>(g) >= n) {
      throw std::invalid_argument("apply_guidance: guide id " + std::to_string(g) +
                                  " out of range");
    }
  }

  // Inner softmax: -inf scores map to probability 0.
  std::vector<double> probs(n, 0.0);
  {
    double lse = detail::log_sum_exp(x);
    for (std::size_t i = 0; i < n; ++i) {
      probs[i] = std::isfinite(x[i]) ? std::exp(x[i] - lse) : 0.0;
    }
  }

  if (!guide.empty() && alpha > 0.0) {
    const double boost = alpha / static_cast<double>(guide.size());
    for (TokenId g : guide) probs[static_cast<std::size_t>(g)] += boost;
  }

  // Outer softmax, returned in log space.
  std::vector<double> out(n);
  double lse = detail::log_sum_exp(probs);
  for (std::size_t i = 0; i < n; ++i) out[i] = probs[i] - lse;
  return out;
}

inline std::vector<double> apply_guidance(const std::vector<double>& x,
                                          const std::vector<TokenId>& guide, double alpha) {
  return apply_guidance(std::span<const double>(x), std::span<const TokenId>(guide), alpha);
}

}  // namespace cascade
