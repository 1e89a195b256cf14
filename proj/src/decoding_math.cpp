#include "ssd/decoding_math.hpp"

#include <algorithm>
#include <numeric>

namespace ssd {

namespace {

constexpr double kDegenerateMass = 1e-12;

void require_same_length(const TokenDistribution& a, const TokenDistribution& b) {
  if (a.size() != b.size()) {
    throw SsdError(Errc::LengthMismatch,
                   "the two distributions cover different vocabularies");
  }
  if (a.empty()) {
    throw SsdError(Errc::InvalidArgument, "empty distribution");
  }
}

}  // namespace

TokenId argmax_token(const TokenDistribution& d) {
  if (d.empty()) {
    throw SsdError(Errc::InvalidArgument, "argmax of empty distribution");
  }
  TokenId best = 0;
  for (TokenId id = 1; id < d.size(); ++id) {
    if (d[id] > d[best]) {
      best = id;
    }
  }
  return best;
}

RankedTokens full_ranking(const TokenDistribution& d) {
  RankedTokens ids(d.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  std::sort(ids.begin(), ids.end(), [&d](TokenId a, TokenId b) {
    if (d[a] != d[b]) return d[a] > d[b];
    return a < b;
  });
  return ids;
}

RankedTokens top_tokens(const TokenDistribution& d, std::uint32_t k) {
  if (k == 0 || k > d.size()) {
    throw SsdError(Errc::KTooLarge, "k must be in [1, vocab_size], got " + std::to_string(k));
  }
  RankedTokens ranking = full_ranking(d);
  ranking.resize(k);
  return ranking;
}

IntersectionResult intersection_space(const TokenDistribution& target,
                                      const TokenDistribution& expert,
                                      std::uint32_t c) {
  require_same_length(target, expert);
  const std::uint32_t vocab = static_cast<std::uint32_t>(target.size());
  if (c == 0 || c > vocab) {
    throw SsdError(Errc::CTooLarge, "c must be in [1, vocab_size], got " + std::to_string(c));
  }

  RankedTokens by_target = full_ranking(target);
  RankedTokens by_expert = full_ranking(expert);

  // Grow k and count tokens present in both top-k prefixes; the count is
  // monotone in k, so the first k reaching c is the argmin. A token is
  // counted exactly when its second membership flag gets set.
  std::vector<char> in_target(vocab, 0);
  std::vector<char> in_expert(vocab, 0);
  std::uint32_t common = 0;
  auto add = [&common](std::vector<char>& own, const std::vector<char>& other,
                       TokenId id) {
    own[id] = 1;
    if (other[id]) ++common;
  };
  for (std::uint32_t k = 1; k <= vocab; ++k) {
    add(in_target, in_expert, by_target[k - 1]);
    add(in_expert, in_target, by_expert[k - 1]);
    if (common >= c) {
      TokenSet space;
      for (TokenId id = 0; id < vocab; ++id) {
        if (in_target[id] && in_expert[id]) {
          space.insert(id);
        }
      }
      return IntersectionResult{std::move(space), k};
    }
  }
  // Unreachable: at k = vocab both sets are the full vocabulary and c <= vocab.
  throw SsdError(Errc::InvalidArgument, "intersection search failed to terminate");
}

GuardedSpace guarded_intersection_space(const TokenDistribution& target,
                                        const TokenDistribution& expert,
                                        std::uint32_t c, std::uint32_t kappa) {
  if (kappa == 0 || kappa >= c) {
    throw SsdError(Errc::InvalidArgument,
                   "kappa must be in [1, c), got " + std::to_string(kappa));
  }
  IntersectionResult inner = intersection_space(target, expert, c);
  RankedTokens guard = top_tokens(target, kappa);
  for (TokenId id : guard) {
    if (inner.space.contains(id)) {
      return GuardedSpace{std::move(inner.space), false};
    }
  }
  RankedTokens own = top_tokens(target, c);
  return GuardedSpace{TokenSet(own.begin(), own.end()), true};
}

TokenSet union_space(const TokenDistribution& target,
                     const TokenDistribution& expert, std::uint32_t c) {
  require_same_length(target, expert);
  if (c == 0 || c > target.size()) {
    throw SsdError(Errc::CTooLarge, "c must be in [1, vocab_size], got " + std::to_string(c));
  }
  RankedTokens t = top_tokens(target, c);
  RankedTokens e = top_tokens(expert, c);
  TokenSet space(t.begin(), t.end());
  space.insert(e.begin(), e.end());
  return space;
}

CompositeDistribution composite_distribution(const TokenDistribution& target,
                                             const TokenDistribution& expert,
                                             const TokenSet& space, double alpha) {
  require_same_length(target, expert);
  if (space.empty()) {
    throw SsdError(Errc::EmptySpace, "composite over empty sample space");
  }
  if (!(alpha >= 0.0)) {
    throw SsdError(Errc::InvalidArgument, "alpha must be >= 0");
  }

  CompositeDistribution cd;
  cd.support.reserve(space.size());
  cd.weights.reserve(space.size());
  double total = 0.0;
  for (TokenId id : space) {
    if (id >= target.size()) {
      throw SsdError(Errc::InvalidToken, "space member out of vocabulary range");
    }
    // blend form of target + alpha * (expert - target); evaluating it this way
    // keeps the alpha = 0 and alpha = 1 reductions bit-exact
    double f = (1.0 - alpha) * target[id] + alpha * expert[id];
    double w = f > 0.0 ? f : 0.0;
    cd.support.push_back(id);
    cd.weights.push_back(w);
    total += w;
  }

  if (total <= kDegenerateMass) {
    // All combined mass clipped away; restrict the target distribution instead.
    total = 0.0;
    for (std::size_t i = 0; i < cd.support.size(); ++i) {
      cd.weights[i] = target[cd.support[i]];
      total += cd.weights[i];
    }
    if (total <= kDegenerateMass) {
      throw SsdError(Errc::DegenerateFallbackUnavailable,
                     "neither composite nor target mass available on the space");
    }
  }
  for (double& w : cd.weights) {
    w /= total;
  }
  return cd;
}

TokenId select_token(const CompositeDistribution& cd) {
  if (cd.support.empty() || cd.support.size() != cd.weights.size()) {
    throw SsdError(Errc::InvalidArgument, "malformed composite distribution");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < cd.weights.size(); ++i) {
    if (cd.weights[i] > cd.weights[best]) {
      best = i;  // strict >: support is ascending, so ties keep the lowest id
    }
  }
  return cd.support[best];
}

}  // namespace ssd
