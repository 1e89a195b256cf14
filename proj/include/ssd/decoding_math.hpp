#pragma once

/**
 * Pure set and probability arithmetic behind the decoding engine: top-k
 * ranking, the three sample-space constructions (intersection, guarded
 * intersection, union), the composite distribution over a restricted space,
 * and greedy token selection.
 *
 * Every function is deterministic; ties are broken by ascending token id
 * throughout, which is what makes the speculative decoder reproducible
 * against its token-by-token reference.
 */

#include <cstdint>

#include "ssd/core.hpp"

namespace ssd {

/// Token ids sorted by probability descending, ties by ascending id.
using RankedTokens = std::vector<TokenId>;

struct IntersectionResult {
  TokenSet space;
  std::uint32_t k_used = 0;  ///< smallest k whose top-k intersection reached size c

  friend bool operator==(const IntersectionResult&, const IntersectionResult&) = default;
};

struct GuardedSpace {
  TokenSet space;
  bool fallback = false;  ///< true when the target's own top-c replaced the intersection

  friend bool operator==(const GuardedSpace&, const GuardedSpace&) = default;
};

/**
 * Probability weights over a restricted support. Support is stored in
 * ascending id order; weights are non-negative and sum to 1.
 */
struct CompositeDistribution {
  std::vector<TokenId> support;
  std::vector<double> weights;
};

/// Lowest-id token of maximum probability.
TokenId argmax_token(const TokenDistribution& d);

/// All token ids ordered by probability descending, ties ascending id.
RankedTokens full_ranking(const TokenDistribution& d);

/**
 * First k tokens of the full ranking.
 * Throws KTooLarge when k exceeds the vocabulary (or is zero).
 */
RankedTokens top_tokens(const TokenDistribution& d, std::uint32_t k);

/**
 * Smallest-k top-k intersection of the two rankings that reaches size c,
 * together with the k that achieved it. Always terminates: at k = vocab_size
 * the intersection is the whole vocabulary. Symmetric in its two
 * distribution arguments. Throws CTooLarge when c exceeds the vocabulary.
 */
IntersectionResult intersection_space(const TokenDistribution& target,
                                      const TokenDistribution& expert,
                                      std::uint32_t c);

/**
 * Intersection space guarded by the target's top-kappa tokens: if none of
 * them made it into the intersection, fall back to the target's own top-c so
 * the target's preferred continuations stay reachable. Requires kappa < c.
 */
GuardedSpace guarded_intersection_space(const TokenDistribution& target,
                                        const TokenDistribution& expert,
                                        std::uint32_t c, std::uint32_t kappa);

/// Union of the two top-c sets; size is always in [c, 2c].
TokenSet union_space(const TokenDistribution& target,
                     const TokenDistribution& expert, std::uint32_t c);

/**
 * Composite weights over `space`: F(x) = P_target(x) + alpha * (P_expert(x) -
 * P_target(x)), clipped at zero and renormalized. If every clipped value is
 * (numerically) zero, falls back to the target distribution restricted to the
 * space; if that is also massless, throws DegenerateFallbackUnavailable.
 *
 * Under greedy selection the clip-and-renormalize step never changes which
 * member attains the maximum, and alpha = 0 / alpha = 1 reduce exactly to the
 * target / expert distributions over the space.
 */
CompositeDistribution composite_distribution(const TokenDistribution& target,
                                             const TokenDistribution& expert,
                                             const TokenSet& space, double alpha);

/// Support member with maximum weight, ties by ascending token id.
TokenId select_token(const CompositeDistribution& cd);

}  // namespace ssd
