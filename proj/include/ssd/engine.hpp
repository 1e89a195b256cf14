#pragma once

/**
 * The speculative decoding loop and its token-by-token reference twin.
 *
 * Each round the expert drafts lookahead tokens autoregressively, the target
 * evaluates all draft prefixes in one batch, and verification walks the
 * drafts in order: build the sample space for the current scheme, select the
 * composite token, record whether it matched the draft, feed the controller,
 * and exit the round on the first mismatch. Rounds never emit a bonus token
 * on full acceptance. reference_generate performs the identical selection
 * one token at a time and must produce the same trace; it is the correctness
 * oracle for the speculative bookkeeping.
 */

#include <cstdint>
#include <memory>
#include <optional>
#include <span>

#include "ssd/controller.hpp"
#include "ssd/core.hpp"
#include "ssd/decoding_math.hpp"
#include "ssd/models.hpp"

namespace ssd {

/// How each emitted token's sample space was built.
enum class SpaceKind { Intersection, Fallback, Union };

enum class FinishReason { Eos, Budget };

const char* space_kind_name(SpaceKind kind);
SpaceKind space_kind_from_name(std::string_view name);
const char* finish_reason_name(FinishReason reason);
FinishReason finish_reason_from_name(std::string_view name);

/**
 * One decoding session: the two models, the hyperparameters, and the fixed
 * context (prompt plus an optional attacker-controlled response prefix that
 * generation conditions on but never re-generates). initial_scheme defaults
 * to Intersection; tests pin the Union scheme by overriding it and disabling
 * bin updates via bin_size > max_new_tokens.
 */
struct Session {
  ModelPtr target;
  ModelPtr expert;
  SSDConfig config;
  std::vector<TokenId> prompt;
  std::vector<TokenId> prefill;
  DecodingScheme initial_scheme = DecodingScheme::Intersection;
};

/// Validates model/vocabulary agreement, token ranges, config bounds, and a
/// non-empty prompt. Throws SsdError on any violation.
Session make_session(ModelPtr target, ModelPtr expert, SSDConfig config,
                     std::vector<TokenId> prompt, std::vector<TokenId> prefill = {},
                     DecodingScheme initial_scheme = DecodingScheme::Intersection);

/// Everything the engine decided for one emitted token.
struct TokenRecord {
  std::uint32_t position = 0;  ///< 1-based index within the generated continuation
  TokenId token = 0;
  TokenId draft_token = 0;
  bool indicator = false;  ///< token == draft_token
  DecodingScheme scheme = DecodingScheme::Intersection;
  double alpha_used = 0.0;
  std::uint32_t space_size = 0;
  SpaceKind space_kind = SpaceKind::Intersection;

  friend bool operator==(const TokenRecord&, const TokenRecord&) = default;
};

struct GenerationTrace {
  std::vector<TokenRecord> tokens;
  std::vector<BinReport> bins;
  std::uint32_t rounds = 0;
  std::uint64_t draft_calls = 0;
  std::uint64_t target_batch_calls = 0;
  FinishReason finished_by = FinishReason::Budget;

  std::vector<TokenId> token_ids() const;
};

/**
 * Greedy autoregressive drafts from the expert: each step takes the argmax
 * (ties to the lowest id) of the expert's distribution on context plus the
 * drafts so far. Drafting does not stop at EOS; verification decides
 * termination.
 */
std::vector<TokenId> draft_tokens(const LanguageModel& expert,
                                  std::span<const TokenId> context,
                                  std::uint32_t lookahead);

/// Drafts plus the expert distributions computed along the way (result.dists[t]
/// conditions on context + tokens[0..t), exactly the batch contract).
struct DraftResult {
  std::vector<TokenId> tokens;
  std::vector<TokenDistribution> dists;
};
DraftResult draft_with_distributions(const LanguageModel& expert,
                                     std::span<const TokenId> context,
                                     std::uint32_t lookahead);

/**
 * Verification of one speculative round. emitted_so_far is the number of
 * tokens generated before this round (positions continue from there);
 * completed bins are appended to `bins` and controller updates take effect
 * from the next position onward, mid-round included.
 */
struct VerifyResult {
  std::vector<TokenRecord> records;
  std::vector<BinReport> bins;
  bool exited_early = false;                 ///< a draft was rejected
  std::optional<FinishReason> finished;      ///< set when EOS or the budget hit
};

VerifyResult verify_round(const SSDConfig& config, const Vocabulary& vocab,
                          ControllerState& controller, std::uint32_t emitted_so_far,
                          std::span<const TokenId> drafts,
                          std::span<const TokenDistribution> expert_dists,
                          std::span<const TokenDistribution> target_dists);

/// The full speculative loop. Deterministic; does not mutate the session.
GenerationTrace generate(const Session& session);

/**
 * Token-by-token decoding with the identical scheme/composite selection and
 * controller feeding, no speculation. Produces a trace equal to generate()
 * on tokens, indicators, schemes, alphas, spaces, bins, and finish reason
 * (call counters legitimately differ).
 */
GenerationTrace reference_generate(const Session& session);

/// Plain greedy decoding of a single model; the no-defense baseline.
std::vector<TokenId> greedy_generate(const LanguageModel& model,
                                     std::span<const TokenId> context,
                                     std::uint32_t max_new_tokens);

/**
 * Equality on the semantically meaningful trace content: token records, bin
 * reports, and finish reason. first_trace_divergence returns the 1-based
 * position of the first differing token record (or one past the shorter
 * trace), nullopt when equivalent.
 */
bool traces_equivalent(const GenerationTrace& a, const GenerationTrace& b);
std::optional<std::uint32_t> first_trace_divergence(const GenerationTrace& a,
                                                    const GenerationTrace& b);

nlohmann::json trace_to_json(const GenerationTrace& trace);
GenerationTrace trace_from_json(const nlohmann::json& j);

}  // namespace ssd
