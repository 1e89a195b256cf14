#pragma once

/**
 * Core domain types for the dual-model decoding simulator: token ids,
 * vocabularies, probability distributions, the decoding-scheme enum, and the
 * hyperparameter bundle shared by every other module.
 *
 * All types here are plain values; once constructed they are never mutated,
 * so they can be shared freely between concurrent sessions.
 */

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ssd {

/// Index into a vocabulary. Valid ids are 0 <= id < vocab_size.
using TokenId = std::uint32_t;

/// Probability vector over the full vocabulary, indexed by token id.
using TokenDistribution = std::vector<double>;

/// Ordered token set; ascending iteration keeps downstream math deterministic.
using TokenSet = std::set<TokenId>;

/// Absolute tolerance for sum-to-one checks on probability vectors.
inline constexpr double kProbSumTolerance = 1e-9;

// ============================================================================
// Errors
// ============================================================================

enum class Errc {
  Ok = 0,
  // distribution validity
  LengthMismatch,
  NegativeMass,
  NotNormalized,
  // configuration
  UnknownFamily,
  InvalidArgument,
  // models
  InvalidToken,
  ParseError,
  InvalidDistribution,
  EmptyCorpus,
  // decoding math
  KTooLarge,
  CTooLarge,
  EmptySpace,
  DegenerateFallbackUnavailable,
  // controller
  WrongBinLength,
  // harness
  ZeroTokens,
  ScenarioInvalid,
  NoScenarios,
  NoCompleteBins,
};

const char* errc_name(Errc code);

/// Library-wide exception. `code()` identifies the violated contract.
class SsdError : public std::runtime_error {
 public:
  SsdError(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// ============================================================================
// Vocabulary
// ============================================================================

/**
 * Token id range shared by the two models of a session, plus the
 * end-of-sequence id. Both models of a session must carry equal vocabularies.
 */
class Vocabulary {
 public:
  Vocabulary(std::uint32_t vocab_size, TokenId eos);

  std::uint32_t size() const { return vocab_size_; }
  TokenId eos() const { return eos_; }
  bool contains(TokenId id) const { return id < vocab_size_; }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::uint32_t vocab_size_;
  TokenId eos_;
};

// ============================================================================
// Decoding scheme
// ============================================================================

/// The engine's current mode: Intersection prioritizes utility, Union safety.
enum class DecodingScheme { Intersection, Union };

const char* scheme_name(DecodingScheme scheme);
DecodingScheme scheme_from_name(std::string_view name);

// ============================================================================
// Configuration
// ============================================================================

/**
 * Direction of the match-ratio comparison in the scheme controller.
 * HighIsIntersection: beta >= threshold selects Intersection (default).
 * LowIsIntersection: beta <= threshold selects Intersection.
 * Equality selects Intersection under either direction.
 */
enum class ThresholdDirection { HighIsIntersection, LowIsIntersection };

/**
 * Hyperparameters of the full decoding procedure. Defaults are the standard
 * model-family settings; see default_config() for the weakly-aligned variant.
 */
struct SSDConfig {
  double alpha_i0 = 0.3;      ///< initial Intersection strength
  double alpha_u0 = 0.8;      ///< Union strength (never annealed)
  double alpha_i_min = 0.3;   ///< floor of the annealed Intersection strength
  double alpha_decay = 0.15;  ///< per-bin Intersection strength decay
  double beta0 = 0.6;         ///< initial match-ratio threshold
  double beta_decay = 0.1;    ///< per-bin threshold decay
  std::uint32_t space_size = 10;      ///< target sample-space size c
  std::uint32_t kappa = 1;            ///< guard width of the intersection scheme
  std::uint32_t lookahead = 3;        ///< draft tokens per speculative round T
  std::uint32_t bin_size = 7;         ///< tokens per match-ratio bin b
  std::uint32_t max_new_tokens = 128; ///< generation budget N
  ThresholdDirection threshold_direction = ThresholdDirection::HighIsIntersection;

  friend bool operator==(const SSDConfig&, const SSDConfig&) = default;
};

/**
 * Preset configurations per model family.
 * "standard" uses alpha_i0 = 0.3, alpha_u0 = 0.8; "weakly-aligned" raises the
 * strengths to 0.45 / 2.0 for targets with poorer built-in refusal behavior.
 * Throws SsdError(UnknownFamily) for any other label.
 */
SSDConfig default_config(std::string_view model_family);

/// Throws SsdError(InvalidArgument) naming the first violated field constraint.
void validate_config(const SSDConfig& config);

/**
 * JSON round trip with snake_case keys matching the field names exactly.
 * config_from_json treats every key as optional and applies it over `base`;
 * unknown keys are rejected with SsdError(ParseError).
 */
nlohmann::json config_to_json(const SSDConfig& config);
SSDConfig config_from_json(const nlohmann::json& j, const SSDConfig& base = SSDConfig{});

// ============================================================================
// Distribution validity
// ============================================================================

/**
 * Checks one probability vector against a vocabulary: length must equal
 * vocab_size, every entry must be >= 0, and the total mass must be within
 * kProbSumTolerance of 1. Returns Errc::Ok or the first violated invariant
 * (LengthMismatch, then NegativeMass, then NotNormalized).
 */
Errc validate_distribution(const TokenDistribution& d, const Vocabulary& v);

/// Throwing variant of validate_distribution, used at model-construction time.
void require_valid_distribution(const TokenDistribution& d, const Vocabulary& v,
                                const std::string& where);

}  // namespace ssd
