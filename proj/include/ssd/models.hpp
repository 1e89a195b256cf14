#pragma once

/**
 * The language-model interface plus three synthetic model families used to
 * exercise the decoding engine at desk scale:
 *
 *  - TableModel:   explicit suffix-keyed distributions; hand-auditable fixtures.
 *  - NGramModel:   additive-smoothed n-gram counts; realistic distribution
 *                  shapes for agreement-rate experiments.
 *  - PersonaModel: wraps a base model and, once a trigger subsequence shows
 *                  up in the context, deterministically emits a fixed
 *                  override sequence followed by EOS (a refusal persona).
 *
 * Models are immutable after construction and safe for concurrent reads.
 */

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "ssd/core.hpp"

namespace ssd {

/**
 * Behavioral contract: identical context always yields an identical, valid
 * distribution. No operation mutates the model.
 */
class LanguageModel {
 public:
  explicit LanguageModel(Vocabulary vocab) : vocab_(vocab) {}
  virtual ~LanguageModel() = default;

  const Vocabulary& vocab() const { return vocab_; }

  /// Next-token distribution given the context. Throws InvalidToken when a
  /// context token is out of range.
  virtual TokenDistribution next_distribution(std::span<const TokenId> context) const = 0;

  /**
   * Distributions for the incremental draft prefixes: result[t] conditions on
   * context + drafts[0..t), so result[0] conditions on the context alone and
   * drafts.back() is never conditioned on. Semantically identical to the
   * sequential calls; the batch form only licenses implementations to
   * evaluate the prefixes in one pass.
   */
  virtual std::vector<TokenDistribution> batch_next_distributions(
      std::span<const TokenId> context, std::span<const TokenId> drafts) const;

 protected:
  void require_tokens_in_range(std::span<const TokenId> tokens) const;

 private:
  Vocabulary vocab_;
};

using ModelPtr = std::shared_ptr<const LanguageModel>;

// ============================================================================
// TableModel
// ============================================================================

/**
 * Distribution lookup by longest context suffix, falling through to a default
 * distribution when no stored suffix matches. Suffix keys are at most
 * max_suffix tokens long, most-recent token last.
 */
class TableModel : public LanguageModel {
 public:
  TableModel(Vocabulary vocab, TokenDistribution default_dist,
             std::map<std::vector<TokenId>, TokenDistribution> context_map,
             std::uint32_t max_suffix);

  TokenDistribution next_distribution(std::span<const TokenId> context) const override;

  std::uint32_t max_suffix() const { return max_suffix_; }

 private:
  TokenDistribution default_dist_;
  std::map<std::vector<TokenId>, TokenDistribution> context_map_;
  std::uint32_t max_suffix_;
};

/**
 * Loads a table model from its JSON file format:
 *   {"vocab_size": int, "eos": int, "default": [probs], "max_suffix": int,
 *    "contexts": {"<space-joined token ids>": [probs]}}
 * Throws ParseError for malformed files and InvalidDistribution (naming the
 * offending row) when any stored distribution fails validation.
 */
std::shared_ptr<TableModel> load_table_model(const std::filesystem::path& path);

/// Same parsing, from an in-memory JSON object.
std::shared_ptr<TableModel> table_model_from_json(const nlohmann::json& j);

// ============================================================================
// NGramModel
// ============================================================================

/**
 * Additive-smoothed n-gram model: P(t | ctx) = (count(ctx, t) + s) /
 * (total(ctx) + s * vocab_size). Contexts are the last order-1 tokens;
 * unseen (or too-short) contexts yield the uniform smoothed distribution.
 */
class NGramModel : public LanguageModel {
 public:
  using Counts = std::map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>>;

  NGramModel(Vocabulary vocab, std::uint32_t order, double smoothing, Counts counts);

  TokenDistribution next_distribution(std::span<const TokenId> context) const override;

  std::uint32_t order() const { return order_; }
  double smoothing() const { return smoothing_; }

 private:
  std::uint32_t order_;
  double smoothing_;
  Counts counts_;
  std::map<std::vector<TokenId>, std::uint64_t> totals_;
};

/**
 * Counts n-grams of the given order over the corpus. Sequences shorter than
 * the order contribute nothing; if none is long enough, throws EmptyCorpus.
 */
std::shared_ptr<NGramModel> train_ngram(
    const std::vector<std::vector<TokenId>>& corpus, std::uint32_t order,
    double smoothing, const Vocabulary& vocab);

// ============================================================================
// PersonaModel
// ============================================================================

/**
 * Before the trigger subsequence appears in the context this behaves exactly
 * as the base model. From the first occurrence on, the distribution is a
 * point mass on the next override token (positionally: k tokens past the
 * trigger select override[k]) and on EOS once the override is exhausted.
 */
class PersonaModel : public LanguageModel {
 public:
  PersonaModel(ModelPtr base, std::vector<TokenId> trigger,
               std::vector<TokenId> override_sequence);

  TokenDistribution next_distribution(std::span<const TokenId> context) const override;

  const std::vector<TokenId>& override_sequence() const { return override_sequence_; }

 private:
  ModelPtr base_;
  std::vector<TokenId> trigger_;
  std::vector<TokenId> override_sequence_;
};

}  // namespace ssd
