#pragma once

/**
 * Deterministic random fixtures shared by the property tests and the
 * acceptance suite: distributions, table/ngram model pairs, prompts, and
 * configurations. Everything is seeded explicitly so failures replay.
 */

#include <random>
#include <vector>

#include "ssd/core.hpp"
#include "ssd/models.hpp"

namespace ssd::testing {

using Rng = std::mt19937_64;

/// Strictly positive normalized distribution (no exact zeros, no exact ties).
inline TokenDistribution random_distribution(Rng& rng, std::uint32_t vocab_size) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  TokenDistribution d(vocab_size);
  double total = 0.0;
  for (double& p : d) {
    p = unit(rng);
    total += p;
  }
  for (double& p : d) {
    p /= total;
  }
  return d;
}

/// Distribution with heavy ties: masses drawn from a small grid.
inline TokenDistribution random_tied_distribution(Rng& rng, std::uint32_t vocab_size) {
  std::uniform_int_distribution<int> grid(0, 3);
  std::vector<int> raw(vocab_size);
  int total = 0;
  for (int& v : raw) {
    v = grid(rng);
    total += v;
  }
  if (total == 0) {
    raw[0] = 1;
    total = 1;
  }
  TokenDistribution d(vocab_size);
  for (std::uint32_t i = 0; i < vocab_size; ++i) {
    d[i] = static_cast<double>(raw[i]) / total;
  }
  return d;
}

inline std::vector<TokenId> random_tokens(Rng& rng, std::uint32_t vocab_size,
                                          std::size_t count) {
  std::uniform_int_distribution<TokenId> pick(0, vocab_size - 1);
  std::vector<TokenId> out(count);
  for (TokenId& id : out) {
    id = pick(rng);
  }
  return out;
}

/// Table model with a random default plus a few random single-token suffixes.
inline std::shared_ptr<TableModel> random_table_model(Rng& rng, const Vocabulary& vocab) {
  std::uniform_int_distribution<std::size_t> n_contexts(0, 6);
  std::uniform_int_distribution<TokenId> pick(0, vocab.size() - 1);
  std::map<std::vector<TokenId>, TokenDistribution> contexts;
  const std::size_t n = n_contexts(rng);
  for (std::size_t i = 0; i < n; ++i) {
    contexts[{pick(rng)}] = random_distribution(rng, vocab.size());
  }
  return std::make_shared<TableModel>(vocab, random_distribution(rng, vocab.size()),
                                      std::move(contexts), 1);
}

/// Bigram model trained on a random corpus.
inline std::shared_ptr<NGramModel> random_ngram_model(Rng& rng, const Vocabulary& vocab) {
  std::uniform_int_distribution<std::size_t> n_seqs(1, 4);
  std::uniform_int_distribution<std::size_t> seq_len(2, 24);
  std::uniform_real_distribution<double> smoothing(0.1, 2.0);
  std::vector<std::vector<TokenId>> corpus;
  const std::size_t n = n_seqs(rng);
  for (std::size_t i = 0; i < n; ++i) {
    corpus.push_back(random_tokens(rng, vocab.size(), seq_len(rng)));
  }
  return train_ngram(corpus, 2, smoothing(rng), vocab);
}

/// Either family, at the caller's coin flip.
inline ModelPtr random_model(Rng& rng, const Vocabulary& vocab) {
  if (rng() % 2 == 0) {
    return random_table_model(rng, vocab);
  }
  return random_ngram_model(rng, vocab);
}

/// Valid random configuration over the vocabulary, biased toward small bins
/// and lookaheads so bin completions and round exits happen often.
inline SSDConfig random_config(Rng& rng, std::uint32_t vocab_size) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> lookahead(1, 5);
  std::uniform_int_distribution<std::uint32_t> bin(2, 9);
  std::uniform_int_distribution<std::uint32_t> budget(1, 40);
  SSDConfig config;
  config.alpha_i0 = unit(rng);
  config.alpha_i_min = config.alpha_i0 * unit(rng);
  config.alpha_u0 = 2.5 * unit(rng);
  config.alpha_decay = 0.3 * unit(rng);
  config.beta0 = unit(rng);
  config.beta_decay = 0.3 * unit(rng);
  std::uniform_int_distribution<std::uint32_t> space(2, std::min<std::uint32_t>(vocab_size, 12));
  config.space_size = space(rng);
  std::uniform_int_distribution<std::uint32_t> kappa(1, config.space_size - 1);
  config.kappa = kappa(rng);
  config.lookahead = lookahead(rng);
  config.bin_size = bin(rng);
  config.max_new_tokens = budget(rng);
  config.threshold_direction = rng() % 4 == 0 ? ThresholdDirection::LowIsIntersection
                                              : ThresholdDirection::HighIsIntersection;
  return config;
}

}  // namespace ssd::testing
