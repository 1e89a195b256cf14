#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ssd/engine.hpp"
#include "support/generators.hpp"

using namespace ssd;
using ssd::testing::Rng;

namespace {

TokenDistribution one_hot(std::uint32_t vocab_size, TokenId id) {
  TokenDistribution d(vocab_size, 0.0);
  d[id] = 1.0;
  return d;
}

/// Deterministic chain model: suffix [prev] -> point mass on rows[prev].
std::shared_ptr<TableModel> chain_model(const Vocabulary& vocab,
                                        const std::map<TokenId, TokenId>& rows,
                                        TokenId default_peak) {
  std::map<std::vector<TokenId>, TokenDistribution> contexts;
  for (const auto& [prev, next] : rows) {
    contexts[{prev}] = one_hot(vocab.size(), next);
  }
  return std::make_shared<TableModel>(vocab, one_hot(vocab.size(), default_peak),
                                      std::move(contexts), 1);
}

SSDConfig small_config() {
  SSDConfig config;
  config.space_size = 4;
  config.kappa = 1;
  return config;
}

Session random_session(Rng& rng) {
  std::uniform_int_distribution<std::uint32_t> vocab_size(4, 64);
  const std::uint32_t v = vocab_size(rng);
  Vocabulary vocab(v, v - 1);
  SSDConfig config = ssd::testing::random_config(rng, v);
  auto prompt = ssd::testing::random_tokens(rng, v, 1 + rng() % 4);
  auto prefill = ssd::testing::random_tokens(rng, v, rng() % 4);
  return make_session(ssd::testing::random_model(rng, vocab),
                      ssd::testing::random_model(rng, vocab), config, prompt, prefill);
}

}  // namespace

// ===========================================================================
// draft_tokens
// ===========================================================================

TEST_CASE("a constant expert drafts its peak token repeatedly") {
  Vocabulary vocab(6, 5);
  auto expert = chain_model(vocab, {}, 2);
  std::vector<TokenId> context{0};
  CHECK(draft_tokens(*expert, context, 3) == std::vector<TokenId>{2, 2, 2});
}

TEST_CASE("a triggered persona drafts its override then EOS, not stopping at EOS") {
  Vocabulary vocab(12, 11);
  auto base = chain_model(vocab, {}, 0);
  auto persona = std::make_shared<PersonaModel>(base, std::vector<TokenId>{3},
                                                std::vector<TokenId>{5, 9});
  std::vector<TokenId> context{1, 3};
  CHECK(draft_tokens(*persona, context, 3) == std::vector<TokenId>{5, 9, 11});
  CHECK(draft_tokens(*persona, context, 4) == std::vector<TokenId>{5, 9, 11, 11});
}

TEST_CASE("lookahead one is a single greedy step") {
  Vocabulary vocab(6, 5);
  auto expert = chain_model(vocab, {{0, 4}}, 2);
  std::vector<TokenId> context{0};
  CHECK(draft_tokens(*expert, context, 1) == std::vector<TokenId>{4});
}

// ===========================================================================
// verify_round
// ===========================================================================

TEST_CASE("identical models accept every draft in the round") {
  Vocabulary vocab(8, 7);
  auto model = chain_model(vocab, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, 6);
  SSDConfig config = small_config();
  config.alpha_i0 = 0.77;
  config.alpha_i_min = 0.0;

  std::vector<TokenId> context{0};
  DraftResult draft = draft_with_distributions(*model, context, 3);
  auto target_dists = model->batch_next_distributions(context, draft.tokens);

  ControllerState controller = make_controller(config);
  VerifyResult round = verify_round(config, vocab, controller, 0, draft.tokens,
                                    draft.dists, target_dists);
  REQUIRE(round.records.size() == 3);
  CHECK(!round.exited_early);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(round.records[t].indicator);
    CHECK(round.records[t].token == draft.tokens[t]);
    CHECK(round.records[t].position == t + 1);
  }
}

TEST_CASE("a first-position disagreement emits the target's greedy token") {
  Vocabulary vocab(8, 7);
  auto target = chain_model(vocab, {}, 1);  // always wants token 1
  auto expert = chain_model(vocab, {}, 2);  // always drafts token 2
  SSDConfig config = small_config();
  config.alpha_i0 = 0.0;  // with kappa = 1 the target argmax must win
  config.alpha_i_min = 0.0;

  std::vector<TokenId> context{0};
  DraftResult draft = draft_with_distributions(*expert, context, 3);
  auto target_dists = target->batch_next_distributions(context, draft.tokens);

  ControllerState controller = make_controller(config);
  VerifyResult round = verify_round(config, vocab, controller, 0, draft.tokens,
                                    draft.dists, target_dists);
  REQUIRE(round.records.size() == 1);
  CHECK(round.exited_early);
  CHECK(round.records[0].token == 1);
  CHECK(!round.records[0].indicator);
  CHECK(!round.finished.has_value());
}

TEST_CASE("an agreed EOS ends the round with finish reason eos") {
  Vocabulary vocab(8, 7);
  auto model = chain_model(vocab, {{0, 7}}, 3);  // EOS right after the prompt
  SSDConfig config = small_config();

  std::vector<TokenId> context{0};
  DraftResult draft = draft_with_distributions(*model, context, 3);
  auto target_dists = model->batch_next_distributions(context, draft.tokens);

  ControllerState controller = make_controller(config);
  VerifyResult round = verify_round(config, vocab, controller, 0, draft.tokens,
                                    draft.dists, target_dists);
  REQUIRE(round.records.size() == 1);
  CHECK(round.records[0].token == 7);
  CHECK(round.records[0].indicator);
  REQUIRE(round.finished.has_value());
  CHECK(*round.finished == FinishReason::Eos);
}

// ===========================================================================
// generate
// ===========================================================================

TEST_CASE("a five-token chain plus EOS takes exactly two speculative rounds") {
  Vocabulary vocab(8, 7);
  auto model = chain_model(vocab, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 7}}, 6);
  SSDConfig config = small_config();
  config.lookahead = 3;
  config.max_new_tokens = 20;

  Session session = make_session(model, model, config, {0});
  GenerationTrace trace = generate(session);

  CHECK(trace.token_ids() == std::vector<TokenId>{1, 2, 3, 4, 5, 7});
  CHECK(trace.rounds == 2);
  CHECK(trace.finished_by == FinishReason::Eos);
  CHECK(trace.bins.empty());  // six tokens never fill the default bin of seven
  for (const TokenRecord& record : trace.tokens) {
    CHECK(record.indicator);
    CHECK(record.scheme == DecodingScheme::Intersection);
  }
  CHECK(trace.draft_calls == 6);
  CHECK(trace.target_batch_calls == 2);
}

TEST_CASE("permanently disagreeing models emit one token per round") {
  Vocabulary vocab(8, 7);
  auto target = chain_model(vocab, {}, 1);
  auto expert = chain_model(vocab, {}, 2);
  SSDConfig config = small_config();
  config.lookahead = 3;
  config.max_new_tokens = 5;  // stays inside the first (never completed) bin

  Session session = make_session(target, expert, config, {0});
  GenerationTrace trace = generate(session);
  CHECK(trace.tokens.size() == 5);
  CHECK(trace.rounds == 5);
  CHECK(trace.finished_by == FinishReason::Budget);
  for (const TokenRecord& record : trace.tokens) {
    CHECK(!record.indicator);
    CHECK(record.token == 1);
    CHECK(record.draft_token == 2);
  }
  // drafts are generated for all lookahead positions before verification
  CHECK(trace.draft_calls == 15);
}

TEST_CASE("a budget of one emits exactly one token regardless of lookahead") {
  Vocabulary vocab(8, 7);
  auto model = chain_model(vocab, {{0, 1}, {1, 2}}, 6);
  SSDConfig config = small_config();
  config.lookahead = 5;
  config.max_new_tokens = 1;

  GenerationTrace trace = generate(make_session(model, model, config, {0}));
  CHECK(trace.tokens.size() == 1);
  CHECK(trace.rounds == 1);
  CHECK(trace.finished_by == FinishReason::Budget);
}

TEST_CASE("every round makes progress") {
  Rng rng(51);
  for (int iter = 0; iter < 50; ++iter) {
    Session session = random_session(rng);
    GenerationTrace trace = generate(session);
    CHECK(trace.rounds <= trace.tokens.size());
    CHECK(trace.tokens.size() <= session.config.max_new_tokens);
  }
}

// ===========================================================================
// reference equivalence and reductions
// ===========================================================================

TEST_CASE("speculative and reference traces agree on random sessions") {
  Rng rng(52);
  for (int iter = 0; iter < 100; ++iter) {
    Session session = random_session(rng);
    GenerationTrace speculative = generate(session);
    GenerationTrace reference = reference_generate(session);
    REQUIRE(traces_equivalent(speculative, reference));
    CHECK(!first_trace_divergence(speculative, reference).has_value());
  }
}

TEST_CASE("identical models reduce to greedy decoding of the expert") {
  Vocabulary vocab(8, 7);
  auto model = chain_model(vocab, {{0, 1}, {1, 2}, {2, 3}, {3, 7}}, 6);
  SSDConfig config = small_config();
  config.max_new_tokens = 10;
  Session session = make_session(model, model, config, {0});

  std::vector<TokenId> context{0};
  CHECK(generate(session).token_ids() == greedy_generate(*model, context, 10));
}

TEST_CASE("alpha zero with kappa one pinned to Intersection reduces to the target") {
  Rng rng(53);
  for (int iter = 0; iter < 50; ++iter) {
    Session session = random_session(rng);
    session.config.alpha_i0 = 0.0;
    session.config.alpha_i_min = 0.0;
    session.config.kappa = 1;
    session.config.beta0 = 0.0;  // any ratio >= 0 keeps Intersection
    session.config.threshold_direction = ThresholdDirection::HighIsIntersection;

    std::vector<TokenId> context = session.prompt;
    context.insert(context.end(), session.prefill.begin(), session.prefill.end());
    CHECK(generate(session).token_ids() ==
          greedy_generate(*session.target, context, session.config.max_new_tokens));
  }
}

TEST_CASE("union pinned with alpha one reduces to the expert") {
  Rng rng(54);
  for (int iter = 0; iter < 50; ++iter) {
    Session session = random_session(rng);
    session.config.alpha_u0 = 1.0;
    session.config.bin_size = session.config.max_new_tokens + 1;  // no bin completes
    session.initial_scheme = DecodingScheme::Union;

    std::vector<TokenId> context = session.prompt;
    context.insert(context.end(), session.prefill.begin(), session.prefill.end());
    CHECK(generate(session).token_ids() ==
          greedy_generate(*session.expert, context, session.config.max_new_tokens));
  }
}

TEST_CASE("prefill tokens are conditioned on exactly like prompt tokens") {
  Rng rng(55);
  for (int iter = 0; iter < 50; ++iter) {
    Session with_prefill = random_session(rng);
    if (with_prefill.prefill.empty()) {
      with_prefill.prefill = ssd::testing::random_tokens(
          rng, with_prefill.target->vocab().size(), 2);
    }
    std::vector<TokenId> merged = with_prefill.prompt;
    merged.insert(merged.end(), with_prefill.prefill.begin(), with_prefill.prefill.end());
    Session as_prompt = make_session(with_prefill.target, with_prefill.expert,
                                     with_prefill.config, merged);
    CHECK(traces_equivalent(generate(with_prefill), generate(as_prompt)));
  }
}

TEST_CASE("indicators mark exactly the tokens that equal the expert greedy choice") {
  Rng rng(56);
  for (int iter = 0; iter < 30; ++iter) {
    Session session = random_session(rng);
    GenerationTrace trace = generate(session);
    std::vector<TokenId> context = session.prompt;
    context.insert(context.end(), session.prefill.begin(), session.prefill.end());
    for (const TokenRecord& record : trace.tokens) {
      TokenId expert_greedy = argmax_token(session.expert->next_distribution(context));
      CHECK(record.draft_token == expert_greedy);
      CHECK(record.indicator == (record.token == expert_greedy));
      context.push_back(record.token);
    }
  }
}

// ===========================================================================
// session validation, trace serialization
// ===========================================================================

TEST_CASE("sessions reject mismatched vocabularies and empty prompts") {
  Vocabulary small(6, 5);
  Vocabulary large(8, 7);
  auto a = chain_model(small, {}, 1);
  auto b = chain_model(large, {}, 1);
  CHECK_THROWS_AS(make_session(a, b, small_config(), {0}), SsdError);
  CHECK_THROWS_AS(make_session(a, a, small_config(), {}), SsdError);

  SSDConfig too_big = small_config();
  too_big.space_size = 7;
  CHECK_THROWS_AS(make_session(a, a, too_big, {0}), SsdError);

  CHECK_THROWS_AS(make_session(a, a, small_config(), {9}), SsdError);
}

TEST_CASE("first_trace_divergence pinpoints the earliest differing record") {
  Rng rng(58);
  Session session = random_session(rng);
  GenerationTrace trace = generate(session);
  if (trace.tokens.size() < 2) {
    return;
  }
  GenerationTrace mutated = trace;
  mutated.tokens[1].token ^= 1;
  CHECK(first_trace_divergence(trace, mutated) == 2);

  GenerationTrace truncated = trace;
  truncated.tokens.pop_back();
  CHECK(first_trace_divergence(trace, truncated) == trace.tokens.size());
}

TEST_CASE("trace JSON round trip preserves everything") {
  Rng rng(57);
  Session session = random_session(rng);
  GenerationTrace trace = generate(session);
  GenerationTrace back = trace_from_json(trace_to_json(trace));
  CHECK(traces_equivalent(trace, back));
  CHECK(back.rounds == trace.rounds);
  CHECK(back.draft_calls == trace.draft_calls);
  CHECK(back.target_batch_calls == trace.target_batch_calls);
}

TEST_CASE("greedy_generate follows the chain and stops at EOS") {
  Vocabulary vocab(8, 7);
  auto model = chain_model(vocab, {{0, 1}, {1, 2}, {2, 7}}, 6);
  std::vector<TokenId> context{0};
  CHECK(greedy_generate(*model, context, 10) == std::vector<TokenId>{1, 2, 7});
  CHECK(greedy_generate(*model, context, 2) == std::vector<TokenId>{1, 2});
}
