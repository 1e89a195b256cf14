#include "ssd/engine.hpp"

namespace ssd {

const char* space_kind_name(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::Intersection: return "intersection";
    case SpaceKind::Fallback: return "fallback";
    case SpaceKind::Union: return "union";
  }
  return "unknown";
}

SpaceKind space_kind_from_name(std::string_view name) {
  if (name == "intersection") return SpaceKind::Intersection;
  if (name == "fallback") return SpaceKind::Fallback;
  if (name == "union") return SpaceKind::Union;
  throw SsdError(Errc::ParseError, "unknown space kind: " + std::string(name));
}

const char* finish_reason_name(FinishReason reason) {
  return reason == FinishReason::Eos ? "eos" : "budget";
}

FinishReason finish_reason_from_name(std::string_view name) {
  if (name == "eos") return FinishReason::Eos;
  if (name == "budget") return FinishReason::Budget;
  throw SsdError(Errc::ParseError, "unknown finish reason: " + std::string(name));
}

namespace {

void validate_session(const Session& session) {
  if (!session.target || !session.expert) {
    throw SsdError(Errc::InvalidArgument, "session requires both models");
  }
  if (!(session.target->vocab() == session.expert->vocab())) {
    throw SsdError(Errc::InvalidArgument,
                   "target and expert must share one vocabulary");
  }
  if (session.prompt.empty()) {
    throw SsdError(Errc::InvalidArgument, "prompt must be non-empty");
  }
  validate_config(session.config);
  if (session.config.space_size > session.target->vocab().size()) {
    throw SsdError(Errc::InvalidArgument, "space_size must be <= vocab_size");
  }
  for (TokenId id : session.prompt) {
    if (!session.target->vocab().contains(id)) {
      throw SsdError(Errc::InvalidToken, "prompt token out of range");
    }
  }
  for (TokenId id : session.prefill) {
    if (!session.target->vocab().contains(id)) {
      throw SsdError(Errc::InvalidToken, "prefill token out of range");
    }
  }
}

struct SchemePick {
  TokenId token = 0;
  double alpha = 0.0;
  std::uint32_t space_size = 0;
  SpaceKind kind = SpaceKind::Intersection;
};

// Scheme-dependent space construction plus composite selection; shared by the
// speculative and reference decoders so they differ only in batching.
SchemePick pick_token(const SSDConfig& config, const ControllerState& controller,
                      const TokenDistribution& target_dist,
                      const TokenDistribution& expert_dist) {
  SchemePick pick;
  TokenSet space;
  if (controller.scheme == DecodingScheme::Intersection) {
    GuardedSpace guarded = guarded_intersection_space(
        target_dist, expert_dist, config.space_size, config.kappa);
    space = std::move(guarded.space);
    pick.kind = guarded.fallback ? SpaceKind::Fallback : SpaceKind::Intersection;
    pick.alpha = controller.alpha_i;
  } else {
    space = union_space(target_dist, expert_dist, config.space_size);
    pick.kind = SpaceKind::Union;
    pick.alpha = controller.alpha_u;
  }
  pick.space_size = static_cast<std::uint32_t>(space.size());
  CompositeDistribution cd =
      composite_distribution(target_dist, expert_dist, space, pick.alpha);
  pick.token = select_token(cd);
  return pick;
}

}  // namespace

Session make_session(ModelPtr target, ModelPtr expert, SSDConfig config,
                     std::vector<TokenId> prompt, std::vector<TokenId> prefill,
                     DecodingScheme initial_scheme) {
  Session session{std::move(target), std::move(expert), config,
                  std::move(prompt), std::move(prefill), initial_scheme};
  validate_session(session);
  return session;
}

std::vector<TokenId> GenerationTrace::token_ids() const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const TokenRecord& record : tokens) {
    ids.push_back(record.token);
  }
  return ids;
}

DraftResult draft_with_distributions(const LanguageModel& expert,
                                     std::span<const TokenId> context,
                                     std::uint32_t lookahead) {
  if (lookahead == 0) {
    throw SsdError(Errc::InvalidArgument, "lookahead must be >= 1");
  }
  DraftResult result;
  result.tokens.reserve(lookahead);
  result.dists.reserve(lookahead);
  std::vector<TokenId> prefix(context.begin(), context.end());
  for (std::uint32_t t = 0; t < lookahead; ++t) {
    TokenDistribution dist = expert.next_distribution(prefix);
    TokenId drafted = argmax_token(dist);
    result.dists.push_back(std::move(dist));
    result.tokens.push_back(drafted);
    prefix.push_back(drafted);
  }
  return result;
}

std::vector<TokenId> draft_tokens(const LanguageModel& expert,
                                  std::span<const TokenId> context,
                                  std::uint32_t lookahead) {
  return draft_with_distributions(expert, context, lookahead).tokens;
}

VerifyResult verify_round(const SSDConfig& config, const Vocabulary& vocab,
                          ControllerState& controller, std::uint32_t emitted_so_far,
                          std::span<const TokenId> drafts,
                          std::span<const TokenDistribution> expert_dists,
                          std::span<const TokenDistribution> target_dists) {
  if (drafts.empty() || expert_dists.size() != drafts.size() ||
      target_dists.size() != drafts.size()) {
    throw SsdError(Errc::InvalidArgument,
                   "drafts and per-position distributions must align");
  }

  VerifyResult result;
  std::uint32_t emitted = emitted_so_far;
  for (std::size_t t = 0; t < drafts.size(); ++t) {
    SchemePick pick = pick_token(config, controller, target_dists[t], expert_dists[t]);

    TokenRecord record;
    record.position = emitted + 1;
    record.token = pick.token;
    record.draft_token = drafts[t];
    record.indicator = pick.token == drafts[t];
    record.scheme = controller.scheme;
    record.alpha_used = pick.alpha;
    record.space_size = pick.space_size;
    record.space_kind = pick.kind;
    result.records.push_back(record);
    ++emitted;

    if (auto bin = record_indicator(controller, record.indicator, config)) {
      result.bins.push_back(*bin);
    }

    if (pick.token == vocab.eos()) {
      result.finished = FinishReason::Eos;
      break;
    }
    if (emitted >= config.max_new_tokens) {
      result.finished = FinishReason::Budget;
      break;
    }
    if (!record.indicator) {
      result.exited_early = true;
      break;
    }
  }
  return result;
}

GenerationTrace generate(const Session& session) {
  validate_session(session);
  const SSDConfig& config = session.config;
  const Vocabulary& vocab = session.target->vocab();

  ControllerState controller = make_controller(config, session.initial_scheme);
  std::vector<TokenId> context = session.prompt;
  context.insert(context.end(), session.prefill.begin(), session.prefill.end());

  GenerationTrace trace;
  while (true) {
    DraftResult draft = draft_with_distributions(*session.expert, context, config.lookahead);
    trace.draft_calls += config.lookahead;
    std::vector<TokenDistribution> target_dists =
        session.target->batch_next_distributions(context, draft.tokens);
    trace.target_batch_calls += 1;
    trace.rounds += 1;

    VerifyResult round = verify_round(config, vocab, controller,
                                      static_cast<std::uint32_t>(trace.tokens.size()),
                                      draft.tokens, draft.dists, target_dists);
    for (const TokenRecord& record : round.records) {
      context.push_back(record.token);
      trace.tokens.push_back(record);
    }
    trace.bins.insert(trace.bins.end(), round.bins.begin(), round.bins.end());

    if (round.finished) {
      trace.finished_by = *round.finished;
      return trace;
    }
  }
}

GenerationTrace reference_generate(const Session& session) {
  validate_session(session);
  const SSDConfig& config = session.config;
  const Vocabulary& vocab = session.target->vocab();

  ControllerState controller = make_controller(config, session.initial_scheme);
  std::vector<TokenId> context = session.prompt;
  context.insert(context.end(), session.prefill.begin(), session.prefill.end());

  GenerationTrace trace;
  while (true) {
    TokenDistribution expert_dist = session.expert->next_distribution(context);
    trace.draft_calls += 1;
    TokenDistribution target_dist = session.target->next_distribution(context);
    trace.target_batch_calls += 1;
    trace.rounds += 1;

    SchemePick pick = pick_token(config, controller, target_dist, expert_dist);
    TokenId draft = argmax_token(expert_dist);

    TokenRecord record;
    record.position = static_cast<std::uint32_t>(trace.tokens.size()) + 1;
    record.token = pick.token;
    record.draft_token = draft;
    record.indicator = pick.token == draft;
    record.scheme = controller.scheme;
    record.alpha_used = pick.alpha;
    record.space_size = pick.space_size;
    record.space_kind = pick.kind;
    trace.tokens.push_back(record);
    context.push_back(record.token);

    if (auto bin = record_indicator(controller, record.indicator, config)) {
      trace.bins.push_back(*bin);
    }

    if (record.token == vocab.eos()) {
      trace.finished_by = FinishReason::Eos;
      return trace;
    }
    if (trace.tokens.size() >= config.max_new_tokens) {
      trace.finished_by = FinishReason::Budget;
      return trace;
    }
  }
}

std::vector<TokenId> greedy_generate(const LanguageModel& model,
                                     std::span<const TokenId> context,
                                     std::uint32_t max_new_tokens) {
  std::vector<TokenId> prefix(context.begin(), context.end());
  std::vector<TokenId> out;
  while (out.size() < max_new_tokens) {
    TokenId token = argmax_token(model.next_distribution(prefix));
    out.push_back(token);
    prefix.push_back(token);
    if (token == model.vocab().eos()) {
      break;
    }
  }
  return out;
}

bool traces_equivalent(const GenerationTrace& a, const GenerationTrace& b) {
  return a.tokens == b.tokens && a.bins == b.bins && a.finished_by == b.finished_by;
}

std::optional<std::uint32_t> first_trace_divergence(const GenerationTrace& a,
                                                    const GenerationTrace& b) {
  const std::size_t shared = std::min(a.tokens.size(), b.tokens.size());
  for (std::size_t i = 0; i < shared; ++i) {
    if (!(a.tokens[i] == b.tokens[i])) {
      return static_cast<std::uint32_t>(i + 1);
    }
  }
  if (traces_equivalent(a, b)) {
    return std::nullopt;
  }
  return static_cast<std::uint32_t>(shared + 1);
}

nlohmann::json trace_to_json(const GenerationTrace& trace) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const TokenRecord& r : trace.tokens) {
    tokens.push_back({
        {"pos", r.position},
        {"token", r.token},
        {"draft", r.draft_token},
        {"indicator", r.indicator ? 1 : 0},
        {"scheme", scheme_name(r.scheme)},
        {"alpha", r.alpha_used},
        {"space_size", r.space_size},
        {"space_kind", space_kind_name(r.space_kind)},
    });
  }
  nlohmann::json bins = nlohmann::json::array();
  for (const BinReport& b : trace.bins) {
    bins.push_back({
        {"bin_index", b.bin_index},
        {"beta", b.beta},
        {"scheme_before", scheme_name(b.scheme_before)},
        {"scheme_after", scheme_name(b.scheme_after)},
        {"beta_th_before", b.beta_th_before},
        {"beta_th_after", b.beta_th_after},
        {"alpha_i_after", b.alpha_i_after},
    });
  }
  return nlohmann::json{
      {"tokens", std::move(tokens)},
      {"bins", std::move(bins)},
      {"rounds", trace.rounds},
      {"draft_calls", trace.draft_calls},
      {"target_batch_calls", trace.target_batch_calls},
      {"finished_by", finish_reason_name(trace.finished_by)},
  };
}

GenerationTrace trace_from_json(const nlohmann::json& j) {
  try {
    GenerationTrace trace;
    for (const auto& t : j.at("tokens")) {
      TokenRecord r;
      r.position = t.at("pos").get<std::uint32_t>();
      r.token = t.at("token").get<TokenId>();
      r.draft_token = t.at("draft").get<TokenId>();
      r.indicator = t.at("indicator").get<int>() != 0;
      r.scheme = scheme_from_name(t.at("scheme").get<std::string>());
      r.alpha_used = t.at("alpha").get<double>();
      r.space_size = t.at("space_size").get<std::uint32_t>();
      r.space_kind = space_kind_from_name(t.at("space_kind").get<std::string>());
      trace.tokens.push_back(r);
    }
    for (const auto& b : j.at("bins")) {
      BinReport report;
      report.bin_index = b.at("bin_index").get<std::uint32_t>();
      report.beta = b.at("beta").get<double>();
      report.scheme_before = scheme_from_name(b.at("scheme_before").get<std::string>());
      report.scheme_after = scheme_from_name(b.at("scheme_after").get<std::string>());
      report.beta_th_before = b.at("beta_th_before").get<double>();
      report.beta_th_after = b.at("beta_th_after").get<double>();
      report.alpha_i_after = b.at("alpha_i_after").get<double>();
      trace.bins.push_back(report);
    }
    trace.rounds = j.at("rounds").get<std::uint32_t>();
    trace.draft_calls = j.at("draft_calls").get<std::uint64_t>();
    trace.target_batch_calls = j.at("target_batch_calls").get<std::uint64_t>();
    trace.finished_by = finish_reason_from_name(j.at("finished_by").get<std::string>());
    return trace;
  } catch (const nlohmann::json::exception& e) {
    throw SsdError(Errc::ParseError, std::string("malformed trace JSON: ") + e.what());
  }
}

}  // namespace ssd
