#include "ssd/models.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ssd {

void LanguageModel::require_tokens_in_range(std::span<const TokenId> tokens) const {
  for (TokenId id : tokens) {
    if (!vocab_.contains(id)) {
      throw SsdError(Errc::InvalidToken,
                     "token " + std::to_string(id) + " out of range for vocab_size " +
                         std::to_string(vocab_.size()));
    }
  }
}

std::vector<TokenDistribution> LanguageModel::batch_next_distributions(
    std::span<const TokenId> context, std::span<const TokenId> drafts) const {
  if (drafts.empty()) {
    throw SsdError(Errc::InvalidArgument, "batch requires at least one draft token");
  }
  require_tokens_in_range(drafts);
  std::vector<TokenDistribution> out;
  out.reserve(drafts.size());
  std::vector<TokenId> prefix(context.begin(), context.end());
  for (std::size_t t = 0; t < drafts.size(); ++t) {
    out.push_back(next_distribution(prefix));
    if (t + 1 < drafts.size()) {
      prefix.push_back(drafts[t]);
    }
  }
  return out;
}

// ============================================================================
// TableModel
// ============================================================================

TableModel::TableModel(Vocabulary vocab, TokenDistribution default_dist,
                       std::map<std::vector<TokenId>, TokenDistribution> context_map,
                       std::uint32_t max_suffix)
    : LanguageModel(vocab),
      default_dist_(std::move(default_dist)),
      context_map_(std::move(context_map)),
      max_suffix_(max_suffix) {
  require_valid_distribution(default_dist_, this->vocab(), "default");
  for (const auto& [suffix, dist] : context_map_) {
    if (suffix.empty() || suffix.size() > max_suffix_) {
      throw SsdError(Errc::InvalidArgument,
                     "context suffix length must be in [1, max_suffix]");
    }
    require_tokens_in_range(suffix);
    std::ostringstream key;
    for (std::size_t i = 0; i < suffix.size(); ++i) {
      if (i) key << ' ';
      key << suffix[i];
    }
    require_valid_distribution(dist, this->vocab(), "context \"" + key.str() + "\"");
  }
}

TokenDistribution TableModel::next_distribution(std::span<const TokenId> context) const {
  require_tokens_in_range(context);
  std::size_t longest = std::min<std::size_t>(max_suffix_, context.size());
  for (std::size_t len = longest; len >= 1; --len) {
    std::vector<TokenId> suffix(context.end() - len, context.end());
    auto it = context_map_.find(suffix);
    if (it != context_map_.end()) {
      return it->second;
    }
  }
  return default_dist_;
}

namespace {

TokenDistribution parse_prob_row(const nlohmann::json& row, const std::string& where) {
  if (!row.is_array()) {
    throw SsdError(Errc::ParseError, where + " must be an array of probabilities");
  }
  TokenDistribution d;
  d.reserve(row.size());
  for (const auto& p : row) {
    if (!p.is_number()) {
      throw SsdError(Errc::ParseError, where + " must contain numbers only");
    }
    d.push_back(p.get<double>());
  }
  return d;
}

std::vector<TokenId> parse_suffix_key(const std::string& key) {
  std::istringstream in(key);
  std::vector<TokenId> suffix;
  long long id;
  while (in >> id) {
    if (id < 0) {
      throw SsdError(Errc::ParseError, "negative token id in context key \"" + key + "\"");
    }
    suffix.push_back(static_cast<TokenId>(id));
  }
  if (!in.eof() || suffix.empty()) {
    throw SsdError(Errc::ParseError, "malformed context key \"" + key + "\"");
  }
  return suffix;
}

}  // namespace

std::shared_ptr<TableModel> table_model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw SsdError(Errc::ParseError, "table model must be a JSON object");
  }
  for (const auto& key : {"vocab_size", "eos", "default", "max_suffix", "contexts"}) {
    if (!j.contains(key)) {
      throw SsdError(Errc::ParseError, std::string("table model missing key: ") + key);
    }
  }
  auto is_count = [](const nlohmann::json& v) {
    return v.is_number_integer() && v.get<std::int64_t>() >= 0;
  };
  if (!is_count(j.at("vocab_size")) || !is_count(j.at("eos")) ||
      !is_count(j.at("max_suffix")) || !j.at("contexts").is_object()) {
    throw SsdError(Errc::ParseError, "table model field has wrong type");
  }
  Vocabulary vocab(j.at("vocab_size").get<std::uint32_t>(), j.at("eos").get<TokenId>());

  auto check_row = [&vocab](const TokenDistribution& d, const std::string& where) {
    Errc code = validate_distribution(d, vocab);
    if (code != Errc::Ok) {
      throw SsdError(Errc::InvalidDistribution,
                     "row " + where + " failed validation (" + errc_name(code) + ")");
    }
  };

  TokenDistribution default_dist = parse_prob_row(j.at("default"), "default");
  check_row(default_dist, "\"default\"");

  std::map<std::vector<TokenId>, TokenDistribution> contexts;
  for (const auto& [key, row] : j.at("contexts").items()) {
    TokenDistribution d = parse_prob_row(row, "context \"" + key + "\"");
    check_row(d, "\"" + key + "\"");
    contexts.emplace(parse_suffix_key(key), std::move(d));
  }

  return std::make_shared<TableModel>(vocab, std::move(default_dist),
                                      std::move(contexts),
                                      j.at("max_suffix").get<std::uint32_t>());
}

std::shared_ptr<TableModel> load_table_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw SsdError(Errc::ParseError, "cannot open model file " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SsdError(Errc::ParseError,
                   "invalid JSON in " + path.string() + ": " + e.what());
  }
  return table_model_from_json(j);
}

// ============================================================================
// NGramModel
// ============================================================================

NGramModel::NGramModel(Vocabulary vocab, std::uint32_t order, double smoothing,
                       Counts counts)
    : LanguageModel(vocab),
      order_(order),
      smoothing_(smoothing),
      counts_(std::move(counts)) {
  if (order_ == 0) {
    throw SsdError(Errc::InvalidArgument, "ngram order must be >= 1");
  }
  if (!(smoothing_ > 0.0)) {
    throw SsdError(Errc::InvalidArgument, "smoothing constant must be > 0");
  }
  for (const auto& [ctx, per_token] : counts_) {
    if (ctx.size() != order_ - 1) {
      throw SsdError(Errc::InvalidArgument, "context length must equal order - 1");
    }
    require_tokens_in_range(ctx);
    std::uint64_t total = 0;
    for (const auto& [token, count] : per_token) {
      if (!this->vocab().contains(token)) {
        throw SsdError(Errc::InvalidToken, "counted token out of range");
      }
      total += count;
    }
    totals_[ctx] = total;
  }
}

TokenDistribution NGramModel::next_distribution(std::span<const TokenId> context) const {
  require_tokens_in_range(context);
  const std::uint32_t vocab_size = vocab().size();
  const std::size_t ctx_len = order_ - 1;

  const std::map<TokenId, std::uint64_t>* per_token = nullptr;
  std::uint64_t total = 0;
  if (context.size() >= ctx_len) {
    std::vector<TokenId> key(context.end() - ctx_len, context.end());
    auto it = counts_.find(key);
    if (it != counts_.end()) {
      per_token = &it->second;
      total = totals_.at(key);
    }
  }

  const double denom = static_cast<double>(total) + smoothing_ * vocab_size;
  TokenDistribution d(vocab_size, smoothing_ / denom);
  if (per_token != nullptr) {
    for (const auto& [token, count] : *per_token) {
      d[token] = (static_cast<double>(count) + smoothing_) / denom;
    }
  }
  return d;
}

std::shared_ptr<NGramModel> train_ngram(
    const std::vector<std::vector<TokenId>>& corpus, std::uint32_t order,
    double smoothing, const Vocabulary& vocab) {
  if (order == 0) {
    throw SsdError(Errc::InvalidArgument, "ngram order must be >= 1");
  }
  NGramModel::Counts counts;
  bool any = false;
  for (const auto& seq : corpus) {
    if (seq.size() < order) {
      continue;
    }
    any = true;
    for (std::size_t i = 0; i + order <= seq.size(); ++i) {
      std::vector<TokenId> ctx(seq.begin() + i, seq.begin() + i + order - 1);
      TokenId next = seq[i + order - 1];
      ++counts[std::move(ctx)][next];
    }
  }
  if (!any) {
    throw SsdError(Errc::EmptyCorpus,
                   "no corpus sequence reaches the ngram order");
  }
  return std::make_shared<NGramModel>(vocab, order, smoothing, std::move(counts));
}

// ============================================================================
// PersonaModel
// ============================================================================

PersonaModel::PersonaModel(ModelPtr base, std::vector<TokenId> trigger,
                           std::vector<TokenId> override_sequence)
    : LanguageModel(base ? base->vocab() : Vocabulary(2, 0)),
      base_(std::move(base)),
      trigger_(std::move(trigger)),
      override_sequence_(std::move(override_sequence)) {
  if (!base_) {
    throw SsdError(Errc::InvalidArgument, "persona requires a base model");
  }
  if (trigger_.empty()) {
    throw SsdError(Errc::InvalidArgument, "persona trigger must be non-empty");
  }
  require_tokens_in_range(trigger_);
  require_tokens_in_range(override_sequence_);
}

TokenDistribution PersonaModel::next_distribution(std::span<const TokenId> context) const {
  require_tokens_in_range(context);
  auto hit = std::search(context.begin(), context.end(), trigger_.begin(), trigger_.end());
  if (hit == context.end()) {
    return base_->next_distribution(context);
  }
  // Tokens past the first trigger occurrence index into the override sequence.
  std::size_t past = static_cast<std::size_t>(context.end() - hit) - trigger_.size();
  TokenId next = past < override_sequence_.size() ? override_sequence_[past]
                                                  : vocab().eos();
  TokenDistribution d(vocab().size(), 0.0);
  d[next] = 1.0;
  return d;
}

}  // namespace ssd
