#include "ssd/core.hpp"

#include <cmath>

namespace ssd {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::Ok: return "Ok";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NegativeMass: return "NegativeMass";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::UnknownFamily: return "UnknownFamily";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidToken: return "InvalidToken";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidDistribution: return "InvalidDistribution";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::CTooLarge: return "CTooLarge";
    case Errc::EmptySpace: return "EmptySpace";
    case Errc::DegenerateFallbackUnavailable: return "DegenerateFallbackUnavailable";
    case Errc::WrongBinLength: return "WrongBinLength";
    case Errc::ZeroTokens: return "ZeroTokens";
    case Errc::ScenarioInvalid: return "ScenarioInvalid";
    case Errc::NoScenarios: return "NoScenarios";
    case Errc::NoCompleteBins: return "NoCompleteBins";
  }
  return "Unknown";
}

Vocabulary::Vocabulary(std::uint32_t vocab_size, TokenId eos)
    : vocab_size_(vocab_size), eos_(eos) {
  if (vocab_size < 2) {
    throw SsdError(Errc::InvalidArgument, "vocab_size must be >= 2");
  }
  if (eos >= vocab_size) {
    throw SsdError(Errc::InvalidArgument, "eos must be < vocab_size");
  }
}

const char* scheme_name(DecodingScheme scheme) {
  return scheme == DecodingScheme::Intersection ? "intersection" : "union";
}

DecodingScheme scheme_from_name(std::string_view name) {
  if (name == "intersection") return DecodingScheme::Intersection;
  if (name == "union") return DecodingScheme::Union;
  throw SsdError(Errc::ParseError, "unknown scheme name: " + std::string(name));
}

namespace {

const char* direction_name(ThresholdDirection d) {
  return d == ThresholdDirection::HighIsIntersection ? "high_is_intersection"
                                                     : "low_is_intersection";
}

ThresholdDirection direction_from_name(std::string_view name) {
  if (name == "high_is_intersection") return ThresholdDirection::HighIsIntersection;
  if (name == "low_is_intersection") return ThresholdDirection::LowIsIntersection;
  throw SsdError(Errc::ParseError,
                 "unknown threshold_direction: " + std::string(name));
}

}  // namespace

SSDConfig default_config(std::string_view model_family) {
  SSDConfig config;  // field initializers carry the standard settings
  if (model_family == "standard") {
    return config;
  }
  if (model_family == "weakly-aligned") {
    config.alpha_i0 = 0.45;
    config.alpha_u0 = 2.0;
    return config;
  }
  throw SsdError(Errc::UnknownFamily,
                 "unknown model family: " + std::string(model_family));
}

void validate_config(const SSDConfig& config) {
  auto fail = [](const char* what) {
    throw SsdError(Errc::InvalidArgument, what);
  };
  if (!(config.alpha_i0 >= 0.0)) fail("alpha_i0 must be >= 0");
  if (!(config.alpha_u0 >= 0.0)) fail("alpha_u0 must be >= 0");
  if (!(config.alpha_i_min >= 0.0)) fail("alpha_i_min must be >= 0");
  if (config.alpha_i_min > config.alpha_i0) fail("alpha_i_min must be <= alpha_i0");
  if (!(config.alpha_decay >= 0.0)) fail("alpha_decay must be >= 0");
  if (!(config.beta0 >= 0.0 && config.beta0 <= 1.0)) fail("beta0 must be in [0, 1]");
  if (!(config.beta_decay >= 0.0)) fail("beta_decay must be >= 0");
  if (config.space_size == 0) fail("space_size must be positive");
  if (config.kappa == 0) fail("kappa must be positive");
  if (config.kappa >= config.space_size) fail("kappa must be < space_size");
  if (config.lookahead == 0) fail("lookahead must be positive");
  if (config.bin_size == 0) fail("bin_size must be positive");
  if (config.max_new_tokens == 0) fail("max_new_tokens must be positive");
}

nlohmann::json config_to_json(const SSDConfig& config) {
  return nlohmann::json{
      {"alpha_i0", config.alpha_i0},
      {"alpha_u0", config.alpha_u0},
      {"alpha_i_min", config.alpha_i_min},
      {"alpha_decay", config.alpha_decay},
      {"beta0", config.beta0},
      {"beta_decay", config.beta_decay},
      {"space_size", config.space_size},
      {"kappa", config.kappa},
      {"lookahead", config.lookahead},
      {"bin_size", config.bin_size},
      {"max_new_tokens", config.max_new_tokens},
      {"threshold_direction", direction_name(config.threshold_direction)},
  };
}

namespace {

double read_real(const nlohmann::json& j, const char* key) {
  if (!j.at(key).is_number()) {
    throw SsdError(Errc::ParseError, std::string("config field ") + key + " must be a number");
  }
  return j.at(key).get<double>();
}

std::uint32_t read_count(const nlohmann::json& j, const char* key) {
  const auto& value = j.at(key);
  if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
    throw SsdError(Errc::ParseError,
                   std::string("config field ") + key + " must be a non-negative integer");
  }
  return value.get<std::uint32_t>();
}

}  // namespace

SSDConfig config_from_json(const nlohmann::json& j, const SSDConfig& base) {
  if (!j.is_object()) {
    throw SsdError(Errc::ParseError, "config must be a JSON object");
  }
  SSDConfig config = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "alpha_i0") config.alpha_i0 = read_real(j, "alpha_i0");
    else if (key == "alpha_u0") config.alpha_u0 = read_real(j, "alpha_u0");
    else if (key == "alpha_i_min") config.alpha_i_min = read_real(j, "alpha_i_min");
    else if (key == "alpha_decay") config.alpha_decay = read_real(j, "alpha_decay");
    else if (key == "beta0") config.beta0 = read_real(j, "beta0");
    else if (key == "beta_decay") config.beta_decay = read_real(j, "beta_decay");
    else if (key == "space_size") config.space_size = read_count(j, "space_size");
    else if (key == "kappa") config.kappa = read_count(j, "kappa");
    else if (key == "lookahead") config.lookahead = read_count(j, "lookahead");
    else if (key == "bin_size") config.bin_size = read_count(j, "bin_size");
    else if (key == "max_new_tokens") config.max_new_tokens = read_count(j, "max_new_tokens");
    else if (key == "threshold_direction") {
      if (!value.is_string()) {
        throw SsdError(Errc::ParseError, "threshold_direction must be a string");
      }
      config.threshold_direction = direction_from_name(value.get<std::string>());
    } else {
      throw SsdError(Errc::ParseError, "unknown config key: " + key);
    }
  }
  return config;
}

Errc validate_distribution(const TokenDistribution& d, const Vocabulary& v) {
  if (d.size() != v.size()) {
    return Errc::LengthMismatch;
  }
  for (double p : d) {
    if (!(p >= 0.0)) {  // also rejects NaN
      return Errc::NegativeMass;
    }
  }
  double sum = 0.0;
  for (double p : d) {
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    return Errc::NotNormalized;
  }
  return Errc::Ok;
}

void require_valid_distribution(const TokenDistribution& d, const Vocabulary& v,
                                const std::string& where) {
  Errc code = validate_distribution(d, v);
  if (code != Errc::Ok) {
    throw SsdError(code, "invalid distribution at " + where);
  }
}

}  // namespace ssd
