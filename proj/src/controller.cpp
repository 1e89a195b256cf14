#include "ssd/controller.hpp"

#include <algorithm>

namespace ssd {

ControllerState make_controller(const SSDConfig& config, DecodingScheme initial_scheme) {
  validate_config(config);
  ControllerState state;
  state.scheme = initial_scheme;
  state.alpha_i = config.alpha_i0;
  state.alpha_u = config.alpha_u0;
  state.beta_th = config.beta0;
  return state;
}

double match_ratio(std::span<const std::uint8_t> indicators, std::uint32_t bin_size) {
  if (indicators.size() != bin_size) {
    throw SsdError(Errc::WrongBinLength,
                   "expected " + std::to_string(bin_size) + " indicators, got " +
                       std::to_string(indicators.size()));
  }
  std::uint32_t ones = 0;
  for (std::uint8_t bit : indicators) {
    ones += bit ? 1 : 0;
  }
  return static_cast<double>(ones) / static_cast<double>(bin_size);
}

ControllerState controller_update(const ControllerState& state, double beta,
                                  const SSDConfig& config) {
  ControllerState next = state;

  const bool pick_intersection =
      config.threshold_direction == ThresholdDirection::HighIsIntersection
          ? beta >= next.beta_th
          : beta <= next.beta_th;
  const DecodingScheme chosen =
      pick_intersection ? DecodingScheme::Intersection : DecodingScheme::Union;

  if (chosen == state.scheme) {
    next.beta_th = std::max(0.0, next.beta_th - config.beta_decay);
    if (chosen == DecodingScheme::Intersection) {
      next.alpha_i = std::max(config.alpha_i_min, next.alpha_i - config.alpha_decay);
    }
  } else {
    next.beta_th = config.beta0;
    next.alpha_i = config.alpha_i0;
  }
  next.scheme = chosen;
  return next;
}

std::optional<BinReport> record_indicator(ControllerState& state, bool indicator,
                                          const SSDConfig& config) {
  state.bin_buffer.push_back(indicator ? 1 : 0);
  if (state.bin_buffer.size() < config.bin_size) {
    return std::nullopt;
  }

  const double beta = match_ratio(state.bin_buffer, config.bin_size);
  BinReport report;
  report.beta = beta;
  report.scheme_before = state.scheme;
  report.beta_th_before = state.beta_th;

  ControllerState updated = controller_update(state, beta, config);
  updated.bin_buffer.clear();
  updated.bins_seen = state.bins_seen + 1;

  report.bin_index = updated.bins_seen;
  report.scheme_after = updated.scheme;
  report.beta_th_after = updated.beta_th;
  report.alpha_i_after = updated.alpha_i;

  state = std::move(updated);
  return report;
}

}  // namespace ssd
