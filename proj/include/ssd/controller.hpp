#pragma once

/**
 * Match-ratio bookkeeping and the scheme/annealing state machine.
 *
 * Indicators (did the emitted token equal the expert's draft?) are collected
 * into bins of bin_size tokens. Each completed bin yields one match ratio and
 * one controller update: the ratio is compared against a live threshold to
 * pick the decoding scheme; while the scheme holds, the threshold (and, under
 * Intersection, the strength alpha_i) decays, and any scheme change resets
 * both to their initial values. Partial bins at end of generation never fire.
 */

#include <cstdint>
#include <optional>
#include <span>

#include "ssd/core.hpp"

namespace ssd {

/**
 * Live controller variables owned by exactly one generation session.
 * alpha_u is carried here for symmetry but is never annealed.
 */
struct ControllerState {
  DecodingScheme scheme = DecodingScheme::Intersection;
  double alpha_i = 0.0;
  double alpha_u = 0.0;
  double beta_th = 0.0;
  std::vector<std::uint8_t> bin_buffer;
  std::uint32_t bins_seen = 0;

  friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

/// One completed bin: the ratio observed and the update it caused.
struct BinReport {
  std::uint32_t bin_index = 0;  ///< 1-based
  double beta = 0.0;
  DecodingScheme scheme_before = DecodingScheme::Intersection;
  DecodingScheme scheme_after = DecodingScheme::Intersection;
  double beta_th_before = 0.0;
  double beta_th_after = 0.0;
  double alpha_i_after = 0.0;

  friend bool operator==(const BinReport&, const BinReport&) = default;
};

/// Fresh controller for a session about to start generating.
ControllerState make_controller(const SSDConfig& config,
                                DecodingScheme initial_scheme = DecodingScheme::Intersection);

/**
 * Mean of one bin's indicator bits. Throws WrongBinLength unless the span
 * holds exactly bin_size entries.
 */
double match_ratio(std::span<const std::uint8_t> indicators, std::uint32_t bin_size);

/**
 * One scheme/annealing step for a completed bin with match ratio beta.
 * Under the default threshold direction, beta >= beta_th selects Intersection
 * (equality included); LowIsIntersection flips the comparison. An unchanged
 * scheme decays beta_th by beta_decay (floored at 0) and, under Intersection,
 * alpha_i by alpha_decay (floored at alpha_i_min); a changed scheme resets
 * beta_th to beta0 and alpha_i to alpha_i0.
 */
ControllerState controller_update(const ControllerState& state, double beta,
                                  const SSDConfig& config);

/**
 * Appends one indicator bit. When the buffer reaches bin_size this computes
 * the match ratio, applies controller_update, clears the buffer, bumps
 * bins_seen, and returns the report; otherwise returns nothing.
 */
std::optional<BinReport> record_indicator(ControllerState& state, bool indicator,
                                          const SSDConfig& config);

}  // namespace ssd
