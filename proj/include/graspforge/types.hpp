#pragma once

#include "graspforge/core.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace graspforge {

enum class GraspStrategy { Pinch2, Tripod3, WholeHand, Bimanual };

inline constexpr std::array<GraspStrategy, 4> kAllStrategies = {
    GraspStrategy::Pinch2, GraspStrategy::Tripod3, GraspStrategy::WholeHand,
    GraspStrategy::Bimanual};

inline std::string_view to_string(GraspStrategy s) {
  switch (s) {
    case GraspStrategy::Pinch2: return "Pinch2";
    case GraspStrategy::Tripod3: return "Tripod3";
    case GraspStrategy::WholeHand: return "WholeHand";
    case GraspStrategy::Bimanual: return "Bimanual";
  }
  return "?";
}

inline std::optional<GraspStrategy> parse_strategy(std::string_view name) {
  for (auto s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

inline GraspStrategy strategy_from_string(std::string_view name) {
  if (auto s = parse_strategy(name)) return *s;
  throw ParseError("unknown grasp strategy '" + std::string(name) + "'");
}

inline bool is_bimanual(GraspStrategy s) { return s == GraspStrategy::Bimanual; }

/// Point contact between a hand and the object.
///
/// `frame` maps the local contact frame to the world; its z column is the
/// pressing direction (pointing into the object).
struct Contact {
  Vec3 position = Vec3::Zero();
  Mat3 frame = Mat3::Identity();
  int hand = 0;
  std::string anchor_id;

  Vec3 pressing_direction() const { return frame.col(2); }
};

using ContactSet = std::vector<Contact>;

}  // namespace graspforge
