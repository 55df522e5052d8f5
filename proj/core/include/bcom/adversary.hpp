#pragma once

#include <cstdint>
#include <string>

#include "bcom/geometry.hpp"

namespace bcom {

enum class ScheduleKind { kConstant, kSinusoidal, kSignAlternating, kSeededBounded };

std::string to_string(ScheduleKind kind);
// Throws ConfigError on an unknown name.
ScheduleKind schedule_kind_from_string(const std::string& name);

// Oblivious sequence of vectors with ||at(t, ...)||_2 <= radius.
//
// at() is a pure function of (kind, radius, period, seed, t, dim, channel):
// nothing the learner does can influence it. Channels let one schedule drive
// several independent quantities (process noise, observation noise, offsets).
struct AdversarySchedule {
  ScheduleKind kind = ScheduleKind::kSeededBounded;
  double radius = 1.0;
  double period = 64.0;
  std::uint64_t seed = 0;

  Vector at(std::int64_t t, Index dim, std::uint64_t channel = 0) const;
};

}  // namespace bcom
