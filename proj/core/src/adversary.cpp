#include "bcom/adversary.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "bcom/errors.hpp"

namespace bcom {

namespace {

// Tag words keep the per-channel draws of different kinds apart.
constexpr std::uint64_t kDirectionTag = 0x6469726563ULL;
constexpr std::uint64_t kPhaseTag = 0x7068617365ULL;
constexpr std::uint64_t kSignTag = 0x7369676e73ULL;
constexpr std::uint64_t kPointTag = 0x706f696e74ULL;

}  // namespace

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kConstant:
      return "constant";
    case ScheduleKind::kSinusoidal:
      return "sinusoidal";
    case ScheduleKind::kSignAlternating:
      return "sign_alternating";
    case ScheduleKind::kSeededBounded:
      return "seeded_bounded";
  }
  return "unknown";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "sinusoidal") return ScheduleKind::kSinusoidal;
  if (name == "sign_alternating") return ScheduleKind::kSignAlternating;
  if (name == "seeded_bounded") return ScheduleKind::kSeededBounded;
  throw ConfigError("kind", "unknown schedule kind '" + name + "'");
}

Vector AdversarySchedule::at(std::int64_t t, Index dim, std::uint64_t channel) const {
  if (dim < 1) throw InvalidDimensionError("AdversarySchedule::at: dimension must be >= 1");
  const double per_coord = radius / std::sqrt(static_cast<double>(dim));
  switch (kind) {
    case ScheduleKind::kConstant: {
      Rng rng = keyed_rng(seed, {kDirectionTag, channel});
      return radius * sample_unit_sphere(dim, rng).v;
    }
    case ScheduleKind::kSinusoidal: {
      Rng rng = keyed_rng(seed, {kPhaseTag, channel});
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      Vector out(dim);
      const double omega = 2.0 * std::numbers::pi / period;
      for (Index i = 0; i < dim; ++i) out(i) = per_coord * std::sin(omega * static_cast<double>(t) + phase(rng));
      return out;
    }
    case ScheduleKind::kSignAlternating: {
      Rng rng = keyed_rng(seed, {kSignTag, channel});
      std::bernoulli_distribution coin(0.5);
      const double parity = (t % 2 == 0) ? 1.0 : -1.0;
      Vector out(dim);
      for (Index i = 0; i < dim; ++i) out(i) = parity * (coin(rng) ? per_coord : -per_coord);
      return out;
    }
    case ScheduleKind::kSeededBounded: {
      Rng rng = keyed_rng(seed, {kPointTag, channel, static_cast<std::uint64_t>(t)});
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const Vector dir = sample_unit_sphere(dim, rng).v;
      return radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim)) * dir;
    }
  }
  throw ConfigError("kind", "unknown schedule kind");
}

}  // namespace bcom
