#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace recaudit {

using ItemId = std::uint32_t;
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

// Floor division so that pre-epoch values would still land on the right day.
constexpr std::int64_t day_of(Timestamp t) {
  return t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
}

constexpr Timestamp day_start(std::int64_t day) { return day * kSecondsPerDay; }

// Input that violates a documented precondition or cannot be processed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace recaudit
