#pragma once

#include <cstdint>

namespace mktsim {

using Ticks = std::int64_t;     // prices are integer multiples of the tick
using Quantity = std::int64_t;  // shares
using TimeNs = std::int64_t;    // simulation time, nanoseconds since midnight
using AgentId = std::int32_t;
using OrderId = std::int64_t;

enum class Side : std::uint8_t { buy, sell };
enum class OrderKind : std::uint8_t { limit, market };

constexpr Side opposite(Side s) { return s == Side::buy ? Side::sell : Side::buy; }

constexpr TimeNs nanoseconds(long long n) { return n; }
constexpr TimeNs microseconds(long long us) { return us * 1'000; }
constexpr TimeNs milliseconds(long long ms) { return ms * 1'000'000; }
constexpr TimeNs seconds(long long s) { return s * 1'000'000'000; }
constexpr TimeNs minutes(long long m) { return seconds(m * 60); }
constexpr TimeNs hours(long long h) { return minutes(h * 60); }

}  // namespace mktsim
