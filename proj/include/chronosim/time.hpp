#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace chronosim {

/// Thrown when a time value leaves the representable nanosecond range or
/// the NTP era.
class TimeRangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

/// Signed time interval with nanosecond resolution.
///
/// Halving (`halved()`) truncates toward zero on odd nanosecond counts;
/// cross-implementation ports must do the same to stay bit-compatible.
class Duration {
public:
    constexpr Duration() = default;

    static constexpr Duration nanos(std::int64_t n) { return Duration(n); }
    static constexpr Duration micros(std::int64_t n) { return Duration(n * 1'000); }
    static constexpr Duration millis(std::int64_t n) { return Duration(n * 1'000'000); }
    static constexpr Duration seconds(std::int64_t n) { return Duration(n * 1'000'000'000); }
    static constexpr Duration minutes(std::int64_t n) { return seconds(n * 60); }
    static constexpr Duration hours(std::int64_t n) { return seconds(n * 3600); }

    constexpr std::int64_t count() const { return ns_; }
    constexpr double to_seconds() const { return static_cast<double>(ns_) * 1e-9; }
    constexpr double to_millis() const { return static_cast<double>(ns_) * 1e-6; }

    constexpr Duration halved() const { return Duration(ns_ / 2); }
    constexpr Duration abs() const { return Duration(ns_ < 0 ? -ns_ : ns_); }

    constexpr Duration operator-() const { return Duration(-ns_); }
    constexpr Duration operator+(Duration o) const { return Duration(ns_ + o.ns_); }
    constexpr Duration operator-(Duration o) const { return Duration(ns_ - o.ns_); }
    constexpr Duration operator*(std::int64_t k) const { return Duration(ns_ * k); }
    constexpr Duration& operator+=(Duration o) { ns_ += o.ns_; return *this; }
    constexpr Duration& operator-=(Duration o) { ns_ -= o.ns_; return *this; }

    constexpr auto operator<=>(const Duration&) const = default;

private:
    constexpr explicit Duration(std::int64_t n) : ns_(n) {}
    std::int64_t ns_ = 0;
};

/// A point on a timeline: nanoseconds since the epoch. The epoch is the
/// simulation start (t = 0) in simulated runs and the Unix epoch in live
/// mode; all arithmetic is epoch-agnostic.
class Instant {
public:
    constexpr Instant() = default;

    static constexpr Instant from_nanos(std::int64_t n) { return Instant(n); }
    static constexpr Instant epoch() { return Instant(0); }

    constexpr std::int64_t nanos_since_epoch() const { return ns_; }

    constexpr Instant operator+(Duration d) const { return Instant(ns_ + d.count()); }
    constexpr Instant operator-(Duration d) const { return Instant(ns_ - d.count()); }
    constexpr Duration operator-(Instant o) const { return Duration::nanos(ns_ - o.ns_); }

    constexpr auto operator<=>(const Instant&) const = default;

private:
    constexpr explicit Instant(std::int64_t n) : ns_(n) {}
    std::int64_t ns_ = 0;
};

/// 64-bit NTP wire timestamp: seconds since 1900-01-01T00:00:00 plus a
/// 32-bit binary fraction of a second (units of 2^-32 s). Era 0 only.
struct NtpTimestamp {
    std::uint32_t seconds = 0;
    std::uint32_t fraction = 0;

    constexpr bool operator==(const NtpTimestamp&) const = default;
    constexpr bool is_zero() const { return seconds == 0 && fraction == 0; }

    /// Big-endian 8-byte layout: seconds then fraction.
    std::array<std::uint8_t, 8> to_bytes() const;
    static NtpTimestamp from_bytes(std::span<const std::uint8_t, 8> bytes);
};

/// Seconds between the NTP era-0 epoch (1900) and the Unix epoch (1970).
inline constexpr std::int64_t kNtpUnixDeltaSeconds = 2'208'988'800;

/// Converts a Unix-epoch instant to NTP wire form. Rounds the sub-second
/// part to the nearest fraction unit, ties away from zero. Throws
/// TimeRangeError outside era 0.
NtpTimestamp ntp_encode(Instant t);

/// Inverse of ntp_encode; rounds to the nearest nanosecond, ties away
/// from zero. decode(encode(t)) == t for every in-era nanosecond instant.
Instant ntp_decode(NtpTimestamp nt);

/// A device clock as seen by the simulator: reads true time plus a fixed
/// offset plus a constant rate error.
struct VirtualClock {
    Duration base_offset{};   // clock error at t0
    double skew_ppm = 0.0;    // rate error, parts per million
    Instant t0{};

    /// reading = t + base_offset + skew_ppm * 1e-6 * (t - t0), rounded to
    /// the nearest nanosecond (ties away from zero).
    Instant read(Instant true_time) const;

    /// How far this clock is ahead of true time: read(t) - t.
    Duration true_offset(Instant true_time) const { return read(true_time) - true_time; }
};

/// Wall-clock time source for live mode: a steady clock anchored once to
/// the system clock, so readings are monotone and Unix-epoch based.
Instant wall_now();

/// Parses "250ms", "64s", "10m", "3h" (also ns/us, decimal values allowed).
/// Throws std::invalid_argument on anything else.
Duration parse_duration(const std::string& text);

/// "12.345 ms" style rendering used by the CLI.
std::string format_millis(Duration d);

} // namespace chronosim
