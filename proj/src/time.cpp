#include "chronosim/time.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace chronosim {

namespace {

constexpr std::int64_t kNanosPerSecond = 1'000'000'000;

// Highest Unix second whose NTP era-0 counterpart still fits in 32 bits.
constexpr std::int64_t kMaxEraUnixSecond = 4'294'967'295LL - kNtpUnixDeltaSeconds;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace

std::array<std::uint8_t, 8> NtpTimestamp::to_bytes() const {
    return {
        static_cast<std::uint8_t>(seconds >> 24),
        static_cast<std::uint8_t>(seconds >> 16),
        static_cast<std::uint8_t>(seconds >> 8),
        static_cast<std::uint8_t>(seconds),
        static_cast<std::uint8_t>(fraction >> 24),
        static_cast<std::uint8_t>(fraction >> 16),
        static_cast<std::uint8_t>(fraction >> 8),
        static_cast<std::uint8_t>(fraction),
    };
}

NtpTimestamp NtpTimestamp::from_bytes(std::span<const std::uint8_t, 8> b) {
    NtpTimestamp nt;
    nt.seconds = (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
                 (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
    nt.fraction = (std::uint32_t(b[4]) << 24) | (std::uint32_t(b[5]) << 16) |
                  (std::uint32_t(b[6]) << 8) | std::uint32_t(b[7]);
    return nt;
}

NtpTimestamp ntp_encode(Instant t) {
    const std::int64_t total = t.nanos_since_epoch();
    const std::int64_t unix_sec = floor_div(total, kNanosPerSecond);
    const std::int64_t sub_ns = total - unix_sec * kNanosPerSecond; // [0, 1e9)
    if (unix_sec < -kNtpUnixDeltaSeconds || unix_sec > kMaxEraUnixSecond)
        throw TimeRangeError("instant outside NTP era 0");

    // fraction = round(sub_ns * 2^32 / 1e9); the numerator fits in 64 bits
    // and the result never carries into the seconds field.
    const std::uint64_t num =
        (static_cast<std::uint64_t>(sub_ns) << 32) + 500'000'000ULL;
    NtpTimestamp nt;
    nt.seconds = static_cast<std::uint32_t>(unix_sec + kNtpUnixDeltaSeconds);
    nt.fraction = static_cast<std::uint32_t>(num / 1'000'000'000ULL);
    return nt;
}

Instant ntp_decode(NtpTimestamp nt) {
    const std::int64_t unix_sec =
        static_cast<std::int64_t>(nt.seconds) - kNtpUnixDeltaSeconds;
    // ns = round(fraction * 1e9 / 2^32); may round up to a full second,
    // which the summation below absorbs.
    const std::uint64_t num =
        static_cast<std::uint64_t>(nt.fraction) * 1'000'000'000ULL + (1ULL << 31);
    const std::int64_t sub_ns = static_cast<std::int64_t>(num >> 32);
    return Instant::from_nanos(unix_sec * kNanosPerSecond + sub_ns);
}

Instant VirtualClock::read(Instant true_time) const {
    const std::int64_t delta_ns = (true_time - t0).count();
    const double drift = (skew_ppm * static_cast<double>(delta_ns)) / 1e6;
    if (!(drift >= -9.0e18 && drift <= 9.0e18))
        throw TimeRangeError("virtual clock drift overflows nanosecond range");
    const std::int64_t drift_ns = std::llround(drift);

    std::int64_t out = 0;
    if (__builtin_add_overflow(true_time.nanos_since_epoch(), base_offset.count(), &out) ||
        __builtin_add_overflow(out, drift_ns, &out))
        throw TimeRangeError("virtual clock reading overflows nanosecond range");
    return Instant::from_nanos(out);
}

Instant wall_now() {
    using namespace std::chrono;
    // Anchor the steady clock to the system clock once; later readings are
    // monotone even if the system clock steps.
    static const auto anchor_steady = steady_clock::now();
    static const std::int64_t anchor_unix_ns =
        duration_cast<nanoseconds>(system_clock::now().time_since_epoch()).count();
    const std::int64_t elapsed =
        duration_cast<nanoseconds>(steady_clock::now() - anchor_steady).count();
    return Instant::from_nanos(anchor_unix_ns + elapsed);
}

Duration parse_duration(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty duration");
    const char* begin = text.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) throw std::invalid_argument("duration must start with a number: " + text);
    const std::string suffix(end);
    double scale_ns = 0;
    if (suffix == "ns") scale_ns = 1;
    else if (suffix == "us") scale_ns = 1e3;
    else if (suffix == "ms") scale_ns = 1e6;
    else if (suffix == "s") scale_ns = 1e9;
    else if (suffix == "m") scale_ns = 60e9;
    else if (suffix == "h") scale_ns = 3600e9;
    else throw std::invalid_argument("duration needs a ns/us/ms/s/m/h suffix: " + text);
    return Duration::nanos(std::llround(value * scale_ns));
}

std::string format_millis(Duration d) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f ms", d.to_millis());
    return buf;
}

} // namespace chronosim
