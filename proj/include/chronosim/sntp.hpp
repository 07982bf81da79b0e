#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "chronosim/exchange.hpp"
#include "chronosim/time.hpp"

namespace chronosim {

class PacketDecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The whole SNTP client: take each measurement at face value. No
/// filtering, no skew model, fixed polling. This is the baseline the
/// adaptive engine is compared against.
struct SntpClientState {
    Duration polling_interval = Duration::seconds(64); // fixed for the client's lifetime
    Duration last_offset{};
    Duration last_delay{};
    bool initialized = false;
};

/// Applies one exchange wholesale: the measured offset becomes the
/// client's estimate, step not slew. Returns the applied offset.
Duration sntp_poll_step(SntpClientState& state, const ExchangeSample& sample);

inline constexpr std::size_t kSntpPacketSize = 48;

/// Mode-3/4 packet, the 48-byte subset of the NTP v4 layout. rootDelay,
/// rootDispersion and referenceId are carried verbatim but this library
/// always transmits them as zero and never interprets them.
struct SntpPacket {
    std::uint8_t leap_indicator = 0; // 2 bits
    std::uint8_t version = 4;        // 3 bits
    std::uint8_t mode = 3;           // 3 = client, 4 = server
    std::uint8_t stratum = 0;
    std::uint8_t poll = 0;
    std::int8_t precision = 0;
    std::uint32_t root_delay = 0;
    std::uint32_t root_dispersion = 0;
    std::uint32_t reference_id = 0;
    NtpTimestamp reference_ts{};
    NtpTimestamp originate_ts{};
    NtpTimestamp receive_ts{};
    NtpTimestamp transmit_ts{};

    bool operator==(const SntpPacket&) const = default;
};

/// Big-endian wire form, exactly 48 bytes.
std::array<std::uint8_t, kSntpPacketSize> encode_packet(const SntpPacket& p);

/// Inverse of encode_packet. Rejects any length other than 48 and any
/// mode other than client/server.
SntpPacket decode_packet(std::span<const std::uint8_t> bytes);

} // namespace chronosim
