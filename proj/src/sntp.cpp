#include "chronosim/sntp.hpp"

namespace chronosim {

namespace {

void put_u32(std::array<std::uint8_t, kSntpPacketSize>& out, std::size_t at, std::uint32_t v) {
    out[at] = static_cast<std::uint8_t>(v >> 24);
    out[at + 1] = static_cast<std::uint8_t>(v >> 16);
    out[at + 2] = static_cast<std::uint8_t>(v >> 8);
    out[at + 3] = static_cast<std::uint8_t>(v);
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    return (std::uint32_t(in[at]) << 24) | (std::uint32_t(in[at + 1]) << 16) |
           (std::uint32_t(in[at + 2]) << 8) | std::uint32_t(in[at + 3]);
}

void put_ts(std::array<std::uint8_t, kSntpPacketSize>& out, std::size_t at, NtpTimestamp ts) {
    put_u32(out, at, ts.seconds);
    put_u32(out, at + 4, ts.fraction);
}

NtpTimestamp get_ts(std::span<const std::uint8_t> in, std::size_t at) {
    return NtpTimestamp{get_u32(in, at), get_u32(in, at + 4)};
}

} // namespace

Duration sntp_poll_step(SntpClientState& state, const ExchangeSample& sample) {
    const SyncMeasurement m = compute_measurement(sample);
    state.last_offset = m.offset;
    state.last_delay = m.rtt;
    state.initialized = true;
    return m.offset;
}

std::array<std::uint8_t, kSntpPacketSize> encode_packet(const SntpPacket& p) {
    std::array<std::uint8_t, kSntpPacketSize> out{};
    out[0] = static_cast<std::uint8_t>(((p.leap_indicator & 0x3) << 6) |
                                       ((p.version & 0x7) << 3) | (p.mode & 0x7));
    out[1] = p.stratum;
    out[2] = p.poll;
    out[3] = static_cast<std::uint8_t>(p.precision);
    put_u32(out, 4, p.root_delay);
    put_u32(out, 8, p.root_dispersion);
    put_u32(out, 12, p.reference_id);
    put_ts(out, 16, p.reference_ts);
    put_ts(out, 24, p.originate_ts);
    put_ts(out, 32, p.receive_ts);
    put_ts(out, 40, p.transmit_ts);
    return out;
}

SntpPacket decode_packet(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kSntpPacketSize)
        throw PacketDecodeError("packet must be exactly 48 bytes, got " +
                                std::to_string(bytes.size()));
    SntpPacket p;
    p.leap_indicator = (bytes[0] >> 6) & 0x3;
    p.version = (bytes[0] >> 3) & 0x7;
    p.mode = bytes[0] & 0x7;
    if (p.mode != 3 && p.mode != 4)
        throw PacketDecodeError("unsupported mode " + std::to_string(p.mode));
    p.stratum = bytes[1];
    p.poll = bytes[2];
    p.precision = static_cast<std::int8_t>(bytes[3]);
    p.root_delay = get_u32(bytes, 4);
    p.root_dispersion = get_u32(bytes, 8);
    p.reference_id = get_u32(bytes, 12);
    p.reference_ts = get_ts(bytes, 16);
    p.originate_ts = get_ts(bytes, 24);
    p.receive_ts = get_ts(bytes, 32);
    p.transmit_ts = get_ts(bytes, 40);
    return p;
}

} // namespace chronosim
