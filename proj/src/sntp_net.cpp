#include "chronosim/sntp_net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <system_error>

namespace chronosim {

namespace {

struct SocketGuard {
    int fd = -1;
    ~SocketGuard() {
        if (fd >= 0) ::close(fd);
    }
};

sockaddr_in resolve_ipv4(const UdpEndpoint& ep) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* result = nullptr;
    const int rc = ::getaddrinfo(ep.host.c_str(), nullptr, &hints, &result);
    if (rc != 0)
        throw NoResponseError("cannot resolve " + ep.host + ": " + gai_strerror(rc));
    sockaddr_in addr{};
    std::memcpy(&addr, result->ai_addr, sizeof(addr));
    ::freeaddrinfo(result);
    addr.sin_port = htons(ep.port);
    return addr;
}

} // namespace

UdpEndpoint parse_endpoint(const std::string& text, std::uint16_t default_port,
                           bool allow_zero) {
    UdpEndpoint ep;
    ep.port = default_port;
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) {
        ep.host = text;
    } else {
        ep.host = text.substr(0, colon);
        const std::string port_text = text.substr(colon + 1);
        char* end = nullptr;
        const long port = std::strtol(port_text.c_str(), &end, 10);
        const bool numeric = end != port_text.c_str() && *end == '\0' && !port_text.empty();
        if (!numeric || port < (allow_zero ? 0 : 1) || port > 65535)
            throw std::invalid_argument("bad port in endpoint: " + text);
        ep.port = static_cast<std::uint16_t>(port);
    }
    if (ep.host.empty()) throw std::invalid_argument("empty host in endpoint: " + text);
    return ep;
}

ExchangeSample live_poll(const UdpEndpoint& server, Duration timeout) {
    if (timeout <= Duration{}) throw std::invalid_argument("timeout must be positive");
    const sockaddr_in addr = resolve_ipv4(server);

    SocketGuard sock{::socket(AF_INET, SOCK_DGRAM, 0)};
    if (sock.fd < 0)
        throw std::system_error(errno, std::generic_category(), "socket");

    const Instant t1 = wall_now();
    SntpPacket request;
    request.mode = 3;
    request.version = 4;
    request.transmit_ts = ntp_encode(t1);
    const auto wire = encode_packet(request);

    if (::sendto(sock.fd, wire.data(), wire.size(), 0,
                 reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) < 0)
        throw std::system_error(errno, std::generic_category(), "sendto " + server.host);

    pollfd pfd{sock.fd, POLLIN, 0};
    const int timeout_ms =
        static_cast<int>(std::min<std::int64_t>(timeout.count() / 1'000'000, 1 << 30));
    const int ready = ::poll(&pfd, 1, std::max(timeout_ms, 1));
    if (ready < 0)
        throw std::system_error(errno, std::generic_category(), "poll");
    if (ready == 0)
        throw NoResponseError("no reply from " + server.host + " within " +
                              format_millis(timeout));

    std::uint8_t buf[512];
    const ssize_t n = ::recvfrom(sock.fd, buf, sizeof(buf), 0, nullptr, nullptr);
    const Instant t4 = wall_now();
    if (n < 0)
        throw std::system_error(errno, std::generic_category(), "recvfrom");
    if (n < static_cast<ssize_t>(kSntpPacketSize))
        throw BogusReplyError("reply shorter than 48 bytes");

    // Extensions past the first 48 bytes (e.g. authenticators) are ignored.
    const SntpPacket reply = decode_packet(std::span(buf, kSntpPacketSize));
    if (reply.mode != 4)
        throw BogusReplyError("reply is not a server packet");
    if (reply.transmit_ts.is_zero())
        throw BogusReplyError("reply transmit timestamp is zero");
    if (reply.originate_ts != request.transmit_ts)
        throw BogusReplyError("reply originate timestamp does not echo the request");

    ExchangeSample sample;
    sample.t1 = t1;
    sample.t2 = ntp_decode(reply.receive_ts);
    sample.t3 = ntp_decode(reply.transmit_ts);
    sample.t4 = t4;
    return sample;
}

SntpResponder::SntpResponder(Config config) : config_(std::move(config)) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0)
        throw std::system_error(errno, std::generic_category(), "socket");

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(config_.port);
    if (::inet_pton(AF_INET, config_.bind_host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        throw std::invalid_argument("bad bind address: " + config_.bind_host);
    }
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) < 0) {
        const int err = errno;
        ::close(fd_);
        fd_ = -1;
        throw std::system_error(err, std::generic_category(),
                                "bind " + config_.bind_host + ":" +
                                    std::to_string(config_.port));
    }

    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

SntpResponder::~SntpResponder() {
    stop();
    if (fd_ >= 0) ::close(fd_);
}

void SntpResponder::start() {
    if (running_.exchange(true)) return;
    worker_ = std::thread(&SntpResponder::run_loop, this);
}

void SntpResponder::stop() {
    if (!running_.exchange(false)) return;
    if (worker_.joinable()) worker_.join();
}

void SntpResponder::run_loop() {
    while (running_.load()) {
        pollfd pfd{fd_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, 50);
        if (ready <= 0) continue;

        std::uint8_t buf[512];
        sockaddr_in peer{};
        socklen_t peer_len = sizeof(peer);
        const ssize_t n = ::recvfrom(fd_, buf, sizeof(buf), 0,
                                     reinterpret_cast<sockaddr*>(&peer), &peer_len);
        if (n < static_cast<ssize_t>(kSntpPacketSize)) continue;

        const Instant received = config_.reference_clock.read(wall_now());
        SntpPacket request;
        try {
            request = decode_packet(std::span(buf, kSntpPacketSize));
        } catch (const PacketDecodeError&) {
            continue;
        }
        if (request.mode != 3) continue;

        SntpPacket reply;
        reply.mode = 4;
        reply.version = 4;
        reply.stratum = config_.stratum;
        reply.poll = request.poll;
        reply.precision = -20;
        reply.reference_id = 0x4C4F434CU; // "LOCL"
        reply.reference_ts = ntp_encode(received);
        reply.originate_ts = request.transmit_ts;
        reply.receive_ts = ntp_encode(received);
        reply.transmit_ts = ntp_encode(config_.reference_clock.read(wall_now()));

        // count before sending so a client that has the reply also sees it
        served_.fetch_add(1);
        const auto wire = encode_packet(reply);
        ::sendto(fd_, wire.data(), wire.size(), 0,
                 reinterpret_cast<const sockaddr*>(&peer), peer_len);
    }
}

} // namespace chronosim
