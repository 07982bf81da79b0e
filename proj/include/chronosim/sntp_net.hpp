#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>

#include "chronosim/exchange.hpp"
#include "chronosim/sntp.hpp"
#include "chronosim/time.hpp"

namespace chronosim {

/// No reply arrived within the timeout.
class NoResponseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A reply arrived but fails the sanity checks (wrong mode, zero
/// transmit timestamp, or the originate echo does not match what we
/// sent).
class BogusReplyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct UdpEndpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 123;
};

/// "host" or "host:port"; the default port is 123. Port 0 is rejected
/// unless allow_zero is set (the responder uses it for ephemeral binds).
UdpEndpoint parse_endpoint(const std::string& text, std::uint16_t default_port = 123,
                           bool allow_zero = false);

/// One client poll over UDP: sends a mode-3 packet stamping t1 into the
/// transmit timestamp, waits up to `timeout` for the mode-4 reply, and
/// stamps t4 locally on receipt. t1/t4 come from wall_now(); t2/t3 are
/// decoded from the reply.
ExchangeSample live_poll(const UdpEndpoint& server, Duration timeout);

/// A stateless time server: every mode-3 request gets a mode-4 reply
/// stamped from the reference clock (applied over wall time), with the
/// request's transmit timestamp echoed as originate. Nothing is kept
/// between requests.
class SntpResponder {
public:
    struct Config {
        std::string bind_host = "0.0.0.0";
        std::uint16_t port = 123; // 0 picks an ephemeral port
        std::uint8_t stratum = 1;
        VirtualClock reference_clock{}; // offset applied over wall_now()
    };

    /// Binds immediately; throws std::system_error if the port is taken.
    explicit SntpResponder(Config config);
    ~SntpResponder();

    SntpResponder(const SntpResponder&) = delete;
    SntpResponder& operator=(const SntpResponder&) = delete;

    void start();
    void stop();

    std::uint16_t port() const { return port_; }
    std::uint64_t served_count() const { return served_.load(); }

private:
    void run_loop();

    Config config_;
    int fd_ = -1;
    std::uint16_t port_ = 0;
    std::thread worker_;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> served_{0};
};

} // namespace chronosim
