#pragma once

#include <stdexcept>

#include "chronosim/time.hpp"

namespace chronosim {

class MalformedSample : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The four timestamps of one client<->server exchange.
///
/// t1/t4 are readings of the client clock, t2/t3 of the server clock. Only
/// same-clock monotonicity is required (t4 >= t1, t3 >= t2): t2 may precede
/// t1 because the clock error between the two machines can exceed the
/// network delay, and those are exactly the interesting cases.
struct ExchangeSample {
    Instant t1{}; // originate: client sends the request
    Instant t2{}; // receive:   server accepts it
    Instant t3{}; // transmit:  server sends the reply
    Instant t4{}; // receipt:   client accepts the reply

    bool valid() const { return t4 >= t1 && t3 >= t2; }
    bool operator==(const ExchangeSample&) const = default;
};

/// Everything derivable from one exchange.
///
/// offset is the amount to ADD to the client clock to match the server
/// (positive when the server is ahead); every engine in this library uses
/// that convention.
struct SyncMeasurement {
    Duration total_delay{};       // t4 - t1
    Duration remote_processing{}; // t3 - t2
    Duration travel_time{};       // (total_delay - remote_processing) / 2
    Duration rtt{};               // (t2-t1) - (t3-t4), equals total - processing
    Duration offset{};            // ((t2-t1) + (t3-t4)) / 2
};

/// Derives all measurement quantities from a sample. Halving truncates
/// toward zero on odd nanosecond sums. Throws MalformedSample when the
/// same-clock monotonicity invariants are violated.
SyncMeasurement compute_measurement(const ExchangeSample& s);

} // namespace chronosim
