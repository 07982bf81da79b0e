#include "chronosim/exchange.hpp"

namespace chronosim {

SyncMeasurement compute_measurement(const ExchangeSample& s) {
    if (!s.valid())
        throw MalformedSample("exchange sample violates same-clock monotonicity");

    const Duration a = s.t2 - s.t1;
    const Duration b = s.t3 - s.t4;

    SyncMeasurement m;
    m.total_delay = s.t4 - s.t1;
    m.remote_processing = s.t3 - s.t2;
    m.travel_time = (m.total_delay - m.remote_processing).halved();
    m.rtt = a - b;
    m.offset = (a + b).halved();
    return m;
}

} // namespace chronosim
