#include <doctest.h>

#include <cstdlib>

#include "chronosim/exchange.hpp"
#include "chronosim/rng.hpp"

using namespace chronosim;

namespace {

Instant at_ms(std::int64_t ms) { return Instant::from_nanos(ms * 1'000'000); }

// Symmetric exchange seen from the client: server ahead by theta, one-way
// delay d, server processing p.
ExchangeSample symmetric_sample(Duration theta, Duration d, Duration p) {
    ExchangeSample s;
    s.t1 = Instant::epoch();
    s.t2 = Instant::epoch() + theta + d;
    s.t3 = Instant::epoch() + theta + d + p;
    s.t4 = Instant::epoch() + d + d + p;
    return s;
}

ExchangeSample asymmetric_sample(Duration theta, Duration d_fwd, Duration d_rev, Duration p) {
    ExchangeSample s;
    s.t1 = Instant::epoch();
    s.t2 = Instant::epoch() + theta + d_fwd;
    s.t3 = Instant::epoch() + theta + d_fwd + p;
    s.t4 = Instant::epoch() + d_fwd + p + d_rev;
    return s;
}

} // namespace

TEST_SUITE("exchange") {

TEST_CASE("worked example") {
    // T1=0, T2=10ms, T3=12ms, T4=20ms
    ExchangeSample s{at_ms(0), at_ms(10), at_ms(12), at_ms(20)};
    const SyncMeasurement m = compute_measurement(s);
    CHECK(m.total_delay == Duration::millis(20));
    CHECK(m.remote_processing == Duration::millis(2));
    CHECK(m.travel_time == Duration::millis(9));
    CHECK(m.rtt == Duration::millis(18));
    CHECK(m.offset == Duration::millis(1));
}

TEST_CASE("degenerate instantaneous exchange is all zeros") {
    ExchangeSample s{at_ms(5), at_ms(5), at_ms(5), at_ms(5)};
    const SyncMeasurement m = compute_measurement(s);
    CHECK(m.total_delay == Duration{});
    CHECK(m.remote_processing == Duration{});
    CHECK(m.travel_time == Duration{});
    CHECK(m.rtt == Duration{});
    CHECK(m.offset == Duration{});
}

TEST_CASE("symmetric case recovers the offset exactly") {
    const SyncMeasurement m = compute_measurement(
        symmetric_sample(Duration::millis(7), Duration::millis(30), Duration::millis(2)));
    CHECK(m.offset == Duration::millis(7));
    CHECK(m.rtt == Duration::millis(60));
}

TEST_CASE("symmetry exactness over random constructions") {
    Rng rng(11);
    for (int i = 0; i < 100'000; ++i) {
        const auto theta = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 2'000'000'000) -
                                           1'000'000'000);
        const auto d = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 500'000'000));
        const auto p = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 50'000'000));
        const SyncMeasurement m = compute_measurement(symmetric_sample(theta, d, p));
        CHECK(m.offset == theta);
        CHECK(m.rtt == d * 2);
    }
}

TEST_CASE("asymmetry bias law") {
    Rng rng(12);
    for (int i = 0; i < 50'000; ++i) {
        const auto theta = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 200'000'000) -
                                           100'000'000);
        const auto df = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 500'000'000));
        const auto dr = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 500'000'000));
        const auto p = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 10'000'000));
        const SyncMeasurement m = compute_measurement(asymmetric_sample(theta, df, dr, p));
        CHECK(m.rtt == df + dr);
        // offset error is half the delay difference, to halving rounding
        const std::int64_t err = (m.offset - theta).count();
        const std::int64_t want = (df - dr).count() / 2;
        CHECK(std::abs(err - want) <= 1);
    }
}

TEST_CASE("offset is antisymmetric under role swap") {
    Rng rng(13);
    for (int i = 0; i < 20'000; ++i) {
        // machine A has clock error alpha, machine B error beta (vs true time)
        const auto alpha = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 100'000'000) -
                                           50'000'000);
        const auto beta = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 100'000'000) -
                                          50'000'000);
        const auto d = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 100'000'000));
        const auto p = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 1'000'000));

        // A polls B: timestamps from A's clock at t1/t4, B's clock at t2/t3.
        const Instant t = Instant::epoch() + Duration::seconds(1);
        ExchangeSample ab{t + alpha, t + d + beta, t + d + p + beta, t + d + p + d + alpha};
        // B polls A over the same path.
        ExchangeSample ba{t + beta, t + d + alpha, t + d + p + alpha, t + d + p + d + beta};
        CHECK(compute_measurement(ab).offset == -compute_measurement(ba).offset);
    }
}

TEST_CASE("same-clock monotonicity is enforced, cross-clock is not") {
    // t2 < t1 is legal: the server clock may be far behind the client.
    ExchangeSample cross{at_ms(100), at_ms(1), at_ms(2), at_ms(120)};
    CHECK_NOTHROW(compute_measurement(cross));

    ExchangeSample bad_client{at_ms(100), at_ms(101), at_ms(102), at_ms(99)};
    CHECK_THROWS_AS(compute_measurement(bad_client), MalformedSample);

    ExchangeSample bad_server{at_ms(0), at_ms(10), at_ms(9), at_ms(20)};
    CHECK_THROWS_AS(compute_measurement(bad_server), MalformedSample);
}

TEST_CASE("rtt identity") {
    Rng rng(14);
    for (int i = 0; i < 20'000; ++i) {
        const auto theta = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 64'000'000) -
                                           32'000'000);
        const auto df = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 100'000'001));
        const auto dr = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 100'000'001));
        const auto p = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 5'000'000));
        const SyncMeasurement m = compute_measurement(asymmetric_sample(theta, df, dr, p));
        CHECK(m.rtt == m.total_delay - m.remote_processing);
        CHECK(std::abs((m.rtt - m.travel_time * 2).count()) <= 1);
    }
}

} // TEST_SUITE
