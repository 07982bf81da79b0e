#include "chronosim/netsim.hpp"

#include <cmath>

#include "chronosim/sntp.hpp"

namespace chronosim {

namespace {

// Substream tags; keep the clock draw from shifting the network stream.
constexpr std::uint64_t kClockStreamTag = 0x636c6f636b5f7374ULL; // "clock_st"
constexpr std::uint64_t kNetStreamTag = 0x6e65745f73747265ULL;   // "net_stre"

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ tag;
    return Rng::splitmix64(s);
}

Duration half_normal(Rng& rng, Duration sigma) {
    const double z = std::fabs(rng.next_gaussian());
    return Duration::nanos(std::llround(z * static_cast<double>(sigma.count())));
}

} // namespace

const char* to_string(NoiseLevel level) {
    switch (level) {
        case NoiseLevel::low: return "low";
        case NoiseLevel::medium: return "medium";
        case NoiseLevel::high: return "high";
        case NoiseLevel::custom: return "custom";
    }
    return "?";
}

std::optional<NoiseLevel> noise_level_from_string(const std::string& name) {
    if (name == "low") return NoiseLevel::low;
    if (name == "medium") return NoiseLevel::medium;
    if (name == "high") return NoiseLevel::high;
    if (name == "custom") return NoiseLevel::custom;
    return std::nullopt;
}

const char* to_string(Protocol p) {
    return p == Protocol::sntp ? "sntp" : "spot";
}

NoiseModel NoiseModel::for_level(NoiseLevel level) {
    NoiseModel m;
    m.level = level;
    switch (level) {
        case NoiseLevel::low: m.sigma = Duration::millis(50); break;
        case NoiseLevel::medium: m.sigma = Duration::millis(150); break;
        case NoiseLevel::high: m.sigma = Duration::millis(250); break;
        case NoiseLevel::custom: break; // caller sets sigma
    }
    return m;
}

Duration sample_one_way_delay(const NoiseModel& noise, Rng& rng, LinkDirection direction,
                              std::optional<LinkDirection> spike_direction) {
    Duration delay = noise.base_one_way_delay + half_normal(rng, noise.symmetric_jitter_sigma);
    if (spike_direction && *spike_direction == direction)
        delay += half_normal(rng, noise.sigma);
    return delay;
}

std::pair<ExchangeSample, Instant> exchange_once(const VirtualClock& client_clock,
                                                 const VirtualClock& reference_clock,
                                                 const NoiseModel& noise, Rng& rng,
                                                 Instant true_now, Duration processing) {
    std::optional<LinkDirection> spike_direction;
    const bool spiked = rng.next_coin(noise.spike_probability);
    const bool spike_forward = rng.next_coin(0.5);
    if (spiked)
        spike_direction = spike_forward ? LinkDirection::forward : LinkDirection::reverse;

    const Duration d_fwd =
        sample_one_way_delay(noise, rng, LinkDirection::forward, spike_direction);
    const Duration d_rev =
        sample_one_way_delay(noise, rng, LinkDirection::reverse, spike_direction);

    ExchangeSample s;
    s.t1 = client_clock.read(true_now);
    s.t2 = reference_clock.read(true_now + d_fwd);
    s.t3 = reference_clock.read(true_now + d_fwd + processing);
    const Instant true_t4 = true_now + d_fwd + processing + d_rev;
    s.t4 = client_clock.read(true_t4);
    return {s, true_t4};
}

VirtualClock draw_client_clock(std::uint64_t seed) {
    Rng rng(derive(seed, kClockStreamTag));
    VirtualClock clock;
    clock.base_offset = Duration::nanos(
        std::llround(rng.next_gaussian() * static_cast<double>(Duration::millis(50).count())));
    clock.skew_ppm = rng.next_uniform(-100.0, 100.0);
    clock.t0 = Instant::epoch();
    return clock;
}

SimTrace run_simulation(const SimConfig& config) {
    if (config.duration <= Duration{})
        throw std::invalid_argument("simulation duration must be positive");

    Rng net_rng(derive(config.seed, kNetStreamTag));
    const VirtualClock reference; // exact time

    SntpClientState sntp_state;
    sntp_state.polling_interval = config.sntp_poll_interval;
    SpotClientState spot_state =
        make_spot_state(config.spot_registration.value_or(SpotRegistration{}),
                        config.spot_params);

    SimTrace trace;
    Instant true_now = Instant::epoch();
    const Instant end = Instant::epoch() + config.duration;

    while (true_now <= end) {
        auto [sample, true_t4] = exchange_once(config.client_clock, reference, config.noise,
                                               net_rng, true_now, config.server_processing);
        if (true_t4 > end) break;

        TraceRow row;
        row.true_time = true_t4;
        row.sample = sample;
        row.true_offset = config.client_clock.true_offset(true_t4);

        Duration next_interval{};
        if (config.protocol == Protocol::sntp) {
            row.measured_offset = sntp_poll_step(sntp_state, sample);
            row.corrected_offset = row.measured_offset;
            row.estimate_after = -sntp_state.last_offset;
            row.estimate_slope_ns_per_s = 0.0;
            row.rtt = sntp_state.last_delay;
            next_interval = sntp_state.polling_interval;
        } else {
            const SpotPollResult r = spot_poll_step(spot_state, config.spot_params, sample);
            row.measured_offset = r.measurement.offset;
            row.corrected_offset = r.corrected_offset;
            // The engine predicts the measured offset as corrected +
            // clock_skew * dt; negate for the client-ahead convention.
            row.estimate_after = -r.corrected_offset;
            // clock_skew is per client-clock second; the row records the
            // correction's drift per TRUE second, so scale by the client's
            // rate. The client itself never needs this: it projects with
            // its own clock and the factors cancel.
            row.estimate_slope_ns_per_s =
                -spot_state.clock_skew * (1.0 + config.client_clock.skew_ppm * 1e-6) * 1e9;
            row.rtt = r.measurement.rtt;
            next_interval = spot_state.polling_interval;
        }

        trace.rows.push_back(row);
        true_now = true_t4 + next_interval;
    }
    return trace;
}

} // namespace chronosim
