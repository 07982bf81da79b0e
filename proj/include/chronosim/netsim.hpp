#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "chronosim/exchange.hpp"
#include "chronosim/rng.hpp"
#include "chronosim/spot.hpp"
#include "chronosim/time.hpp"

namespace chronosim {

enum class NoiseLevel { low, medium, high, custom };

const char* to_string(NoiseLevel level);
std::optional<NoiseLevel> noise_level_from_string(const std::string& name);

/// One-way delay generator. Every delay is baseOneWayDelay plus a
/// half-normal jitter; on a spiked exchange, the spiked direction
/// additionally gets a half-normal draw of deviation `sigma`. Spikes hit
/// exactly one direction per exchange, chosen by a fair coin.
struct NoiseModel {
    NoiseLevel level = NoiseLevel::high;
    Duration sigma = Duration::millis(250);
    Duration base_one_way_delay = Duration::millis(20);
    double spike_probability = 0.3;
    Duration symmetric_jitter_sigma = Duration::millis(1);

    /// The fixed level-to-deviation mapping: low 50 ms, medium 150 ms,
    /// high 250 ms.
    static NoiseModel for_level(NoiseLevel level);
};

enum class Protocol { sntp, spot };

const char* to_string(Protocol p);

struct SimConfig {
    std::uint64_t seed = 1;
    Duration duration = Duration::hours(3);
    VirtualClock client_clock{};
    NoiseModel noise{};
    Protocol protocol = Protocol::spot;
    std::optional<SpotRegistration> spot_registration{};
    SpotParams spot_params{};
    Duration sntp_poll_interval = Duration::seconds(64);
    Duration server_processing = Duration::millis(1);
};

/// One completed poll as the simulator saw it.
///
/// measured/corrected offsets are in the measurement convention (amount
/// to add to the client clock). estimate_after and true_offset are both
/// in the client-ahead convention (clock reading minus true time), so
/// the instantaneous sync error is estimate - true_offset. The estimate
/// drifts at estimate_slope_ns_per_s between polls (zero for engines
/// without a rate model).
struct TraceRow {
    Instant true_time{}; // true time of t4
    ExchangeSample sample{};
    Duration measured_offset{};
    Duration corrected_offset{};
    Duration estimate_after{};
    double estimate_slope_ns_per_s = 0.0;
    Duration true_offset{};
    Duration rtt{};

    bool operator==(const TraceRow&) const = default;
};

struct SimTrace {
    std::vector<TraceRow> rows;

    bool operator==(const SimTrace&) const = default;
};

enum class LinkDirection { forward, reverse };

/// Draws one direction's delay. The jitter gaussian is always consumed;
/// the spike gaussian is consumed by whichever call matches the spike
/// direction, so an exchange's total draw count depends only on whether
/// it spiked. Results are never negative.
Duration sample_one_way_delay(const NoiseModel& noise, Rng& rng, LinkDirection direction,
                              std::optional<LinkDirection> spike_direction);

/// Runs one request/response exchange starting at true_now. Returns the
/// sample (timestamps read from the two clocks) and the true time of t4.
/// Per exchange the rng provides, in order: spike coin, direction coin,
/// forward jitter, reverse jitter, and the spike magnitude when spiked.
std::pair<ExchangeSample, Instant> exchange_once(const VirtualClock& client_clock,
                                                 const VirtualClock& reference_clock,
                                                 const NoiseModel& noise, Rng& rng,
                                                 Instant true_now,
                                                 Duration processing = Duration::millis(1));

/// The default experiment client clock for a seed: base offset from
/// N(0, 50 ms), skew uniform in [-100, +100] ppm, drawn from the seed's
/// clock substream (independent of the network stream).
VirtualClock draw_client_clock(std::uint64_t seed);

/// Event loop: poll, feed the configured engine, record, schedule the
/// next poll at t4 + the engine's polling interval. A pure function of
/// the config; identical seeds give identical traces, and both protocols
/// see the same per-index network draws.
SimTrace run_simulation(const SimConfig& config);

} // namespace chronosim
