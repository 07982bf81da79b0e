#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "chronosim/exchange.hpp"
#include "chronosim/time.hpp"

namespace chronosim {

/// Thrown when an operation needs a state that has not processed its
/// first sample yet.
class NotReadyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Polling-interval control policy.
enum class PollingStyle { aimd, mimd };

/// Deployment mode. Thin clients run the same math server-side; the two
/// modes are numerically indistinguishable.
enum class DeviceType { thick, thin };

struct SpotRegistration {
    DeviceType device_type = DeviceType::thick;
    PollingStyle polling_style = PollingStyle::aimd;
    Duration error_margin = Duration::millis(10); // EM, must be > 0
};

/// Tuning knobs with the library defaults. AIMD steps +10 s / x0.5,
/// MIMD x2 / x0.5, interval clamped to [poll_min, poll_max]. The
/// observation window spans observation_polls * pollingInterval and is
/// restarted with the post-adjustment interval.
struct SpotParams {
    Duration poll_min = Duration::seconds(1);
    Duration poll_max = Duration::seconds(1024);
    Duration poll_initial = Duration::seconds(64);
    Duration aimd_increase = Duration::seconds(10);
    int observation_polls = 5;
    // 0 keeps the lifetime minimum RTT; N > 0 takes the minimum over the
    // last N samples instead.
    int min_rtt_window = 0;
};

/// All mutable per-client state of the offset-filtering and
/// rate-synchronization algorithms. Offsets are stored in the
/// measurement convention (amount to add to the client clock); instants
/// are client-clock readings.
struct SpotClientState {
    Duration old_offset{};          // last corrected offset
    double clock_skew = 0.0;        // measured-offset drift, s per s
    Instant last_measurement_time{};
    Duration min_rtt{};
    Duration error_margin = Duration::millis(10);
    Duration polling_interval{};
    PollingStyle polling_style = PollingStyle::aimd;
    int num_samples = 0;            // samples folded into the current window
    Duration mean_absolute_error{}; // running mean over the current window
    Instant observation_deadline{};
    Duration clock_sync_offset{};   // offset at the last high-quality sample
    Instant clock_sync_time{};
    bool initialized = false;

    // Exact accumulator behind mean_absolute_error, so the mean is
    // independent of sample order within a window.
    std::int64_t abs_error_sum_ns = 0;
    // Recent RTTs, only maintained when SpotParams::min_rtt_window > 0.
    std::vector<Duration> rtt_window;

    bool operator==(const SpotClientState&) const = default;
};

/// Fresh state for a registration; ready for its first sample.
SpotClientState make_spot_state(const SpotRegistration& reg, const SpotParams& params = {});

/// oldOffset + clockSkew * (now - lastMeasurementTime), rounded to the
/// nearest nanosecond. Throws NotReadyError before the first sample.
Duration estimate_offset(const SpotClientState& state, Instant now);

/// The offset-filtering step. Expects the caller to have folded the
/// sample's RTT into state.min_rtt already, so asymmetricDelay =
/// measuredRtt - minRtt is never negative. Returns the corrected offset;
/// the state is not modified.
///
/// A sample more than errorMargin above the estimate is treated as a
/// forward asymmetric error and lowered by half the asymmetric delay;
/// more than errorMargin below, raised by half; otherwise it passes
/// through unchanged.
Duration filter_offset(const SpotClientState& state, Duration measured_offset,
                       Duration measured_rtt, Instant now);

/// The rate-synchronization step, applied after filter_offset for the
/// same sample.
///
/// Inside the observation window (or while fewer than observation_polls
/// samples are in), folds |estimate - corrected| into the window mean.
/// Once the window has run its course, a mean below 2*EM lengthens the
/// polling interval per the registered style and anything else shortens
/// it; either way the window restarts. Samples that passed the filter
/// unmodified are high-quality and update the clock-skew slope, except
/// when the previous sync sample has the same timestamp (the update is
/// skipped rather than dividing by zero). Finally the sample becomes the
/// new prediction base.
void update_rate_sync(SpotClientState& state, const SpotParams& params,
                      Duration measured_offset, Duration corrected_offset, Instant now);

struct SpotPollResult {
    SyncMeasurement measurement{};
    Duration corrected_offset{};
};

/// One full poll: measurement math, minRtt fold, first-sample seeding,
/// filtering, rate sync. `now` defaults to the sample's t4 (the client's
/// own reading at receipt). The caller schedules the next poll at
/// now + state.polling_interval.
SpotPollResult spot_poll_step(SpotClientState& state, const SpotParams& params,
                              const ExchangeSample& sample,
                              std::optional<Instant> now = std::nullopt);

/// Serializes a state to "key=value" lines (one per field); the inverse
/// accepts the same text. Field list and formats are documented in the
/// README.
std::string spot_state_to_kv(const SpotClientState& state);
SpotClientState spot_state_from_kv(const std::string& text);

using ClientId = std::uint64_t;

/// Registration book plus the reference clock (exact time, by
/// definition). Registrations may arrive from multiple threads; lookups
/// return copies.
class SpotServer {
public:
    ClientId register_client(const SpotRegistration& reg);
    std::optional<SpotRegistration> lookup(ClientId id) const;
    std::size_t client_count() const;
    const VirtualClock& reference_clock() const { return reference_clock_; }

private:
    mutable std::mutex mu_;
    std::unordered_map<ClientId, SpotRegistration> registry_;
    ClientId next_id_ = 1;
    VirtualClock reference_clock_{}; // offset 0, skew 0
};

} // namespace chronosim
