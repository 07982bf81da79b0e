// Acceptance suite. Runs every shipping criterion at its pinned tolerance
// and prints one PASS/FAIL line per criterion; exits nonzero if any fail.
//
// Usage: acceptance [path-to-chronosim-cli]   (the CLI is needed for A6)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "chronosim/exchange.hpp"
#include "chronosim/experiment.hpp"
#include "chronosim/netsim.hpp"
#include "chronosim/rng.hpp"
#include "chronosim/sntp.hpp"
#include "chronosim/sntp_net.hpp"
#include "chronosim/spot.hpp"
#include "chronosim/time.hpp"

using namespace chronosim;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            detail = what;
        }
    }
};

std::string g_cli_path;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- A1 ----
// Offset math oracle: random symmetric constructions recover the offset
// and round trip exactly.
void a1_offset_math(Check& c) {
    Rng rng(101);
    for (int i = 0; i < 100'000; ++i) {
        const auto theta = Duration::nanos(
            static_cast<std::int64_t>(rng.next_u64() % 2'000'000'001) - 1'000'000'000);
        const auto d = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 500'000'001));
        const auto p = Duration::nanos(static_cast<std::int64_t>(rng.next_u64() % 500'000'001));
        ExchangeSample s;
        s.t1 = Instant::epoch();
        s.t2 = Instant::epoch() + theta + d;
        s.t3 = Instant::epoch() + theta + d + p;
        s.t4 = Instant::epoch() + d + d + p;
        const SyncMeasurement m = compute_measurement(s);
        c.expect((m.offset - theta).abs() <= Duration::nanos(1), "offset drifted from theta");
        c.expect((m.rtt - d * 2).abs() <= Duration::nanos(1), "rtt is not 2d");
        if (!c.ok) return;
    }
}

// ---------------------------------------------------------------- A2 ----
// Filter exactness: one-sided spikes on a minRtt-baseline path cancel
// exactly for the filtering engine; the baseline engine eats D/2.
void a2_filter_exactness(Check& c) {
    Rng rng(102);
    const SpotParams params;
    for (int i = 0; i < 10'000; ++i) {
        const auto em = Duration::nanos(
            1'000'000 + static_cast<std::int64_t>(rng.next_u64() % 19'000'000));
        const auto truth = Duration::nanos(
            static_cast<std::int64_t>(rng.next_u64() % 100'000'001) - 50'000'000);
        const auto d = Duration::nanos(
            1'000'000 + static_cast<std::int64_t>(rng.next_u64() % 49'000'000));
        // D even in (2*EM, 1 s]; an even spike keeps the halves exact
        const std::int64_t lo = 2 * em.count() + 2;
        std::int64_t spike_ns =
            lo + static_cast<std::int64_t>(rng.next_u64() %
                                           static_cast<std::uint64_t>(1'000'000'000 - lo));
        spike_ns &= ~std::int64_t{1};
        const Duration spike = Duration::nanos(spike_ns);
        const bool forward = rng.next_coin(0.5);

        ExchangeSample s;
        const Duration d_fwd = forward ? d + spike : d;
        const Duration d_rev = forward ? d : d + spike;
        s.t1 = Instant::epoch();
        s.t2 = Instant::epoch() + truth + d_fwd;
        s.t3 = s.t2 + Duration::millis(1);
        s.t4 = Instant::epoch() + d_fwd + Duration::millis(1) + d_rev;
        const SyncMeasurement m = compute_measurement(s);

        SpotClientState st = make_spot_state({DeviceType::thick, PollingStyle::aimd, em}, params);
        st.initialized = true;
        st.old_offset = truth;
        st.clock_skew = 0.0;
        st.last_measurement_time = s.t4;
        st.min_rtt = std::min(d * 2, m.rtt); // baseline already observed, sample folded
        const Duration corrected = filter_offset(st, m.offset, m.rtt, s.t4);
        c.expect((corrected - truth).abs() <= Duration::nanos(1),
                 "filtered offset missed the true offset");

        SntpClientState sntp;
        const Duration applied = sntp_poll_step(sntp, s);
        const Duration want = forward ? spike.halved() : -spike.halved();
        c.expect(applied - truth == want, "baseline engine did not err by exactly D/2");
        if (!c.ok) return;
    }
}

// ---------------------------------------------------------------- A3 ----
// Skew convergence on a noiseless link. SPoT's model predicts the clock
// error between polls to < 1 us; SNTP's held estimate drifts by exactly
// skew * pollInterval.
void a3_skew_convergence(Check& c) {
    for (const double skew_ppm : {-100.0, -10.0, 10.0, 100.0}) {
        SimConfig cfg;
        cfg.seed = 1;
        cfg.duration = Duration::minutes(30);
        cfg.client_clock = VirtualClock{Duration::millis(20), skew_ppm, Instant::epoch()};
        cfg.noise = NoiseModel::for_level(NoiseLevel::custom);
        cfg.noise.sigma = Duration{};
        cfg.noise.spike_probability = 0.0;
        cfg.noise.symmetric_jitter_sigma = Duration{};
        cfg.noise.base_one_way_delay = Duration::millis(2);

        cfg.protocol = Protocol::spot;
        const SimTrace spot = run_simulation(cfg);
        c.expect(spot.rows.size() > 6, "spot trace too short");
        for (std::size_t i = 2; i + 1 < spot.rows.size() && c.ok; ++i) {
            const TraceRow& row = spot.rows[i];
            const Duration gap = spot.rows[i + 1].true_time - row.true_time;
            for (int k = 1; k <= 8; ++k) {
                const Instant t = row.true_time + Duration::nanos(gap.count() * k / 9);
                const double dt_s = (t - row.true_time).to_seconds();
                const Duration predicted =
                    row.estimate_after +
                    Duration::nanos(std::llround(row.estimate_slope_ns_per_s * dt_s));
                const Duration err = (predicted - cfg.client_clock.true_offset(t)).abs();
                c.expect(err < Duration::micros(1), "spot between-poll prediction above 1 us");
            }
        }

        cfg.protocol = Protocol::sntp;
        const SimTrace sntp = run_simulation(cfg);
        const Duration expected = Duration::nanos(
            std::llround(std::abs(skew_ppm) * 1e-6 *
                         static_cast<double>(cfg.sntp_poll_interval.count())));
        for (std::size_t i = 2; i + 1 < sntp.rows.size() && c.ok; ++i) {
            // the next request fires one polling interval after this receipt
            const Instant just_before = sntp.rows[i].true_time + cfg.sntp_poll_interval;
            const Duration err =
                (sntp.rows[i].estimate_after - cfg.client_clock.true_offset(just_before)).abs();
            c.expect((err - expected).abs() < Duration::micros(1),
                     "sntp pre-poll error is not skew * pollInterval");
        }
        if (!c.ok) return;
    }
}

ComparisonReport default_grid_report() {
    ComparisonConfig cfg; // 3 levels x 10 seeds x 3 h, paired by construction
    return compare_protocols(cfg, GridExecution::parallel);
}

const LevelAggregate& level_row(const ComparisonReport& r, NoiseLevel level) {
    for (const auto& agg : r.aggregates)
        if (agg.level == level) return agg;
    throw std::logic_error("missing level aggregate");
}

// ---------------------------------------------------------------- A4 ----
// Headline trend: the filtering engine holds ~10 ms accuracy everywhere
// and beats the baseline by >= 5x at high noise.
void a4_headline_ratio(Check& c, const ComparisonReport& report) {
    const LevelAggregate& high = level_row(report, NoiseLevel::high);
    c.expect(high.accuracy_ratio >= 5.0,
             "high-noise stddev ratio below 5 (got " + std::to_string(high.accuracy_ratio) + ")");
    for (const auto& agg : report.aggregates)
        c.expect(agg.spot_median.stddev <= Duration::millis(20),
                 std::string("spot median stddev above 20 ms at ") + to_string(agg.level));
}

// ---------------------------------------------------------------- A5 ----
// Shape: baseline degrades monotonically with noise; the filtering engine
// stays level (max/min <= 2 across levels).
void a5_trend_shape(Check& c, const ComparisonReport& report) {
    const Duration low = level_row(report, NoiseLevel::low).sntp_median.stddev;
    const Duration med = level_row(report, NoiseLevel::medium).sntp_median.stddev;
    const Duration high = level_row(report, NoiseLevel::high).sntp_median.stddev;
    c.expect(low < med && med < high, "sntp stddev not strictly increasing across levels");

    Duration spot_min = Duration::seconds(3600), spot_max{};
    for (const auto& agg : report.aggregates) {
        spot_min = std::min(spot_min, agg.spot_median.stddev);
        spot_max = std::max(spot_max, agg.spot_median.stddev);
    }
    c.expect(spot_max <= spot_min * 2, "spot stddev varies more than 2x across levels");
}

// ---------------------------------------------------------------- A6 ----
// Determinism: the compare command, run twice with identical flags,
// produces byte-identical CSVs and tables.
void a6_determinism(Check& c) {
    if (g_cli_path.empty()) {
        c.expect(false, "no CLI path given (pass it as argv[1])");
        return;
    }
    // byte-for-byte identical argv, run twice
    const std::string flags = " compare --seeds 4 --duration 30m --out acc_report.csv";
    const std::string run1 = "'" + g_cli_path + "'" + flags + " > acc_out_1.txt 2>&1";
    const std::string run2 = "'" + g_cli_path + "'" + flags + " > acc_out_2.txt 2>&1";
    c.expect(std::system(run1.c_str()) == 0, "first compare run failed");
    const std::string csv1 = slurp("acc_report.csv");
    c.expect(std::system(run2.c_str()) == 0, "second compare run failed");
    if (!c.ok) return;

    c.expect(!csv1.empty(), "first compare run wrote no CSV");
    c.expect(csv1 == slurp("acc_report.csv"), "report CSVs differ between identical runs");
    c.expect(slurp("acc_out_1.txt") == slurp("acc_out_2.txt"),
             "printed tables differ between identical runs");
    for (const char* f : {"acc_report.csv", "acc_out_1.txt", "acc_out_2.txt"})
        std::remove(f);
}

// ---------------------------------------------------------------- A7 ----
// Wire interop: codec round trip en masse, then a real UDP poll against
// our own responder on loopback.
void a7_wire_interop(Check& c) {
    Rng rng(107);
    for (int i = 0; i < 100'000; ++i) {
        SntpPacket p;
        p.leap_indicator = static_cast<std::uint8_t>(rng.next_u64() % 4);
        p.version = static_cast<std::uint8_t>(rng.next_u64() % 8);
        p.mode = rng.next_coin(0.5) ? 3 : 4;
        p.stratum = static_cast<std::uint8_t>(rng.next_u64());
        p.poll = static_cast<std::uint8_t>(rng.next_u64());
        p.precision = static_cast<std::int8_t>(rng.next_u64());
        p.root_delay = static_cast<std::uint32_t>(rng.next_u64());
        p.root_dispersion = static_cast<std::uint32_t>(rng.next_u64());
        p.reference_id = static_cast<std::uint32_t>(rng.next_u64());
        p.reference_ts = {static_cast<std::uint32_t>(rng.next_u64()),
                          static_cast<std::uint32_t>(rng.next_u64())};
        p.originate_ts = {static_cast<std::uint32_t>(rng.next_u64()),
                          static_cast<std::uint32_t>(rng.next_u64())};
        p.receive_ts = {static_cast<std::uint32_t>(rng.next_u64()),
                        static_cast<std::uint32_t>(rng.next_u64())};
        p.transmit_ts = {static_cast<std::uint32_t>(rng.next_u64()),
                         static_cast<std::uint32_t>(rng.next_u64())};
        if (!(decode_packet(encode_packet(p)) == p)) {
            c.expect(false, "codec round trip failed");
            return;
        }
    }

    SntpResponder::Config cfg;
    cfg.bind_host = "127.0.0.1";
    cfg.port = 0;
    SntpResponder responder(cfg);
    responder.start();
    const ExchangeSample sample =
        live_poll({"127.0.0.1", responder.port()}, Duration::seconds(2));
    const SyncMeasurement m = compute_measurement(sample);
    c.expect(m.offset.abs() < Duration::millis(5),
             "loopback self-poll offset not below 5 ms");
}

// ---------------------------------------------------------------- A8 ----
// Thick and thin registrations run the same math: identical corrected
// offset sequences for the same seed.
void a8_thick_thin(Check& c) {
    SimConfig cfg;
    cfg.seed = 12345;
    cfg.duration = Duration::hours(1);
    cfg.client_clock = draw_client_clock(cfg.seed);
    cfg.noise = NoiseModel::for_level(NoiseLevel::high);
    cfg.protocol = Protocol::spot;

    cfg.spot_registration = SpotRegistration{DeviceType::thick, PollingStyle::aimd,
                                             Duration::millis(10)};
    const SimTrace thick = run_simulation(cfg);
    cfg.spot_registration = SpotRegistration{DeviceType::thin, PollingStyle::aimd,
                                             Duration::millis(10)};
    const SimTrace thin = run_simulation(cfg);

    c.expect(thick.rows.size() == thin.rows.size(), "trace lengths differ");
    if (!c.ok) return;
    for (std::size_t i = 0; i < thick.rows.size(); ++i) {
        c.expect(thick.rows[i].corrected_offset == thin.rows[i].corrected_offset,
                 "corrected offsets diverge at row " + std::to_string(i));
        if (!c.ok) return;
    }
    c.expect(thick == thin, "full traces diverge");
}

// ---------------------------------------------------------------- A9 ----
// Statistics oracle: the moment-sum implementation matches a naive
// two-pass reference on random series.
void a9_statistics_oracle(Check& c) {
    Rng rng(109);
    for (int trial = 0; trial < 10'000; ++trial) {
        std::vector<Duration> series(1 + rng.next_u64() % 300);
        for (auto& d : series)
            d = Duration::nanos(
                static_cast<std::int64_t>(rng.next_u64() % 1'000'000'000'000ULL));

        const OffsetErrorStats got = compute_stats(series);

        using int128 = __int128;
        const int128 n = static_cast<int128>(series.size());
        int128 sum = 0;
        Duration lo = series.front(), hi = series.front();
        for (const Duration d : series) {
            sum += d.count();
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        int128 sq = 0;
        for (const Duration d : series) {
            const int128 dev = n * static_cast<int128>(d.count()) - sum;
            sq += dev * dev;
        }
        const Duration mean = Duration::nanos(static_cast<std::int64_t>((sum + n / 2) / n));
        const long double var = static_cast<long double>(sq) /
                                (static_cast<long double>(n) * static_cast<long double>(n) *
                                 static_cast<long double>(n));
        const Duration stddev = Duration::nanos(std::llroundl(std::sqrt(var)));

        c.expect(got.min_abs == lo && got.max_abs == hi, "min/max mismatch");
        c.expect(got.mean == mean, "mean mismatch");
        c.expect(got.stddev == stddev, "stddev mismatch");
        if (!c.ok) return;
    }
}

struct Criterion {
    const char* id;
    const char* name;
    double budget_seconds;
    std::function<void(Check&)> fn;
};

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_cli_path = argv[1];

    // A4 and A5 share one grid run; its cost is charged to A4's budget.
    ComparisonReport shared_report;
    bool report_ready = false;
    auto ensure_report = [&] {
        if (!report_ready) {
            shared_report = default_grid_report();
            report_ready = true;
        }
    };

    const std::vector<Criterion> criteria = {
        {"A1", "offset-math-oracle", 5.0, a1_offset_math},
        {"A2", "filter-exactness", 5.0, a2_filter_exactness},
        {"A3", "skew-convergence", 10.0, a3_skew_convergence},
        {"A4", "headline-ratio", 60.0,
         [&](Check& c) {
             ensure_report();
             a4_headline_ratio(c, shared_report);
         }},
        {"A5", "trend-shape", 60.0,
         [&](Check& c) {
             ensure_report();
             a5_trend_shape(c, shared_report);
         }},
        {"A6", "determinism", 120.0, a6_determinism},
        {"A7", "wire-interop", 10.0, a7_wire_interop},
        {"A8", "thick-thin-equivalence", 10.0, a8_thick_thin},
        {"A9", "statistics-oracle", 30.0, a9_statistics_oracle},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.fn(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > criterion.budget_seconds)
            check.expect(false, "runtime budget exceeded");

        std::printf("%-3s %-24s %-4s (%.2fs)%s%s\n", criterion.id, criterion.name,
                    check.ok ? "PASS" : "FAIL", elapsed, check.ok ? "" : " -- ",
                    check.ok ? "" : check.detail.c_str());
        failures += check.ok ? 0 : 1;
    }

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
