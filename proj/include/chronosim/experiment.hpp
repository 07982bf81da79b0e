#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chronosim/netsim.hpp"
#include "chronosim/time.hpp"

namespace chronosim {

/// Statistics of the absolute sync-error series. stddev is the
/// population deviation (divide by N), so identical series give
/// identical numbers everywhere.
struct OffsetErrorStats {
    Duration min_abs{};
    Duration max_abs{};
    Duration mean{};
    Duration stddev{};

    bool operator==(const OffsetErrorStats&) const = default;
};

/// Samples |estimate - true offset| on a fixed grid anchored at the
/// first trace row and capped at the last. Between rows the estimate
/// follows the recorded affine model (value + drift slope) and the true
/// offset is interpolated linearly, which is exact for constant-skew
/// clocks. Throws std::invalid_argument on an empty trace.
std::vector<Duration> offset_error_series(const SimTrace& trace, Duration grid_step);

/// min/max/mean/population-stddev over the series, computed from exact
/// integer moment sums; mean and stddev round to the nearest nanosecond,
/// ties away from zero. Throws std::invalid_argument on an empty series.
OffsetErrorStats compute_stats(std::span<const Duration> series);

struct CellResult {
    Protocol protocol{};
    NoiseLevel level{};
    std::uint64_t seed = 0;
    OffsetErrorStats stats{};

    bool operator==(const CellResult&) const = default;
};

struct LevelAggregate {
    NoiseLevel level{};
    OffsetErrorStats sntp_median{};
    OffsetErrorStats spot_median{};
    double accuracy_ratio = 1.0; // median SNTP stddev / median SPoT stddev

    bool operator==(const LevelAggregate&) const = default;
};

struct ComparisonReport {
    std::vector<CellResult> cells; // ordered by (protocol, level, seed)
    std::vector<LevelAggregate> aggregates;

    bool operator==(const ComparisonReport&) const = default;
};

struct ComparisonConfig {
    std::vector<NoiseLevel> levels{NoiseLevel::low, NoiseLevel::medium, NoiseLevel::high};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    Duration duration = Duration::hours(3);
    Duration grid_step = Duration::seconds(1);
    SpotRegistration registration{};
    SpotParams spot_params{};
    Duration sntp_poll_interval = Duration::seconds(64);
    // sigma comes from the level; everything else of the path model comes
    // from this template.
    NoiseModel noise_template{};
    // Set to pin every cell's client clock instead of drawing it per seed
    // (useful for controlled experiments).
    std::optional<VirtualClock> fixed_client_clock{};
};

enum class GridExecution { serial, parallel };

/// Runs the full (protocol x level x seed) grid. Each cell reuses the
/// seed's clock draw and network stream for both protocols, so a cell
/// pair differs only in the algorithm. `parallel` distributes cells with
/// OpenMP and produces output identical to `serial`.
ComparisonReport compare_protocols(const ComparisonConfig& config,
                                   GridExecution execution = GridExecution::parallel);

/// Seeds 1..n, the default experiment set.
std::vector<std::uint64_t> sequential_seeds(int n);

/// SNTP/SPoT stddev ratio with the degenerate-case rule: when both
/// deviations are under 1 us the clocks are equally in sync and the
/// ratio is 1.
double accuracy_ratio_with_floor(Duration sntp_stddev, Duration spot_stddev);

// CSV codecs. Both writers emit UTF-8 with a header row and
// deterministic ordering; readers accept exactly what the writers
// produce and throw std::runtime_error with the path on failure.
void write_trace_csv(const SimTrace& trace, const std::string& path);
SimTrace read_trace_csv(const std::string& path);
void write_report_csv(const ComparisonReport& report, const std::string& path);
std::vector<CellResult> read_report_csv(const std::string& path);

/// Per-level median-stddev table, one row per protocol plus the ratio
/// row.
void print_comparison_table(const ComparisonReport& report, std::ostream& out);

} // namespace chronosim
