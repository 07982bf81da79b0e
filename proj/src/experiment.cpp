#include "chronosim/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

namespace chronosim {

namespace {

using int128 = __int128;

std::int64_t round_div_nearest(int128 num, int128 den) {
    // den > 0; ties away from zero.
    if (num >= 0) return static_cast<std::int64_t>((num + den / 2) / den);
    return -static_cast<std::int64_t>((-num + den / 2) / den);
}

Duration evaluate_estimate(const TraceRow& row, Instant t) {
    const double dt_s = static_cast<double>((t - row.true_time).count()) * 1e-9;
    return row.estimate_after +
           Duration::nanos(std::llround(row.estimate_slope_ns_per_s * dt_s));
}

Duration interpolate_true_offset(const TraceRow& a, const TraceRow& b, Instant t) {
    const int128 diff = b.true_offset.count() - a.true_offset.count();
    const int128 dt = t.nanos_since_epoch() - a.true_time.nanos_since_epoch();
    const int128 span = b.true_time.nanos_since_epoch() - a.true_time.nanos_since_epoch();
    return a.true_offset + Duration::nanos(round_div_nearest(diff * dt, span));
}

} // namespace

std::vector<Duration> offset_error_series(const SimTrace& trace, Duration grid_step) {
    if (trace.rows.empty())
        throw std::invalid_argument("cannot build an error series from an empty trace");
    if (grid_step <= Duration{})
        throw std::invalid_argument("grid step must be positive");

    const auto& rows = trace.rows;
    std::vector<Duration> series;
    std::size_t i = 0;
    for (Instant t = rows.front().true_time; t <= rows.back().true_time; t = t + grid_step) {
        while (i + 1 < rows.size() && rows[i + 1].true_time <= t) ++i;
        const Duration estimate = evaluate_estimate(rows[i], t);
        const Duration truth = (i + 1 < rows.size() && t > rows[i].true_time)
                                   ? interpolate_true_offset(rows[i], rows[i + 1], t)
                                   : rows[i].true_offset;
        series.push_back((estimate - truth).abs());
    }
    return series;
}

OffsetErrorStats compute_stats(std::span<const Duration> series) {
    if (series.empty())
        throw std::invalid_argument("cannot compute statistics of an empty series");

    const int128 n = static_cast<int128>(series.size());
    int128 sum = 0;
    int128 sum_sq = 0;
    Duration lo = series.front();
    Duration hi = series.front();
    for (const Duration d : series) {
        const int128 v = d.count();
        sum += v;
        sum_sq += v * v;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }

    OffsetErrorStats stats;
    stats.min_abs = lo;
    stats.max_abs = hi;
    stats.mean = Duration::nanos(round_div_nearest(sum, n));
    // population variance = (n*sum_sq - sum^2) / n^2, exact in the integers
    const int128 var_numer = n * sum_sq - sum * sum;
    const long double stddev_ns =
        std::sqrt(static_cast<long double>(var_numer)) / static_cast<long double>(n);
    stats.stddev = Duration::nanos(std::llroundl(stddev_ns));
    return stats;
}

namespace {

Duration median_of(std::vector<Duration> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]).halved();
}

OffsetErrorStats median_stats(const std::vector<OffsetErrorStats>& all) {
    std::vector<Duration> mins, maxs, means, sds;
    for (const auto& s : all) {
        mins.push_back(s.min_abs);
        maxs.push_back(s.max_abs);
        means.push_back(s.mean);
        sds.push_back(s.stddev);
    }
    return OffsetErrorStats{median_of(mins), median_of(maxs), median_of(means),
                            median_of(sds)};
}

SimConfig cell_config(const ComparisonConfig& cfg, Protocol protocol, NoiseLevel level,
                      std::uint64_t seed) {
    SimConfig sim;
    sim.seed = seed;
    sim.duration = cfg.duration;
    sim.client_clock = cfg.fixed_client_clock.value_or(draw_client_clock(seed));
    NoiseModel noise = NoiseModel::for_level(level);
    if (level == NoiseLevel::custom) noise.sigma = cfg.noise_template.sigma;
    noise.base_one_way_delay = cfg.noise_template.base_one_way_delay;
    noise.spike_probability = cfg.noise_template.spike_probability;
    noise.symmetric_jitter_sigma = cfg.noise_template.symmetric_jitter_sigma;
    sim.noise = noise;
    sim.protocol = protocol;
    sim.spot_registration = cfg.registration;
    sim.spot_params = cfg.spot_params;
    sim.sntp_poll_interval = cfg.sntp_poll_interval;
    return sim;
}

} // namespace

double accuracy_ratio_with_floor(Duration sntp_stddev, Duration spot_stddev) {
    constexpr double kFloorNs = 1000.0; // 1 us: below this, clocks are "in sync"
    const double sntp_ns = static_cast<double>(sntp_stddev.count());
    const double spot_ns = static_cast<double>(spot_stddev.count());
    if (sntp_ns < kFloorNs && spot_ns < kFloorNs) return 1.0;
    return sntp_ns / std::max(spot_ns, 1.0);
}

std::vector<std::uint64_t> sequential_seeds(int n) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(std::max(n, 0)));
    std::iota(seeds.begin(), seeds.end(), 1);
    return seeds;
}

ComparisonReport compare_protocols(const ComparisonConfig& config, GridExecution execution) {
    if (config.seeds.empty())
        throw std::invalid_argument("comparison needs at least one seed");
    if (config.levels.empty())
        throw std::invalid_argument("comparison needs at least one noise level");

    const Protocol protocols[] = {Protocol::sntp, Protocol::spot};
    const std::size_t per_protocol = config.levels.size() * config.seeds.size();
    const std::size_t total = 2 * per_protocol;

    ComparisonReport report;
    report.cells.resize(total);

    // Flat index -> (protocol, level, seed), which is also the row order of
    // the report CSV. Cells are independent; each writes only its own slot,
    // so the schedule cannot change the result. Exceptions must not escape
    // an OpenMP region, so cells stash them and the first one is rethrown
    // once the loop is done.
    std::mutex error_mu;
    std::exception_ptr first_error = nullptr;
    auto run_cell = [&](std::size_t flat) {
        try {
            const Protocol protocol = protocols[flat / per_protocol];
            const std::size_t rem = flat % per_protocol;
            const NoiseLevel level = config.levels[rem / config.seeds.size()];
            const std::uint64_t seed = config.seeds[rem % config.seeds.size()];
            const SimTrace trace = run_simulation(cell_config(config, protocol, level, seed));
            const auto series = offset_error_series(trace, config.grid_step);
            report.cells[flat] = CellResult{protocol, level, seed, compute_stats(series)};
        } catch (...) {
            const std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (execution == GridExecution::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long flat = 0; flat < static_cast<long>(total); ++flat)
            run_cell(static_cast<std::size_t>(flat));
    } else {
        for (std::size_t flat = 0; flat < total; ++flat) run_cell(flat);
    }
    if (first_error) std::rethrow_exception(first_error);

    for (const NoiseLevel level : config.levels) {
        std::vector<OffsetErrorStats> sntp_stats, spot_stats;
        for (const auto& cell : report.cells) {
            if (cell.level != level) continue;
            (cell.protocol == Protocol::sntp ? sntp_stats : spot_stats).push_back(cell.stats);
        }
        LevelAggregate agg;
        agg.level = level;
        agg.sntp_median = median_stats(sntp_stats);
        agg.spot_median = median_stats(spot_stats);
        agg.accuracy_ratio =
            accuracy_ratio_with_floor(agg.sntp_median.stddev, agg.spot_median.stddev);
        report.aggregates.push_back(agg);
    }
    return report;
}

namespace {

std::string slope_to_string(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

// ns -> "12.345678" ms, exact (six decimals cover nanoseconds).
std::string ns_as_ms(Duration d) {
    std::int64_t ns = d.count();
    const bool neg = ns < 0;
    if (neg) ns = -ns;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s%lld.%06lld", neg ? "-" : "",
                  static_cast<long long>(ns / 1'000'000),
                  static_cast<long long>(ns % 1'000'000));
    return buf;
}

Duration ms_field_to_ns(const std::string& text, const std::string& path) {
    const auto dot = text.find('.');
    const std::string whole = dot == std::string::npos ? text : text.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
    if (frac.size() > 6 || whole.empty())
        throw std::runtime_error(path + ": bad millisecond field '" + text + "'");
    frac.resize(6, '0');
    const bool neg = whole[0] == '-';
    const std::int64_t w = std::strtoll(whole.c_str(), nullptr, 10);
    const std::int64_t f = std::strtoll(frac.c_str(), nullptr, 10);
    const std::int64_t mag = (neg ? -w : w) * 1'000'000 + f;
    return Duration::nanos(neg ? -mag : mag);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

std::int64_t field_i64(const std::string& text, const std::string& path) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw std::runtime_error(path + ": bad integer field '" + text + "'");
    return v;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return in;
}

constexpr const char* kTraceHeader =
    "trueTime_ns,t1,t2,t3,t4,measured_offset_ns,corrected_offset_ns,"
    "estimate_ns,true_offset_ns,rtt_ns,est_drift_ns_per_s";

} // namespace

void write_trace_csv(const SimTrace& trace, const std::string& path) {
    auto out = open_for_write(path);
    out << kTraceHeader << '\n';
    for (const auto& r : trace.rows) {
        out << r.true_time.nanos_since_epoch() << ',' << r.sample.t1.nanos_since_epoch()
            << ',' << r.sample.t2.nanos_since_epoch() << ','
            << r.sample.t3.nanos_since_epoch() << ',' << r.sample.t4.nanos_since_epoch()
            << ',' << r.measured_offset.count() << ',' << r.corrected_offset.count() << ','
            << r.estimate_after.count() << ',' << r.true_offset.count() << ','
            << r.rtt.count() << ',' << slope_to_string(r.estimate_slope_ns_per_s) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

SimTrace read_trace_csv(const std::string& path) {
    auto in = open_for_read(path);
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader)
        throw std::runtime_error(path + ": not a trace CSV (bad header)");
    SimTrace trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 11)
            throw std::runtime_error(path + ": expected 11 columns, got " +
                                     std::to_string(f.size()));
        TraceRow r;
        r.true_time = Instant::from_nanos(field_i64(f[0], path));
        r.sample.t1 = Instant::from_nanos(field_i64(f[1], path));
        r.sample.t2 = Instant::from_nanos(field_i64(f[2], path));
        r.sample.t3 = Instant::from_nanos(field_i64(f[3], path));
        r.sample.t4 = Instant::from_nanos(field_i64(f[4], path));
        r.measured_offset = Duration::nanos(field_i64(f[5], path));
        r.corrected_offset = Duration::nanos(field_i64(f[6], path));
        r.estimate_after = Duration::nanos(field_i64(f[7], path));
        r.true_offset = Duration::nanos(field_i64(f[8], path));
        r.rtt = Duration::nanos(field_i64(f[9], path));
        r.estimate_slope_ns_per_s = std::strtod(f[10].c_str(), nullptr);
        trace.rows.push_back(r);
    }
    return trace;
}

void write_report_csv(const ComparisonReport& report, const std::string& path) {
    auto out = open_for_write(path);
    out << "protocol,level,seed,min_ms,max_ms,mean_ms,stddev_ms\n";
    for (const auto& c : report.cells) {
        out << to_string(c.protocol) << ',' << to_string(c.level) << ',' << c.seed << ','
            << ns_as_ms(c.stats.min_abs) << ',' << ns_as_ms(c.stats.max_abs) << ','
            << ns_as_ms(c.stats.mean) << ',' << ns_as_ms(c.stats.stddev) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<CellResult> read_report_csv(const std::string& path) {
    auto in = open_for_read(path);
    std::string line;
    if (!std::getline(in, line) || line != "protocol,level,seed,min_ms,max_ms,mean_ms,stddev_ms")
        throw std::runtime_error(path + ": not a report CSV (bad header)");
    std::vector<CellResult> cells;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7)
            throw std::runtime_error(path + ": expected 7 columns, got " +
                                     std::to_string(f.size()));
        CellResult c;
        if (f[0] == "sntp") c.protocol = Protocol::sntp;
        else if (f[0] == "spot") c.protocol = Protocol::spot;
        else throw std::runtime_error(path + ": unknown protocol '" + f[0] + "'");
        const auto level = noise_level_from_string(f[1]);
        if (!level) throw std::runtime_error(path + ": unknown level '" + f[1] + "'");
        c.level = *level;
        c.seed = static_cast<std::uint64_t>(field_i64(f[2], path));
        c.stats.min_abs = ms_field_to_ns(f[3], path);
        c.stats.max_abs = ms_field_to_ns(f[4], path);
        c.stats.mean = ms_field_to_ns(f[5], path);
        c.stats.stddev = ms_field_to_ns(f[6], path);
        cells.push_back(c);
    }
    return cells;
}

void print_comparison_table(const ComparisonReport& report, std::ostream& out) {
    char buf[64];
    out << "Median offset-error standard deviation (ms)\n";
    std::snprintf(buf, sizeof(buf), "%-10s", "Protocol");
    out << buf;
    for (const auto& agg : report.aggregates) {
        std::string title = to_string(agg.level);
        title[0] = static_cast<char>(std::toupper(title[0]));
        std::snprintf(buf, sizeof(buf), "  %12s", (title + " Noise").c_str());
        out << buf;
    }
    out << '\n';

    auto row = [&](const char* name, auto value) {
        std::snprintf(buf, sizeof(buf), "%-10s", name);
        out << buf;
        for (const auto& agg : report.aggregates) {
            std::snprintf(buf, sizeof(buf), "  %12.1f", value(agg));
            out << buf;
        }
        out << '\n';
    };
    row("SPoT", [](const LevelAggregate& a) { return a.spot_median.stddev.to_millis(); });
    row("SNTP", [](const LevelAggregate& a) { return a.sntp_median.stddev.to_millis(); });
    row("SNTP/SPoT", [](const LevelAggregate& a) { return a.accuracy_ratio; });
}

} // namespace chronosim
