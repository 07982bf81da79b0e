// chronosim: clock-sync protocol lab. Deterministic simulation, SNTP-vs-SPoT
// comparison grids, trace statistics, and live SNTP polling/serving.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "chronosim/experiment.hpp"
#include "chronosim/netsim.hpp"
#include "chronosim/sntp_net.hpp"
#include "chronosim/spot.hpp"
#include "chronosim/time.hpp"

namespace {

using namespace chronosim;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted.store(true); }

std::string default_seed_text() {
    if (const char* env = std::getenv("CHRONOSIM_SEED")) return env;
    return "42";
}

// Rejects malformed duration values at parse time, so they count as usage
// errors rather than runtime failures.
const CLI::Validator kDurationFlag(
    [](std::string& text) -> std::string {
        try {
            parse_duration(text);
        } catch (const std::exception& e) {
            return e.what();
        }
        return {};
    },
    "DURATION");

Duration millis_flag(double ms) {
    return Duration::nanos(std::llround(ms * 1e6));
}

NoiseModel make_noise(const std::string& level_name, double sigma_ms, double base_delay_ms,
                      double spike_prob, double jitter_ms) {
    const auto level = noise_level_from_string(level_name);
    if (!level)
        throw std::invalid_argument("unknown noise level: " + level_name);
    NoiseModel noise = NoiseModel::for_level(*level);
    if (*level == NoiseLevel::custom) noise.sigma = millis_flag(sigma_ms);
    noise.base_one_way_delay = millis_flag(base_delay_ms);
    noise.spike_probability = spike_prob;
    noise.symmetric_jitter_sigma = millis_flag(jitter_ms);
    return noise;
}

PollingStyle style_from(const std::string& name) {
    if (name == "aimd") return PollingStyle::aimd;
    if (name == "mimd") return PollingStyle::mimd;
    throw std::invalid_argument("unknown polling style: " + name);
}

Protocol protocol_from(const std::string& name) {
    if (name == "sntp") return Protocol::sntp;
    if (name == "spot") return Protocol::spot;
    throw std::invalid_argument("unknown protocol: " + name);
}

struct SimulateArgs {
    std::string protocol = "spot";
    std::string noise = "high";
    std::string seed = default_seed_text();
    std::string duration = "3h";
    std::string poll = "64s";
    std::string em = "10ms";
    std::string style = "aimd";
    std::string device = "thick";
    double sigma_ms = 250.0;
    double base_delay_ms = 20.0;
    double spike_prob = 0.3;
    double jitter_ms = 1.0;
    std::string base_offset = "auto";
    std::string skew_ppm = "auto";
    std::string out = "trace.csv";
    std::string state_out;
};

SimConfig build_sim_config(const SimulateArgs& a) {
    SimConfig cfg;
    cfg.seed = std::strtoull(a.seed.c_str(), nullptr, 10);
    cfg.duration = parse_duration(a.duration);
    cfg.noise = make_noise(a.noise, a.sigma_ms, a.base_delay_ms, a.spike_prob, a.jitter_ms);
    cfg.protocol = protocol_from(a.protocol);
    cfg.sntp_poll_interval = parse_duration(a.poll);

    SpotRegistration reg;
    reg.device_type = a.device == "thin" ? DeviceType::thin : DeviceType::thick;
    reg.polling_style = style_from(a.style);
    reg.error_margin = parse_duration(a.em);
    cfg.spot_registration = reg;

    cfg.client_clock = draw_client_clock(cfg.seed);
    if (a.base_offset != "auto") cfg.client_clock.base_offset = parse_duration(a.base_offset);
    if (a.skew_ppm != "auto") cfg.client_clock.skew_ppm = std::strtod(a.skew_ppm.c_str(), nullptr);
    return cfg;
}

int run_simulate(const SimulateArgs& args) {
    const SimConfig cfg = build_sim_config(args);
    const SimTrace trace = run_simulation(cfg);
    write_trace_csv(trace, args.out);
    std::cout << "wrote " << trace.rows.size() << " polls to " << args.out << "\n";

    if (!args.state_out.empty()) {
        if (cfg.protocol != Protocol::spot)
            throw std::runtime_error("--state-out only applies to --protocol spot");
        // Replay the recorded samples to capture the engine's final state;
        // the trace rows alone do not carry it.
        SpotClientState st = make_spot_state(*cfg.spot_registration, cfg.spot_params);
        for (const auto& row : trace.rows) spot_poll_step(st, cfg.spot_params, row.sample);
        std::ofstream out(args.state_out, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + args.state_out);
        out << spot_state_to_kv(st);
        std::cout << "wrote engine state to " << args.state_out << "\n";
    }
    return 0;
}

struct CompareArgs {
    int seeds = 10;
    std::string duration = "3h";
    std::string grid = "1s";
    std::string em = "10ms";
    std::string style = "aimd";
    std::string poll = "64s";
    double base_delay_ms = 20.0;
    double spike_prob = 0.3;
    double jitter_ms = 1.0;
    std::string out = "report.csv";
    int jobs = 0; // 0 = parallel (OpenMP decides), 1 = serial reference
};

int run_compare(const CompareArgs& a) {
    ComparisonConfig cfg;
    cfg.seeds = sequential_seeds(a.seeds);
    cfg.duration = parse_duration(a.duration);
    cfg.grid_step = parse_duration(a.grid);
    cfg.registration.polling_style = style_from(a.style);
    cfg.registration.error_margin = parse_duration(a.em);
    cfg.sntp_poll_interval = parse_duration(a.poll);
    cfg.noise_template.base_one_way_delay = millis_flag(a.base_delay_ms);
    cfg.noise_template.spike_probability = a.spike_prob;
    cfg.noise_template.symmetric_jitter_sigma = millis_flag(a.jitter_ms);

    const ComparisonReport report = compare_protocols(
        cfg, a.jobs == 1 ? GridExecution::serial : GridExecution::parallel);
    write_report_csv(report, a.out);
    print_comparison_table(report, std::cout);
    std::cout << "wrote " << report.cells.size() << " rows to " << a.out << "\n";
    return 0;
}

int run_stats(const std::string& in_path, const std::string& grid_text) {
    const SimTrace trace = read_trace_csv(in_path);
    const auto series = offset_error_series(trace, parse_duration(grid_text));
    const OffsetErrorStats stats = compute_stats(series);
    std::cout << "polls=" << trace.rows.size() << " grid_samples=" << series.size() << "\n"
              << "min=" << format_millis(stats.min_abs) << "\n"
              << "max=" << format_millis(stats.max_abs) << "\n"
              << "mean=" << format_millis(stats.mean) << "\n"
              << "stddev=" << format_millis(stats.stddev) << "\n";
    return 0;
}

int run_live_poll(const std::string& endpoint_text, int count, const std::string& timeout_text,
                  const std::string& interval_text) {
    const UdpEndpoint ep = parse_endpoint(endpoint_text);
    const Duration timeout = parse_duration(timeout_text);
    const Duration interval = parse_duration(interval_text);
    std::cout << "remote=" << ep.host << ":" << ep.port << "\n";
    SntpClientState state;
    for (int i = 0; i < count; ++i) {
        if (i > 0) std::this_thread::sleep_for(std::chrono::nanoseconds(interval.count()));
        const ExchangeSample sample = live_poll(ep, timeout);
        const Duration applied = sntp_poll_step(state, sample);
        std::cout << "poll " << (i + 1) << "/" << count
                  << "  offset=" << format_millis(applied)
                  << "  delay=" << format_millis(state.last_delay) << "\n";
    }
    return 0;
}

int run_serve(const std::string& bind_text, int stratum) {
    const UdpEndpoint ep = parse_endpoint(bind_text, 123, /*allow_zero=*/true);
    SntpResponder::Config cfg;
    cfg.bind_host = ep.host;
    cfg.port = ep.port;
    cfg.stratum = static_cast<std::uint8_t>(stratum);
    SntpResponder responder(cfg);
    responder.start();
    std::cout << "serving on " << ep.host << ":" << responder.port() << " (stratum "
              << stratum << "), Ctrl-C to stop" << std::endl;

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted.load())
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    responder.stop();
    std::cout << "served " << responder.served_count() << " requests\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"clock-sync protocol lab: deterministic simulation, protocol comparison, "
                 "and live SNTP polling/serving"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "run one simulation and write a trace CSV");
    sim_cmd->add_option("--protocol", sim.protocol, "protocol to drive: sntp|spot")
        ->capture_default_str();
    sim_cmd->add_option("--noise", sim.noise, "noise level: low|medium|high|custom")
        ->capture_default_str();
    sim_cmd->add_option("--sigma", sim.sigma_ms, "spike deviation in ms (used with --noise custom)")
        ->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "RNG seed; default from CHRONOSIM_SEED or 42")
        ->capture_default_str();
    sim_cmd->add_option("--duration", sim.duration, "simulated run length (s/m/h suffix)")
        ->check(kDurationFlag)
        ->capture_default_str();
    sim_cmd->add_option("--poll", sim.poll, "SNTP polling interval")
        ->check(kDurationFlag)
        ->capture_default_str();
    sim_cmd->add_option("--em", sim.em, "SPoT error margin")
        ->check(kDurationFlag)
        ->capture_default_str();
    sim_cmd->add_option("--style", sim.style, "SPoT polling style: aimd|mimd")
        ->capture_default_str();
    sim_cmd->add_option("--device", sim.device, "SPoT device type: thick|thin")
        ->capture_default_str();
    sim_cmd->add_option("--base-delay", sim.base_delay_ms, "one-way base delay in ms")
        ->capture_default_str();
    sim_cmd->add_option("--spike-prob", sim.spike_prob, "per-exchange spike probability")
        ->capture_default_str();
    sim_cmd->add_option("--jitter", sim.jitter_ms, "symmetric jitter deviation in ms")
        ->capture_default_str();
    sim_cmd->add_option("--base-offset", sim.base_offset,
                        "client clock error at t=0 (duration, or 'auto' to draw per seed)")
        ->capture_default_str();
    sim_cmd->add_option("--skew", sim.skew_ppm,
                        "client clock skew in ppm, or 'auto' to draw per seed")
        ->capture_default_str();
    sim_cmd->add_option("--out", sim.out, "trace CSV path")->capture_default_str();
    sim_cmd->add_option("--state-out", sim.state_out,
                        "also write the final SPoT engine state (key=value lines)");

    CompareArgs cmp;
    auto* cmp_cmd = app.add_subcommand(
        "compare", "run the protocol x noise-level x seed grid and print the summary table");
    cmp_cmd->add_option("--seeds", cmp.seeds, "number of seeds (1..N)")->capture_default_str();
    cmp_cmd->add_option("--duration", cmp.duration, "simulated run length per cell")
        ->check(kDurationFlag)
        ->capture_default_str();
    cmp_cmd->add_option("--grid", cmp.grid, "error sampling step")
        ->check(kDurationFlag)
        ->capture_default_str();
    cmp_cmd->add_option("--em", cmp.em, "SPoT error margin")
        ->check(kDurationFlag)
        ->capture_default_str();
    cmp_cmd->add_option("--style", cmp.style, "SPoT polling style: aimd|mimd")
        ->capture_default_str();
    cmp_cmd->add_option("--poll", cmp.poll, "SNTP polling interval")
        ->check(kDurationFlag)
        ->capture_default_str();
    cmp_cmd->add_option("--base-delay", cmp.base_delay_ms, "one-way base delay in ms")
        ->capture_default_str();
    cmp_cmd->add_option("--spike-prob", cmp.spike_prob, "per-exchange spike probability")
        ->capture_default_str();
    cmp_cmd->add_option("--jitter", cmp.jitter_ms, "symmetric jitter deviation in ms")
        ->capture_default_str();
    cmp_cmd->add_option("--out", cmp.out, "report CSV path")->capture_default_str();
    cmp_cmd->add_option("--jobs", cmp.jobs, "1 = serial reference, 0 = parallel")
        ->capture_default_str();

    std::string stats_in;
    std::string stats_grid = "1s";
    auto* stats_cmd =
        app.add_subcommand("stats", "print offset-error statistics of a trace CSV");
    stats_cmd->add_option("--in", stats_in, "trace CSV path")->required();
    stats_cmd->add_option("--grid", stats_grid, "error sampling step")
        ->check(kDurationFlag)
        ->capture_default_str();

    std::string lp_endpoint;
    int lp_count = 1;
    std::string lp_timeout = "2s";
    std::string lp_interval = "1s";
    auto* lp_cmd = app.add_subcommand("live-poll", "poll a real SNTP server over UDP");
    lp_cmd->add_option("endpoint", lp_endpoint, "host or host:port (default port 123)")
        ->required();
    lp_cmd->add_option("--count", lp_count, "number of polls")->capture_default_str();
    lp_cmd->add_option("--timeout", lp_timeout, "per-poll reply timeout")
        ->check(kDurationFlag)
        ->capture_default_str();
    lp_cmd->add_option("--interval", lp_interval, "pause between polls")
        ->check(kDurationFlag)
        ->capture_default_str();

    std::string serve_bind = "0.0.0.0:123";
    int serve_stratum = 1;
    auto* serve_cmd = app.add_subcommand("serve", "run a stateless SNTP responder");
    serve_cmd->add_option("--bind", serve_bind, "bind address host:port (port 0 = ephemeral)")
        ->capture_default_str();
    serve_cmd->add_option("--stratum", serve_stratum, "stratum to advertise")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // help goes to stdout, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (sim_cmd->parsed()) return run_simulate(sim);
        if (cmp_cmd->parsed()) return run_compare(cmp);
        if (stats_cmd->parsed()) return run_stats(stats_in, stats_grid);
        if (lp_cmd->parsed()) return run_live_poll(lp_endpoint, lp_count, lp_timeout, lp_interval);
        if (serve_cmd->parsed()) return run_serve(serve_bind, serve_stratum);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
