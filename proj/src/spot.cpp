#include "chronosim/spot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace chronosim {

namespace {

Duration clamp_interval(Duration v, const SpotParams& p) {
    return std::clamp(v, p.poll_min, p.poll_max);
}

Duration skew_term(double skew, Duration delta) {
    return Duration::nanos(std::llround(skew * static_cast<double>(delta.count())));
}

void fold_min_rtt(SpotClientState& state, const SpotParams& params, Duration rtt) {
    if (params.min_rtt_window <= 0) {
        state.min_rtt = std::min(state.min_rtt, rtt);
        return;
    }
    state.rtt_window.push_back(rtt);
    if (state.rtt_window.size() > static_cast<std::size_t>(params.min_rtt_window))
        state.rtt_window.erase(state.rtt_window.begin());
    state.min_rtt = *std::min_element(state.rtt_window.begin(), state.rtt_window.end());
}

} // namespace

SpotClientState make_spot_state(const SpotRegistration& reg, const SpotParams& params) {
    if (reg.error_margin <= Duration{})
        throw std::invalid_argument("error margin must be positive");
    SpotClientState st;
    st.error_margin = reg.error_margin;
    st.polling_style = reg.polling_style;
    st.polling_interval = params.poll_initial;
    return st;
}

Duration estimate_offset(const SpotClientState& state, Instant now) {
    if (!state.initialized)
        throw NotReadyError("no measurement yet; offset estimate undefined");
    return state.old_offset + skew_term(state.clock_skew, now - state.last_measurement_time);
}

Duration filter_offset(const SpotClientState& state, Duration measured_offset,
                       Duration measured_rtt, Instant now) {
    const Duration estimated = estimate_offset(state, now);
    const Duration asymmetric_delay = measured_rtt - state.min_rtt;
    if (measured_offset > estimated + state.error_margin)
        return measured_offset - asymmetric_delay.halved();
    if (measured_offset < estimated - state.error_margin)
        return measured_offset + asymmetric_delay.halved();
    return measured_offset;
}

void update_rate_sync(SpotClientState& state, const SpotParams& params,
                      Duration measured_offset, Duration corrected_offset, Instant now) {
    const Duration estimated = estimate_offset(state, now);

    if (now < state.observation_deadline || state.num_samples < params.observation_polls) {
        state.abs_error_sum_ns += (estimated - corrected_offset).abs().count();
        state.num_samples += 1;
        state.mean_absolute_error =
            Duration::nanos(state.abs_error_sum_ns / state.num_samples);
    } else {
        if (state.mean_absolute_error < state.error_margin * 2) {
            // clock stable: back off
            state.polling_interval = clamp_interval(
                state.polling_style == PollingStyle::aimd
                    ? state.polling_interval + params.aimd_increase
                    : state.polling_interval * 2,
                params);
        } else {
            // clock unstable: poll harder
            state.polling_interval = clamp_interval(state.polling_interval.halved(), params);
        }
        state.observation_deadline =
            now + state.polling_interval * params.observation_polls;
        state.num_samples = 0;
        state.abs_error_sum_ns = 0;
        state.mean_absolute_error = Duration{};
    }

    if (corrected_offset == measured_offset) {
        // High-quality (symmetric) sample: refresh the skew slope.
        if (state.clock_sync_time != now) {
            state.clock_skew =
                (state.clock_sync_offset - corrected_offset).to_seconds() /
                (state.clock_sync_time - now).to_seconds();
        }
        state.clock_sync_offset = corrected_offset;
        state.clock_sync_time = now;
    }

    state.old_offset = corrected_offset;
    state.last_measurement_time = now;
}

SpotPollResult spot_poll_step(SpotClientState& state, const SpotParams& params,
                              const ExchangeSample& sample, std::optional<Instant> now_opt) {
    SpotPollResult result;
    result.measurement = compute_measurement(sample);
    const Instant now = now_opt.value_or(sample.t4);
    const Duration measured = result.measurement.offset;
    const Duration rtt = result.measurement.rtt;

    if (!state.initialized) {
        // No estimate exists yet, so the first sample passes unfiltered and
        // seeds every reference the algorithms need.
        state.min_rtt = rtt;
        if (params.min_rtt_window > 0) state.rtt_window.assign(1, rtt);
        state.old_offset = measured;
        state.last_measurement_time = now;
        state.clock_sync_offset = measured;
        state.clock_sync_time = now;
        state.observation_deadline =
            now + state.polling_interval * params.observation_polls;
        state.initialized = true;
        result.corrected_offset = measured;
        return result;
    }

    fold_min_rtt(state, params, rtt);
    result.corrected_offset = filter_offset(state, measured, rtt, now);
    update_rate_sync(state, params, measured, result.corrected_offset, now);
    return result;
}

namespace {

std::string double_to_string(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

} // namespace

std::string spot_state_to_kv(const SpotClientState& s) {
    std::ostringstream out;
    out << "old_offset_ns=" << s.old_offset.count() << '\n'
        << "clock_skew=" << double_to_string(s.clock_skew) << '\n'
        << "last_measurement_time_ns=" << s.last_measurement_time.nanos_since_epoch() << '\n'
        << "min_rtt_ns=" << s.min_rtt.count() << '\n'
        << "error_margin_ns=" << s.error_margin.count() << '\n'
        << "polling_interval_ns=" << s.polling_interval.count() << '\n'
        << "polling_style=" << (s.polling_style == PollingStyle::aimd ? "aimd" : "mimd") << '\n'
        << "num_samples=" << s.num_samples << '\n'
        << "mean_absolute_error_ns=" << s.mean_absolute_error.count() << '\n'
        << "abs_error_sum_ns=" << s.abs_error_sum_ns << '\n'
        << "observation_deadline_ns=" << s.observation_deadline.nanos_since_epoch() << '\n'
        << "clock_sync_offset_ns=" << s.clock_sync_offset.count() << '\n'
        << "clock_sync_time_ns=" << s.clock_sync_time.nanos_since_epoch() << '\n'
        << "initialized=" << (s.initialized ? 1 : 0) << '\n';
    out << "rtt_window_ns=";
    for (std::size_t i = 0; i < s.rtt_window.size(); ++i) {
        if (i) out << ',';
        out << s.rtt_window[i].count();
    }
    out << '\n';
    return out.str();
}

SpotClientState spot_state_from_kv(const std::string& text) {
    SpotClientState s;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("state line missing '=': " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        auto as_i64 = [&] {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size())
                throw std::invalid_argument("bad integer for " + key + ": " + value);
            return v;
        };
        if (key == "old_offset_ns") s.old_offset = Duration::nanos(as_i64());
        else if (key == "clock_skew") s.clock_skew = std::strtod(value.c_str(), nullptr);
        else if (key == "last_measurement_time_ns") s.last_measurement_time = Instant::from_nanos(as_i64());
        else if (key == "min_rtt_ns") s.min_rtt = Duration::nanos(as_i64());
        else if (key == "error_margin_ns") s.error_margin = Duration::nanos(as_i64());
        else if (key == "polling_interval_ns") s.polling_interval = Duration::nanos(as_i64());
        else if (key == "polling_style")
            s.polling_style = value == "mimd" ? PollingStyle::mimd : PollingStyle::aimd;
        else if (key == "num_samples") s.num_samples = static_cast<int>(as_i64());
        else if (key == "mean_absolute_error_ns") s.mean_absolute_error = Duration::nanos(as_i64());
        else if (key == "abs_error_sum_ns") s.abs_error_sum_ns = as_i64();
        else if (key == "observation_deadline_ns") s.observation_deadline = Instant::from_nanos(as_i64());
        else if (key == "clock_sync_offset_ns") s.clock_sync_offset = Duration::nanos(as_i64());
        else if (key == "clock_sync_time_ns") s.clock_sync_time = Instant::from_nanos(as_i64());
        else if (key == "initialized") s.initialized = value == "1";
        else if (key == "rtt_window_ns") {
            s.rtt_window.clear();
            std::size_t pos = 0;
            while (pos < value.size()) {
                auto comma = value.find(',', pos);
                if (comma == std::string::npos) comma = value.size();
                std::int64_t v = 0;
                std::from_chars(value.data() + pos, value.data() + comma, v);
                s.rtt_window.push_back(Duration::nanos(v));
                pos = comma + 1;
            }
        } else {
            throw std::invalid_argument("unknown state key: " + key);
        }
    }
    return s;
}

ClientId SpotServer::register_client(const SpotRegistration& reg) {
    if (reg.error_margin <= Duration{})
        throw std::invalid_argument("error margin must be positive");
    std::lock_guard lock(mu_);
    const ClientId id = next_id_++;
    registry_.emplace(id, reg);
    return id;
}

std::optional<SpotRegistration> SpotServer::lookup(ClientId id) const {
    std::lock_guard lock(mu_);
    auto it = registry_.find(id);
    if (it == registry_.end()) return std::nullopt;
    return it->second;
}

std::size_t SpotServer::client_count() const {
    std::lock_guard lock(mu_);
    return registry_.size();
}

} // namespace chronosim
