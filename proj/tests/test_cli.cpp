#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

using std::string;

namespace {

string cli_path() {
    const char* env = std::getenv("CHRONOSIM_BIN");
    return env ? env : "";
}

int run(const string& args, const string& stdout_file = "cli_out.txt") {
    const string cmd = cli_path() + " " + args + " > " + stdout_file + " 2> cli_err.txt";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

string slurp(const string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits 0 and documents the defaults") {
    if (cli_path().empty()) return; // driven through ctest, which sets CHRONOSIM_BIN
    CHECK(run("--help") == 0);
    CHECK(run("simulate --help") == 0);
    const string text = slurp("cli_out.txt");
    for (const char* flag : {"--protocol", "--noise", "--seed", "--duration", "--em",
                             "--style", "--out", "--state-out"})
        CHECK(text.find(flag) != string::npos);
    CHECK(text.find("3h") != string::npos); // default duration is visible

    CHECK(run("compare --help") == 0);
    const string cmp = slurp("cli_out.txt");
    for (const char* flag : {"--seeds", "--grid", "--jobs", "--poll"})
        CHECK(cmp.find(flag) != string::npos);
}

TEST_CASE("usage errors exit 1") {
    if (cli_path().empty()) return;
    CHECK(run("") == 1);
    CHECK(run("simulate --no-such-flag") == 1);
    CHECK(run("simulate --duration nonsense") == 1);
    CHECK(run("frobnicate") == 1);
}

TEST_CASE("runtime errors exit 2") {
    if (cli_path().empty()) return;
    CHECK(run("stats --in no_such_trace.csv") == 2);
}

TEST_CASE("simulate is deterministic and stats reads it back") {
    if (cli_path().empty()) return;
    const string flags =
        "simulate --protocol spot --noise high --seed 42 --duration 20m --out ";
    CHECK(run(flags + "cli_t1.csv") == 0);
    CHECK(run(flags + "cli_t2.csv") == 0);
    const string t1 = slurp("cli_t1.csv");
    CHECK(!t1.empty());
    CHECK(t1 == slurp("cli_t2.csv"));

    CHECK(run("stats --in cli_t1.csv") == 0);
    const string stats = slurp("cli_out.txt");
    for (const char* key : {"min=", "max=", "mean=", "stddev="})
        CHECK(stats.find(key) != string::npos);

    std::remove("cli_t1.csv");
    std::remove("cli_t2.csv");
}

TEST_CASE("seed falls back to the environment") {
    if (cli_path().empty()) return;
    const string base = " simulate --duration 10m --out ";
    CHECK(std::system((("CHRONOSIM_SEED=7 " + cli_path() + base + "cli_env.csv > /dev/null 2>&1")).c_str()) == 0);
    CHECK(run("simulate --duration 10m --seed 7 --out cli_flag.csv") == 0);
    CHECK(slurp("cli_env.csv") == slurp("cli_flag.csv"));
    std::remove("cli_env.csv");
    std::remove("cli_flag.csv");
}

TEST_CASE("serve and live-poll talk to each other") {
    if (cli_path().empty()) return;
    // background responder on an ephemeral port; it prints the bound port
    const string start = cli_path() +
                         " serve --bind 127.0.0.1:0 > cli_serve.txt 2>&1 & echo $! > cli_pid.txt";
    REQUIRE(std::system(start.c_str()) == 0);

    string port;
    for (int attempt = 0; attempt < 50 && port.empty(); ++attempt) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        const string text = slurp("cli_serve.txt");
        const auto at = text.find("127.0.0.1:");
        const auto end = text.find(' ', at);
        if (at != string::npos && end != string::npos)
            port = text.substr(at + 10, end - at - 10);
    }
    REQUIRE(!port.empty());

    const int rc = run("live-poll 127.0.0.1:" + port + " --count 3 --interval 10ms");
    [[maybe_unused]] const int killed =
        std::system("kill -TERM $(cat cli_pid.txt) 2>/dev/null; sleep 0.3");
    std::remove("cli_pid.txt");
    std::remove("cli_serve.txt");

    CHECK(rc == 0);
    const string out = slurp("cli_out.txt");
    CHECK(out.find("poll 1/3") != string::npos);
    CHECK(out.find("poll 3/3") != string::npos);
    CHECK(out.find("offset=") != string::npos);
    CHECK(out.find("delay=") != string::npos);
}

TEST_CASE("live-poll against a dead endpoint exits 2") {
    if (cli_path().empty()) return;
    CHECK(run("live-poll 127.0.0.1:59999 --timeout 100ms") == 2);
}

TEST_CASE("state snapshot lands on disk") {
    if (cli_path().empty()) return;
    CHECK(run("simulate --duration 15m --seed 3 --out cli_t3.csv --state-out cli_state.txt") == 0);
    const string state = slurp("cli_state.txt");
    for (const char* key :
         {"old_offset_ns=", "clock_skew=", "min_rtt_ns=", "polling_interval_ns=",
          "polling_style=", "initialized=1"})
        CHECK(state.find(key) != string::npos);
    std::remove("cli_t3.csv");
    std::remove("cli_state.txt");
}

} // TEST_SUITE
