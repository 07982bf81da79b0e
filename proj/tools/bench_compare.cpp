// Times the comparison grid's serial reference path against the OpenMP
// path and checks they agree. Usage: bench_compare [seeds] [duration].

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "chronosim/experiment.hpp"

using namespace chronosim;

namespace {

double run_timed(const ComparisonConfig& cfg, GridExecution exec, ComparisonReport& out) {
    const auto start = std::chrono::steady_clock::now();
    out = compare_protocols(cfg, exec);
    const auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(end - start).count();
}

} // namespace

int main(int argc, char** argv) {
    ComparisonConfig cfg;
    cfg.seeds = sequential_seeds(argc > 1 ? std::atoi(argv[1]) : 10);
    cfg.duration = parse_duration(argc > 2 ? argv[2] : "3h");

#ifdef _OPENMP
    std::printf("openmp: %d thread(s)\n", omp_get_max_threads());
#else
    std::printf("openmp: not compiled in\n");
#endif
    std::printf("grid: 2 protocols x %zu levels x %zu seeds, %.0f s simulated each\n",
                cfg.levels.size(), cfg.seeds.size(), cfg.duration.to_seconds());

    ComparisonReport serial, parallel;
    const double t_serial = run_timed(cfg, GridExecution::serial, serial);
    const double t_parallel = run_timed(cfg, GridExecution::parallel, parallel);

    std::printf("serial:   %9.1f ms\n", t_serial);
    std::printf("parallel: %9.1f ms  (speedup %.2fx)\n", t_parallel,
                t_serial / (t_parallel > 0 ? t_parallel : 1));
    if (serial == parallel) {
        std::printf("results: identical\n");
        return 0;
    }
    std::printf("results: MISMATCH\n");
    return 1;
}
