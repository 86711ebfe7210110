// Compares the serial reference (FIPP_THREADS=1) against the parallel default
// on the two hot kernels: path generation and the Monte Carlo martingale
// sampler. Outputs must be bit-identical; only wall time may differ.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "fipp/mc_validator.hpp"
#include "fipp/parallel.hpp"

using namespace fipp;

namespace {

using Clock = std::chrono::steady_clock;

template <class Fn>
double timed(Fn&& fn) {
    const auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

FactorMarketSpec bench_market() {
    FactorMarketSpec s;
    s.n = 1;
    s.d = 1;
    s.y0 = Vec::Zero(1);
    s.drift_R = [](double, const Vec&) { return Vec::Constant(1, 0.05); };
    s.drift_Y = [](double, const Vec&) { return Vec::Constant(1, 0.0); };
    s.cov_R = [](double, const Vec&) { return Mat::Constant(1, 1, 0.04); };
    s.cov_RY = [](double, const Vec&) { return Mat::Constant(1, 1, 0.06); };
    s.cov_Y = [](double, const Vec&) { return Mat::Constant(1, 1, 0.09); };
    JumpAtom a;
    a.u = Vec::Constant(1, 0.2);
    a.v = Vec::Constant(1, 0.1);
    a.rate = 0.5;
    s.jumps.atoms.push_back(a);
    s.constant_coefficients = true;
    return s;
}

struct Run {
    double serial = 0.0;
    double parallel = 0.0;
    bool identical = false;
};

void report(const char* name, const Run& r) {
    std::printf("%-22s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   identical: %s\n",
                name, r.serial, r.parallel, r.serial / r.parallel,
                r.identical ? "yes" : "NO");
}

} // namespace

int main() {
    const auto s = bench_market();
    std::printf("workers available: %d\n\n", par::worker_count());

    Run paths;
    {
        SimParams sp;
        sp.T = 1.0;
        sp.dt = 0.01;
        sp.n_paths = 20000;
        sp.seed = 42;
        PathBundle serial_b, parallel_b;
        setenv("FIPP_THREADS", "1", 1);
        paths.serial = timed([&] { serial_b = simulate_paths(s, sp); });
        unsetenv("FIPP_THREADS");
        paths.parallel = timed([&] { parallel_b = simulate_paths(s, sp); });
        paths.identical = serial_b.y == parallel_b.y && serial_b.dRc == parallel_b.dRc &&
                          serial_b.dYc == parallel_b.dYc;
        report("simulate_paths", paths);
    }

    Run mc;
    {
        const PowerParams pp{0.5, 0.0};
        const auto C = ConstraintSet::box(Vec::Constant(1, -10.0), Vec::Constant(1, 10.0));
        const auto sol = make_tilted_solution(s, pp, TiltParams{Vec::Constant(1, 1.0 / 3.0)}, C);
        MartingaleParams mp;
        mp.n_paths = 200000;
        mp.dt = 0.01;
        mp.seed = 42;
        MartingaleReport serial_r, parallel_r;
        setenv("FIPP_THREADS", "1", 1);
        mc.serial = timed([&] { serial_r = martingale_test(s, sol, mp); });
        unsetenv("FIPP_THREADS");
        mc.parallel = timed([&] { parallel_r = martingale_test(s, sol, mp); });
        mc.identical = serial_r.mean == parallel_r.mean && serial_r.se == parallel_r.se &&
                       serial_r.z == parallel_r.z;
        report("martingale sampling", mc);
    }

    return (paths.identical && mc.identical) ? 0 : 1;
}
