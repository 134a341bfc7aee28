// Compares the OpenMP Monte-Carlo kernels against their serial reference
// implementations and reports wall times plus result agreement.
#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "adsgd/mixing.hpp"
#include "adsgd/topology.hpp"

namespace {

template <typename F>
double timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    int samples = argc > 1 ? std::atoi(argv[1]) : 20000;
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif
    const adsgd::BaseTopology topo{adsgd::TopologyKind::Torus2d, 9};
    const auto failure = adsgd::LinkFailureModel::delay_tolerance_model(1.0);

    adsgd::AverageGapResult gap_par, gap_ser;
    const double t_gap_par = timed([&] {
        gap_par = adsgd::average_spectral_gap(topo, failure, samples, 42);
    });
    const double t_gap_ser = timed([&] {
        gap_ser = adsgd::reference::average_spectral_gap(topo, failure, samples, 42);
    });
    std::printf("average_spectral_gap  n=%d  omp %.3fs  serial %.3fs  "
                "speedup %.2fx  |diff| %.3e\n",
                samples, t_gap_par, t_gap_ser, t_gap_ser / t_gap_par,
                std::abs(gap_par.mean - gap_ser.mean));

    const auto base = adsgd::build_base(topo);
    double q_par = 0, q_ser = 0;
    const double t_q_par = timed([&] {
        q_par = adsgd::estimate_connectivity_probability(base, failure,
                                                         samples * 5, 42);
    });
    const double t_q_ser = timed([&] {
        q_ser = adsgd::reference::estimate_connectivity_probability(
            base, failure, samples * 5, 42);
    });
    std::printf("connectivity_prob     n=%d  omp %.3fs  serial %.3fs  "
                "speedup %.2fx  |diff| %.3e\n",
                samples * 5, t_q_par, t_q_ser, t_q_ser / t_q_par,
                std::abs(q_par - q_ser));
    return 0;
}
