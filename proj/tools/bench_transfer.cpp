// Timing comparison of the OpenMP quadrature kernels against the serial
// reference on a representative contraction estimate.  Both paths use the
// same chunked reduction, so their results must match bit for bit.

#include <chrono>
#include <cstdio>
#include <cstring>

#include "spider/qd_transfer.hpp"

using namespace spider;

namespace {

double time_run(const ExpParams& params, const std::vector<cplx>& marked,
                TransferOptions opts, double* ratio)
{
    const auto t0 = std::chrono::steady_clock::now();
    const ContractionReport report = contraction_estimate(params, marked, opts);
    const auto t1 = std::chrono::steady_clock::now();
    *ratio = report.max_ratio;
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv)
{
    TransferOptions opts;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--grid") == 0 && i + 1 < argc)
            opts.grid = static_cast<std::size_t>(std::atol(argv[++i]));
        else if (std::strcmp(argv[i], "--branches") == 0 && i + 1 < argc)
            opts.branches = std::atoi(argv[++i]);
        else {
            std::fprintf(stderr, "usage: bench_transfer [--grid N] [--branches M]\n");
            return 64;
        }
    }

    const ExpParams params = make_params(0, cplx{0.0, 3.141592653589793});
    const std::vector<cplx> marked{cplx{0, 0}, cplx{1, 0}, cplx{-1, 0}};

    double ratio_serial = 0.0, ratio_parallel = 0.0;
    opts.parallel = false;
    const double t_serial = time_run(params, marked, opts, &ratio_serial);
    opts.parallel = true;
    const double t_parallel = time_run(params, marked, opts, &ratio_parallel);

    std::printf("grid=%zu branches=%d\n", opts.grid, opts.branches);
    std::printf("serial reference: %8.3f s   max ratio %.12f\n", t_serial,
                ratio_serial);
    std::printf("openmp kernels:   %8.3f s   max ratio %.12f\n", t_parallel,
                ratio_parallel);
    std::printf("speedup: %.2fx   bit-identical: %s\n", t_serial / t_parallel,
                ratio_serial == ratio_parallel ? "yes" : "NO");
    return ratio_serial == ratio_parallel ? 0 : 1;
}
