// Micro-benchmark for the fragmentation gain kernels: the O(n^2) serial
// reference, the cell-parallel variant of the same loop, and the O(n)
// suffix-sum production path.  Prints a timing table and cross-checks that
// all three agree to roundoff.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "gfgap/grid.hpp"
#include "gfgap/model.hpp"
#include "gfgap/semigroup.hpp"

namespace {

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

template <typename F>
double time_ms(F&& f, int reps) {
    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) f();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

}  // namespace

int main() {
    const gf::Coefficients coeffs = gf::Coefficients::power_law(1.0, 1.0, 1.0, 1.0);
    const std::vector<gf::FragmentKernel> kernels = {
        gf::FragmentKernel::uniform(), gf::FragmentKernel::mitosis()};
    const char* kernel_names[] = {"uniform", "mitosis"};

    std::printf("%-8s %8s %14s %14s %14s %12s\n", "kernel", "cells",
                "reference/ms", "parallel/ms", "suffix-sum/ms", "max rel diff");

    for (std::size_t kk = 0; kk < kernels.size(); ++kk) {
        const gf::FragmentKernel& kernel = kernels[kk];
        for (int n : {2000, 20000, 100000}) {
            gf::GridPtr grid =
                gf::make_grid_ptr(1e-4, 50.0, gf::GridSpec::log_uniform(n));
            gf::GridMeasure mu(grid);
            for (std::size_t i = 0; i < grid->size(); ++i) {
                const double y = grid->nodes[i];
                mu.mass[i] = grid->width(i) * std::exp(-0.5 * y) * (1.0 + 0.1 * y);
            }

            // Reference is O(n^2): keep reps low and skip the largest size.
            gf::GainResult ref, par, fast;
            double t_ref = -1.0, t_par = -1.0;
            if (n <= 20000) {
                t_ref = time_ms(
                    [&] { ref = gf::fragmentation_gain_reference(mu, kernel, coeffs); },
                    n <= 2000 ? 5 : 1);
                t_par = time_ms(
                    [&] { par = gf::fragmentation_gain_parallel(mu, kernel, coeffs); },
                    n <= 2000 ? 5 : 1);
            }
            const double t_fast =
                time_ms([&] { fast = gf::fragmentation_gain(mu, kernel, coeffs); }, 20);

            double diff = 0.0;
            if (n <= 20000) {
                diff = std::max(max_rel_diff(ref.rate, fast.rate),
                                max_rel_diff(par.rate, fast.rate));
            }
            char ref_buf[32], par_buf[32];
            if (t_ref >= 0.0) std::snprintf(ref_buf, sizeof ref_buf, "%.3f", t_ref);
            else std::snprintf(ref_buf, sizeof ref_buf, "-");
            if (t_par >= 0.0) std::snprintf(par_buf, sizeof par_buf, "%.3f", t_par);
            else std::snprintf(par_buf, sizeof par_buf, "-");
            std::printf("%-8s %8d %14s %14s %14.3f %12.2e\n", kernel_names[kk], n,
                        ref_buf, par_buf, t_fast, diff);
        }
    }
    return 0;
}
