// Compares the serial reference kernels against the OpenMP versions on
// engine-shaped workloads and prints one CSV row per case. Wall-clock output
// only; correctness of par vs serial is covered by the unit tests.

#include "tierkv/kernels.hpp"
#include "tierkv/workload.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <vector>

using tierkv::Rng;
namespace kn = tierkv::kernels;

namespace {

using Clock = std::chrono::steady_clock;

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = Clock::now();
        fn();
        auto t1 = Clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

std::vector<float> random_rows(Rng& rng, size_t n, size_t d) {
    std::vector<float> rows(n * d);
    for (auto& x : rows) x = static_cast<float>(rng.next_gaussian());
    return rows;
}

}  // namespace

int main() {
    std::printf("# threads=%d openmp=%d\n", kn::thread_count(),
                kn::parallel_available() ? 1 : 0);
    std::printf("kernel,n,d,serial_ms,parallel_ms,speedup\n");

    Rng rng(42);
    const size_t d = 128;

    for (size_t n : {4096u, 16384u, 65536u}) {
        auto rows = random_rows(rng, n, d);
        auto q = random_rows(rng, 1, d);
        std::vector<double> s1(n), s2(n);
        double ts = time_best_of(5, [&] {
            kn::serial::dot_scores(q.data(), rows.data(), n, d, s1.data());
        });
        double tp = time_best_of(5, [&] {
            kn::par::dot_scores(q.data(), rows.data(), n, d, s2.data());
        });
        std::printf("dot_scores,%zu,%zu,%.3f,%.3f,%.2f\n", n, d, ts * 1e3, tp * 1e3,
                    ts / tp);
    }

    for (size_t n : {2048u, 8192u}) {
        const size_t k = n / 16;
        auto points = random_rows(rng, n, d);
        auto centroids = random_rows(rng, k, d);
        std::vector<uint32_t> a1(n), a2(n);
        double ts = time_best_of(3, [&] {
            kn::serial::assign_nearest(points.data(), n, centroids.data(), k, d,
                                       a1.data());
        });
        double tp = time_best_of(3, [&] {
            kn::par::assign_nearest(points.data(), n, centroids.data(), k, d,
                                    a2.data());
        });
        std::printf("assign_nearest,%zu,%zu,%.3f,%.3f,%.2f\n", n, d, ts * 1e3,
                    tp * 1e3, ts / tp);
    }

    for (size_t n : {8192u, 65536u}) {
        auto keys = random_rows(rng, n, d);
        auto values = random_rows(rng, n, d);
        auto q = random_rows(rng, 1, d);
        std::vector<uint32_t> ids(n);
        std::iota(ids.begin(), ids.end(), 0u);
        std::vector<float> o1(d), o2(d);
        double ts = time_best_of(5, [&] {
            kn::serial::attention(q.data(), keys.data(), values.data(), ids, d,
                                  o1.data());
        });
        double tp = time_best_of(5, [&] {
            kn::par::attention(q.data(), keys.data(), values.data(), ids, d,
                               o2.data());
        });
        std::printf("attention,%zu,%zu,%.3f,%.3f,%.2f\n", n, d, ts * 1e3, tp * 1e3,
                    ts / tp);
    }

    {
        const size_t groups_n = 1024, per_group = 16, n = groups_n * per_group;
        auto rows = random_rows(rng, n, d);
        auto centroids = random_rows(rng, groups_n, d);
        std::vector<std::vector<uint32_t>> groups(groups_n);
        for (size_t g = 0; g < groups_n; ++g) {
            groups[g].resize(per_group);
            std::iota(groups[g].begin(), groups[g].end(),
                      static_cast<uint32_t>(g * per_group));
        }
        std::vector<double> r1(groups_n), r2(groups_n);
        double ts = time_best_of(5, [&] {
            kn::serial::group_radius(rows.data(), d, groups, centroids.data(),
                                     r1.data());
        });
        double tp = time_best_of(5, [&] {
            kn::par::group_radius(rows.data(), d, groups, centroids.data(), r2.data());
        });
        std::printf("group_radius,%zu,%zu,%.3f,%.3f,%.2f\n", n, d, ts * 1e3, tp * 1e3,
                    ts / tp);
    }
    return 0;
}
