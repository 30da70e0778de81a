#include "sfde/montecarlo.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace sfde {

namespace {

constexpr std::uint64_t kChunk = 1024;

// Per-chunk running moments; combined pairwise with Chan's update so the
// reduction tree is independent of thread scheduling.
struct Moments {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
};

Moments combine(const Moments& a, const Moments& b) {
    if (a.n == 0) return b;
    if (b.n == 0) return a;
    Moments out;
    out.n = a.n + b.n;
    double d = b.mean - a.mean;
    double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
    out.mean = a.mean + d * nb / (na + nb);
    out.m2 = a.m2 + b.m2 + d * d * na * nb / (na + nb);
    return out;
}

Moments pairwise_tree(std::vector<Moments> parts) {
    while (parts.size() > 1) {
        std::vector<Moments> next;
        next.reserve((parts.size() + 1) / 2);
        for (size_t i = 0; i + 1 < parts.size(); i += 2)
            next.push_back(combine(parts[i], parts[i + 1]));
        if (parts.size() % 2 == 1) next.push_back(parts.back());
        parts.swap(next);
    }
    return parts.empty() ? Moments{} : parts[0];
}

struct Failure {
    bool set = false;
    std::uint64_t index = 0;
    std::string what;
};

template <typename PerPath>
std::vector<Moments> map_chunks(std::uint64_t n_paths, int threads, int n_outputs,
                                const PerPath& per_path) {
    const std::uint64_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<Moments> parts(n_chunks * n_outputs);
    std::atomic<std::uint64_t> cursor{0};
    std::mutex fail_mutex;
    Failure failure;

    auto worker = [&]() {
        std::vector<double> out(n_outputs);
        for (;;) {
            std::uint64_t c = cursor.fetch_add(1);
            if (c >= n_chunks) return;
            const std::uint64_t lo = c * kChunk;
            const std::uint64_t hi = std::min(n_paths, lo + kChunk);
            for (std::uint64_t i = lo; i < hi; ++i) {
                try {
                    per_path(i, out);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> g(fail_mutex);
                    if (!failure.set || i < failure.index)
                        failure = {true, i, e.what()};
                    return;
                }
                for (int k = 0; k < n_outputs; ++k)
                    parts[c * n_outputs + k].add(out[k]);
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure.set) throw EnsembleError(failure.index, failure.what);
    return parts;
}

Estimate to_estimate(const Moments& m, std::uint64_t seed, double elapsed) {
    Estimate e;
    e.n_paths = m.n;
    e.seed = seed;
    e.elapsed_seconds = elapsed;
    e.mean = m.mean;
    if (m.n > 1) {
        double var = m.m2 / static_cast<double>(m.n - 1);
        e.std_error = var > 0 ? std::sqrt(var / static_cast<double>(m.n)) : 0.0;
    }
    return e;
}

} // namespace

Estimate run_ensemble(const std::function<double(std::uint64_t)>& job,
                      std::uint64_t n_paths, std::uint64_t seed, int threads) {
    if (n_paths < 2) throw std::invalid_argument("run_ensemble: n_paths >= 2 required");
    auto t0 = std::chrono::steady_clock::now();
    auto parts = map_chunks(n_paths, threads, 1,
                            [&](std::uint64_t i, std::span<double> out) { out[0] = job(i); });
    Moments total = pairwise_tree(std::move(parts));
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return to_estimate(total, seed, elapsed);
}

std::vector<Estimate> run_ensemble_multi(
    const std::function<void(std::uint64_t, std::span<double>)>& job, int n_outputs,
    std::uint64_t n_paths, std::uint64_t seed, int threads) {
    if (n_paths < 2) throw std::invalid_argument("run_ensemble: n_paths >= 2 required");
    auto t0 = std::chrono::steady_clock::now();
    auto parts = map_chunks(n_paths, threads, n_outputs, job);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const size_t n_chunks = parts.size() / n_outputs;
    std::vector<Estimate> out;
    out.reserve(n_outputs);
    for (int k = 0; k < n_outputs; ++k) {
        std::vector<Moments> lane(n_chunks);
        for (size_t c = 0; c < n_chunks; ++c) lane[c] = parts[c * n_outputs + k];
        out.push_back(to_estimate(pairwise_tree(std::move(lane)), seed, elapsed));
    }
    return out;
}

ScanResult convergence_scan(std::span<const double> dts,
                            std::span<const Estimate> estimates) {
    if (dts.size() != estimates.size() || dts.size() < 3)
        throw std::invalid_argument("convergence_scan: need >= 3 matching levels");
    ScanResult res;
    for (size_t i = 0; i < dts.size(); ++i)
        res.rows.push_back({dts[i], estimates[i].mean, estimates[i].std_error});

    const double finest = estimates.back().mean;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    size_t n = 0;
    for (size_t i = 0; i + 1 < dts.size(); ++i) {
        double diff = std::fabs(estimates[i].mean - finest);
        if (diff <= 0.0) return res;  // degenerate: slope unavailable
        double x = std::log(dts[i]), y = std::log(diff);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return res;
    res.slope = (n * sxy - sx * sy) / denom;
    return res;
}

int default_threads() {
    if (const char* env = std::getenv("SFDE_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_paths(std::uint64_t n_paths, int threads,
                    const std::function<void(std::uint64_t)>& fn) {
    if (threads <= 1) {
        for (std::uint64_t i = 0; i < n_paths; ++i) fn(i);
        return;
    }
    std::atomic<std::uint64_t> cursor{0};
    std::mutex fail_mutex;
    Failure failure;
    auto worker = [&]() {
        for (;;) {
            std::uint64_t c = cursor.fetch_add(kChunk);
            if (c >= n_paths) return;
            std::uint64_t hi = std::min(n_paths, c + kChunk);
            for (std::uint64_t i = c; i < hi; ++i) {
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> g(fail_mutex);
                    if (!failure.set || i < failure.index) failure = {true, i, e.what()};
                    return;
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure.set) throw EnsembleError(failure.index, failure.what);
}

} // namespace sfde
