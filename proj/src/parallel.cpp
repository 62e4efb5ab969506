#include "specklepair/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace specklepair {

namespace {

int resolve_default_workers()
{
    if (const char* env = std::getenv("SPECKLEPAIR_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1)
            return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

int g_workers = 0;
std::mutex g_workers_mutex;

} // namespace

int worker_count()
{
    std::lock_guard<std::mutex> lock(g_workers_mutex);
    if (g_workers == 0)
        g_workers = resolve_default_workers();
    return g_workers;
}

void set_worker_count(int n)
{
    std::lock_guard<std::mutex> lock(g_workers_mutex);
    g_workers = n >= 1 ? n : 1;
}

void parallel_for_blocks(std::int64_t n_blocks,
                         const std::function<void(std::int64_t)>& body)
{
    if (n_blocks <= 0)
        return;
    const int workers = worker_count();
    if (workers <= 1 || n_blocks == 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b)
            body(b);
        return;
    }

    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run = [&]() {
        for (;;) {
            const std::int64_t b = next.fetch_add(1);
            if (b >= n_blocks)
                return;
            try {
                body(b);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                return;
            }
        }
    };

    const int n_threads = static_cast<int>(
        std::min<std::int64_t>(workers, n_blocks));
    std::vector<std::thread> pool;
    pool.reserve(n_threads - 1);
    for (int i = 0; i < n_threads - 1; ++i)
        pool.emplace_back(run);
    run();
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace specklepair
