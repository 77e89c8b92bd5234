#include "cbpt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cbpt {

namespace {

std::atomic<std::size_t>& limit_storage() {
    static std::atomic<std::size_t> limit = [] {
        const char* env = std::getenv("CBPT_THREADS");
        if (env == nullptr || *env == '\0') return std::size_t{0};
        try {
            return static_cast<std::size_t>(std::stoul(env));
        } catch (const std::exception&) {
            return std::size_t{0};
        }
    }();
    return limit;
}

thread_local bool inside_parallel = false;

}  // namespace

std::size_t thread_limit() { return limit_storage().load(); }

void set_thread_limit(std::size_t n) { limit_storage().store(n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    std::size_t workers = thread_limit();
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    if (inside_parallel || workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        inside_parallel = true;
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
        inside_parallel = false;
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace cbpt
