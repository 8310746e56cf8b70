#ifndef SIDESTEP_PARALLEL_HPP
#define SIDESTEP_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sidestep {

/// Fixed partition of [0, count) used by every Monte Carlo loop. Because the
/// chunk boundaries never depend on the thread count, neither do results.
inline constexpr std::size_t default_chunk_size = 2048;

/// Computes one partial result per chunk (possibly on several threads) and
/// folds them with a pairwise tree in chunk order.
template <class Result, class ChunkFn, class MergeFn>
Result chunked_reduce(std::size_t count, unsigned threads, ChunkFn&& chunk_fn, MergeFn&& merge,
                      std::size_t chunk_size = default_chunk_size)
{
    const std::size_t chunks = count == 0 ? 0 : (count + chunk_size - 1) / chunk_size;
    std::vector<Result> parts(chunks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t c = next++; c < chunks; c = next++) {
            try {
                const std::size_t begin = c * chunk_size;
                parts[c] = chunk_fn(begin, std::min(count, begin + chunk_size));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);
    if (parts.empty())
        return Result{};

    for (std::size_t width = 1; width < parts.size(); width *= 2)
        for (std::size_t i = 0; i + width < parts.size(); i += 2 * width)
            parts[i] = merge(std::move(parts[i]), std::move(parts[i + width]));
    return std::move(parts.front());
}

} // namespace sidestep

#endif // SIDESTEP_PARALLEL_HPP
