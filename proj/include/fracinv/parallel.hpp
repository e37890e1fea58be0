#ifndef FRACINV_PARALLEL_HPP
#define FRACINV_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fracinv
{
    /// Worker count from FRACINV_THREADS (default 1).
    inline unsigned thread_count()
    {
        const char* env = std::getenv("FRACINV_THREADS");
        if (env == nullptr || *env == '\0')
            return 1;
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || v < 1)
            return 1;
        return static_cast<unsigned>(std::min<long>(v, 256));
    }

    /// Runs body(i) for i in [0, count). Each index is handled by exactly one
    /// worker, so results written per index do not depend on the thread count.
    template <class Body>
    void parallel_for(std::size_t count, Body&& body, unsigned threads = thread_count())
    {
        if (threads <= 1 || count <= 1)
        {
            for (std::size_t i = 0; i < count; ++i)
                body(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;)
            {
                const std::size_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try
                {
                    body(i);
                }
                catch (...)
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        const unsigned n = static_cast<unsigned>(std::min<std::size_t>(threads, count));
        for (unsigned t = 0; t < n; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
        if (error)
            std::rethrow_exception(error);
    }
} // namespace fracinv

#endif
