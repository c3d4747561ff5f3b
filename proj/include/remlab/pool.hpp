#ifndef REMLAB_POOL_HPP
#define REMLAB_POOL_HPP

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace remlab {

// Worker count: explicit request, REM_LAB_THREADS, then hardware.
inline unsigned resolve_threads(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("REM_LAB_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Replicas are partitioned into fixed-size chunks; workers pull chunks from a
// shared counter and each chunk's result lands at its own index. Results are
// then merged in chunk order by the caller, so the output is identical for
// any thread count.
constexpr std::size_t kReplicaChunk = 1024;

template <typename Result, typename Fn>
std::vector<Result> map_replica_chunks(std::size_t total, unsigned threads, Fn fn) {
    std::size_t chunks = (total + kReplicaChunk - 1) / kReplicaChunk;
    std::vector<Result> results(chunks);
    if (chunks == 0) return results;
    threads = std::min<std::size_t>(resolve_threads(threads), chunks);
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            std::size_t lo = c * kReplicaChunk;
            std::size_t hi = std::min(total, lo + kReplicaChunk);
            results[c] = fn(lo, hi);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        workers.emplace_back([&]() {
            while (true) {
                std::size_t c = next.fetch_add(1);
                if (c >= chunks) return;
                std::size_t lo = c * kReplicaChunk;
                std::size_t hi = std::min(total, lo + kReplicaChunk);
                results[c] = fn(lo, hi);
            }
        });
    }
    for (auto& t : workers) t.join();
    return results;
}

} // namespace remlab

#endif
