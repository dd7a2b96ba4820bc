#ifndef QMCBASKET_SRC_REPLICATION_RUNNER_HPP
#define QMCBASKET_SRC_REPLICATION_RUNNER_HPP

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace qmcbasket::detail {

// Kahan compensated accumulator; added in a fixed order so results are
// independent of chunking and thread count.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

// Evaluates fn(0..reps-1) on up to `threads` workers.  Results land in a
// dense replication-indexed vector, so any later reduction is performed in
// replication order and cannot depend on scheduling.
template <typename Result>
std::vector<Result> run_replications(int reps, int threads, const std::function<Result(int)>& fn) {
    std::vector<Result> out(reps);
    const int workers = std::max(1, std::min(threads, reps));
    if (workers == 1) {
        for (int r = 0; r < reps; ++r) out[r] = fn(r);
        return out;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (int r; (r = next.fetch_add(1)) < reps;) out[r] = fn(r);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace qmcbasket::detail

#endif
