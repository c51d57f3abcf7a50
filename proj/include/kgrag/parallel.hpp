#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace kgrag {

/// Apply `fn` to every element, with at most `limit` worker threads.
/// Results land in input order and the first failing index (if any)
/// rethrows after all workers join, so the outcome is independent of
/// scheduling.
template <typename In, typename F>
auto parallel_map(const std::vector<In>& items, std::size_t limit, F&& fn)
    -> std::vector<decltype(fn(items[0]))> {
    using Out = decltype(fn(items[0]));
    std::vector<Out> results(items.size());
    if (items.empty()) return results;

    std::size_t workers = std::min<std::size_t>(limit == 0 ? 1 : limit, items.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i]);
        return results;
    }

    std::vector<std::exception_ptr> errors(items.size());
    std::atomic<std::size_t> next{0};
    auto run = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            try {
                results[i] = fn(items[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

}  // namespace kgrag
