#include "parlr/task_runner.hpp"

#include "parlr/error.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>

namespace parlr {

namespace {

void rethrow_first(std::vector<std::exception_ptr>& errors) {
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace

void ThreadedRunner::run_all(std::span<const Task> tasks) const {
    if (tasks.empty()) {
        return;
    }
    std::vector<std::exception_ptr> errors(tasks.size());
    {
        std::vector<std::jthread> workers;
        workers.reserve(tasks.size() - 1);
        for (std::size_t i = 1; i < tasks.size(); ++i) {
            workers.emplace_back([&, i] {
                try {
                    tasks[i]();
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
        try {
            tasks[0]();
        } catch (...) {
            errors[0] = std::current_exception();
        }
    }
    rethrow_first(errors);
}

void SequentialRunner::run_all(std::span<const Task> tasks) const {
    for (const auto& task : tasks) {
        task();
    }
}

OrderedRunner::OrderedRunner(std::vector<std::size_t> completion_order) : order_(std::move(completion_order)) {
    std::vector<std::size_t> sorted = order_;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] != i) {
            throw InvalidInput("OrderedRunner: completion order must be a permutation");
        }
    }
}

void OrderedRunner::run_all(std::span<const Task> tasks) const {
    if (tasks.size() != order_.size()) {
        throw InvalidInput("OrderedRunner: task count does not match the completion order");
    }
    // rank[i] = position of task i in the completion order
    std::vector<std::size_t> rank(tasks.size());
    for (std::size_t pos = 0; pos < order_.size(); ++pos) {
        rank[order_[pos]] = pos;
    }

    std::mutex mutex;
    std::condition_variable cv;
    std::size_t completed = 0;
    std::vector<std::exception_ptr> errors(tasks.size());
    {
        std::vector<std::jthread> workers;
        workers.reserve(tasks.size());
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            workers.emplace_back([&, i] {
                try {
                    tasks[i]();
                } catch (...) {
                    errors[i] = std::current_exception();
                }
                std::unique_lock lock(mutex);
                cv.wait(lock, [&] { return completed == rank[i]; });
                ++completed;
                cv.notify_all();
            });
        }
    }
    rethrow_first(errors);
}

const TaskRunner& default_runner() {
    static const ThreadedRunner runner;
    return runner;
}

}  // namespace parlr
