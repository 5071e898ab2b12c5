#pragma once

#include <functional>
#include <span>
#include <vector>

namespace parlr {

using Task = std::function<void()>;

/// Executes a batch of independent tasks and returns once all have finished.
/// The first exception thrown by any task is rethrown after the join.
class TaskRunner {
public:
    virtual ~TaskRunner() = default;
    virtual void run_all(std::span<const Task> tasks) const = 0;
};

/// One thread per task beyond the first; the first task runs on the caller.
class ThreadedRunner final : public TaskRunner {
public:
    void run_all(std::span<const Task> tasks) const override;
};

/// Runs tasks one after another in submission order.
class SequentialRunner final : public TaskRunner {
public:
    void run_all(std::span<const Task> tasks) const override;
};

/// Starts every task concurrently but holds each one back from completing
/// until the tasks listed before it in `completion_order` have completed.
/// Used to check that results do not depend on completion order.
class OrderedRunner final : public TaskRunner {
public:
    explicit OrderedRunner(std::vector<std::size_t> completion_order);
    void run_all(std::span<const Task> tasks) const override;

private:
    std::vector<std::size_t> order_;
};

const TaskRunner& default_runner();

}  // namespace parlr
