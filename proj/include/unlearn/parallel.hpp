#pragma once

#include <algorithm>
#include <functional>
#include <future>
#include <vector>

namespace unlearn {

// Runs tasks with at most `max_parallel` in flight. Tasks handle their own
// errors; every task has finished when this returns.
inline void run_bounded(std::vector<std::function<void()>>& tasks, int max_parallel) {
  const std::size_t width = static_cast<std::size_t>(std::max(1, max_parallel));
  if (tasks.size() == 1 || width == 1) {
    for (auto& t : tasks) t();
    return;
  }
  for (std::size_t start = 0; start < tasks.size(); start += width) {
    std::vector<std::future<void>> wave;
    const std::size_t end = std::min(tasks.size(), start + width);
    for (std::size_t i = start; i < end; ++i) {
      wave.push_back(std::async(std::launch::async, tasks[i]));
    }
    for (auto& f : wave) f.get();
  }
}

}  // namespace unlearn
