#include "leea/parallel.hpp"

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/info.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <memory>
#include <mutex>

namespace leea {

namespace {

std::mutex g_control_mutex;
std::unique_ptr<tbb::global_control> g_control;
// An explicit arena, so the requested count is honoured even when it exceeds
// the number of cores.
std::unique_ptr<tbb::task_arena> g_arena;
std::size_t g_workers = 0;

}  // namespace

void set_worker_count(std::size_t workers) {
  std::lock_guard lock(g_control_mutex);
  g_arena.reset();
  g_control.reset();
  g_workers = workers;
  if (workers > 0) {
    g_control = std::make_unique<tbb::global_control>(
        tbb::global_control::max_allowed_parallelism, workers);
    g_arena = std::make_unique<tbb::task_arena>(static_cast<int>(workers));
  }
}

std::size_t worker_count() {
  std::lock_guard lock(g_control_mutex);
  if (g_workers > 0) return g_workers;
  return static_cast<std::size_t>(std::max(1, tbb::info::default_concurrency()));
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t grain) {
  if (count == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  if (count <= grain || worker_count() == 1) {
    body(0, count);
    return;
  }
  auto run = [&] {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, count, grain),
                      [&](const tbb::blocked_range<std::size_t>& r) { body(r.begin(), r.end()); });
  };
  tbb::task_arena* arena = nullptr;
  {
    std::lock_guard lock(g_control_mutex);
    arena = g_arena.get();
  }
  if (arena != nullptr) {
    arena->execute(run);
  } else {
    run();
  }
}

}  // namespace leea
