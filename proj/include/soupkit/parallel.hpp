/* Copyright 2026 The soupkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "soupkit/io.hpp"

namespace soupkit {

/// Worker count for internal loops: SOUPKIT_THREADS caps it, 0 or unset
/// means hardware concurrency.
inline std::size_t thread_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SOUPKIT_THREADS"); env != nullptr) {
    if (auto parsed = parse_integer(env); parsed && *parsed > 0) {
      return static_cast<std::size_t>(*parsed);
    }
  }
  return hw;
}

/// Runs body(i) for i in [0, n). Every index is handled by exactly one
/// worker, so bodies writing disjoint outputs give identical results for any
/// thread count. The first exception thrown by a body is rethrown.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_per_thread = 16) {
  const std::size_t workers = std::min(thread_count(), n / std::max<std::size_t>(1, min_per_thread));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace soupkit
