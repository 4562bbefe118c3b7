// Copyright 2026 The qerrac developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace qerrac {

/// Run `body(i)` for every i in [0, runs) on the requested number of worker
/// threads (0 = hardware concurrency). Scheduling is dynamic, so the body
/// must key all shared output by i for results to be schedule-independent.
inline void for_each_run(int threads, int runs, const std::function<void(int)>& body) {
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) {
        workers = 1;
    }
    if (workers > runs) {
        workers = runs;
    }
    if (workers == 1) {
        for (int i = 0; i < runs; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < runs; i = next.fetch_add(1)) {
                body(i);
            }
        });
    }
    for (std::thread& worker : pool) {
        worker.join();
    }
}

}  // namespace qerrac
