/*
 * Copyright 2026 The netwm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * \file netwm/parallel.hpp
 *
 * \brief Index-parallel loop. Each index writes its own output slot and
 *        draws from its own seeded stream, so results never depend on `jobs`.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace netwm {

inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn)
{
	const auto workers = static_cast<std::size_t>(std::max(1, jobs));
	if (workers == 1 || n < 2) {
		for (std::size_t i = 0; i < n; ++i)
			fn(i);
		return;
	}
	std::atomic<std::size_t> next{0};
	std::exception_ptr error;
	std::mutex error_mutex;
	std::vector<std::thread> pool;
	for (std::size_t w = 0; w < std::min(workers, n); ++w)
		pool.emplace_back([&] {
			for (std::size_t i = next++; i < n; i = next++) {
				try {
					fn(i);
				} catch (...) {
					std::lock_guard<std::mutex> lock(error_mutex);
					if (!error)
						error = std::current_exception();
				}
			}
		});
	for (auto &t : pool)
		t.join();
	if (error)
		std::rethrow_exception(error);
}

} // namespace netwm
