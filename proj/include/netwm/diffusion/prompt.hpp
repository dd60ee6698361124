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
 * \file netwm/diffusion/prompt.hpp
 *
 * \brief Key-prompt memory: top-n cosine retrieval and the key pull term.
 */

#pragma once

#include <netwm/common.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace netwm::diffusion {

struct Retrieval
{
	/// By decreasing similarity, lower index first on ties.
	std::vector<int> ranked;
	/// The same set in ascending index order (prompt concatenation order).
	std::vector<int> indices;
};

inline double cosine(const Eigen::VectorXd &a, const Eigen::VectorXd &b)
{
	const double na = a.norm();
	const double nb = b.norm();
	if (na == 0.0 || nb == 0.0)
		return 0.0;
	return a.dot(b) / (na * nb);
}

/// \param keys key_dim x N, one key per column.
inline Retrieval prompt_retrieve(const Eigen::MatrixXd &keys, const Eigen::VectorXd &query, int n)
{
	const auto N = static_cast<int>(keys.cols());
	if (n < 1 || n > N)
		throw ConfigError("prompt.retrieve", "retrieval size " + std::to_string(n) + " must lie in [1, " +
		                                         std::to_string(N) + "]");
	if (query.size() != keys.rows())
		throw ShapeError("prompt query dimension differs from key dimension");
	std::vector<double> sim(static_cast<std::size_t>(N));
	for (int i = 0; i < N; ++i)
		sim[static_cast<std::size_t>(i)] = cosine(keys.col(i), query);
	std::vector<int> order(static_cast<std::size_t>(N));
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
		return sim[static_cast<std::size_t>(a)] > sim[static_cast<std::size_t>(b)];
	});
	Retrieval r;
	r.ranked.assign(order.begin(), order.begin() + n);
	r.indices = r.ranked;
	std::sort(r.indices.begin(), r.indices.end());
	return r;
}

/// Gradients of (1 - cos(q, k)) with respect to q and k.
inline void cosine_distance_grad(const Eigen::VectorXd &q, const Eigen::VectorXd &k, Eigen::VectorXd &dq,
                                 Eigen::VectorXd &dk)
{
	const double nq = q.norm();
	const double nk = k.norm();
	if (nq == 0.0 || nk == 0.0) {
		dq.setZero(q.size());
		dk.setZero(k.size());
		return;
	}
	const double c = q.dot(k) / (nq * nk);
	dq = -(k / (nq * nk) - c * q / (nq * nq));
	dk = -(q / (nq * nk) - c * k / (nk * nk));
}

/// Rescales every key column to unit length.
inline void normalize_keys(Eigen::MatrixXd &keys)
{
	for (Eigen::Index i = 0; i < keys.cols(); ++i) {
		const double n = keys.col(i).norm();
		if (n > 0.0)
			keys.col(i) /= n;
	}
}

} // namespace netwm::diffusion
