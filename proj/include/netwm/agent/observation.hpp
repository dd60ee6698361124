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
 * \file netwm/agent/observation.hpp
 *
 * \brief Fixed-width observation vector fed to the policy.
 *
 * Layout, for C cells:
 *
 *   [0, C)     current load fraction
 *   [C, 2C)    predicted load fraction for the next decision step
 *   [2C, 3C)   predicted users in the cell's home squares / nominal user scale
 *   [3C, 4C)   mean current load fraction of the compensation neighbours
 *   4C, 4C+1   sin / cos of the hour of day
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/oracle/scenario.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace netwm::agent {

struct ObservationInputs
{
	int hour = 0;
	std::vector<double> load_fraction;
	std::vector<double> predicted_load_fraction;
	/// Already divided by the cell's nominal user scale.
	std::vector<double> predicted_users;
};

inline int observation_dim(int n_cells) { return 4 * n_cells + 2; }

inline Eigen::VectorXd build_observation(const oracle::ScenarioConfig &s, const ObservationInputs &in)
{
	const auto n = static_cast<std::size_t>(s.n_cells());
	if (in.load_fraction.size() != n || in.predicted_load_fraction.size() != n || in.predicted_users.size() != n)
		throw ShapeError("observation inputs must hold one value per cell");
	const int C = s.n_cells();
	Eigen::VectorXd o(observation_dim(C));
	for (int c = 0; c < C; ++c) {
		const auto k = static_cast<std::size_t>(c);
		o(c) = in.load_fraction[k];
		o(C + c) = in.predicted_load_fraction[k];
		o(2 * C + c) = in.predicted_users[k];
		double sum = 0.0;
		for (int nb : s.cells[k].neighbors)
			sum += in.load_fraction[static_cast<std::size_t>(nb)];
		o(3 * C + c) = sum / static_cast<double>(s.cells[k].neighbors.size());
	}
	const double a = 2.0 * std::numbers::pi * (in.hour % 24) / 24.0;
	o(4 * C) = std::sin(a);
	o(4 * C + 1) = std::cos(a);
	return o;
}

} // namespace netwm::agent
