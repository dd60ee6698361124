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
 * \file netwm/agent/action.hpp
 *
 * \brief Joint sleep / offload action.
 *
 * Each cell picks one of 1 + |bias levels| choices: stay active, or sleep
 * and ask its compensation neighbours to add the chosen selection bias.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/oracle/radio.hpp>
#include <netwm/oracle/scenario.hpp>

#include <string>
#include <vector>

namespace netwm::agent {

inline const std::vector<double> &default_bias_levels()
{
	static const std::vector<double> levels = {0.0, 3.0, 6.0};
	return levels;
}

struct Action
{
	std::vector<bool> sleep;
	/// Bias requested by each sleeping cell; ignored for active cells.
	std::vector<double> bias_db;

	int n_asleep() const
	{
		int n = 0;
		for (bool s : sleep)
			n += s ? 1 : 0;
		return n;
	}
};

inline Action all_active(int n_cells)
{
	return {std::vector<bool>(static_cast<std::size_t>(n_cells), false),
	        std::vector<double>(static_cast<std::size_t>(n_cells), 0.0)};
}

/// choice 0 = active, choice i >= 1 = sleep with levels[i - 1].
inline Action action_from_choices(const std::vector<int> &choices, const std::vector<double> &levels)
{
	Action a;
	for (int ch : choices) {
		if (ch < 0 || ch > static_cast<int>(levels.size()))
			throw DomainError("action choice " + std::to_string(ch) + " out of range");
		a.sleep.push_back(ch > 0);
		a.bias_db.push_back(ch > 0 ? levels[static_cast<std::size_t>(ch - 1)] : 0.0);
	}
	return a;
}

/// Per-cell selection bias seen during association.
inline std::vector<double> association_bias(const oracle::ScenarioConfig &s, const Action &a)
{
	if (a.sleep.size() != static_cast<std::size_t>(s.n_cells()) || a.bias_db.size() != a.sleep.size())
		throw ShapeError("action must hold one entry per cell");
	return oracle::neighbor_bias(s, a.sleep, a.bias_db);
}

} // namespace netwm::agent
