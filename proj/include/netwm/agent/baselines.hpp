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
 * \file netwm/agent/baselines.hpp
 *
 * \brief Rule-based sleep controllers used as reference schemes.
 */

#pragma once

#include <netwm/agent/action.hpp>
#include <netwm/common.hpp>
#include <netwm/oracle/network.hpp>
#include <netwm/oracle/scenario.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace netwm::agent {

inline constexpr double baseline_bias_db = 3.0;

/// Sleep every cell whose current load fraction is below `tau`.
inline Action baseline_empirical(const std::vector<double> &load_fraction, double tau, double bias_db = baseline_bias_db)
{
	Action a;
	for (double l : load_fraction) {
		a.sleep.push_back(l < tau);
		a.bias_db.push_back(bias_db);
	}
	return a;
}

/// Linear-interpolated percentile (p in [0, 100]) of a non-empty sample.
inline double percentile(std::vector<double> v, double p)
{
	if (v.empty())
		throw DomainError("percentile of an empty sample");
	if (!(p >= 0.0 && p <= 100.0))
		throw DomainError("percentile must lie in [0, 100]");
	std::sort(v.begin(), v.end());
	const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
	const auto lo = static_cast<std::size_t>(std::floor(pos));
	const auto hi = std::min(lo + 1, v.size() - 1);
	const double f = pos - static_cast<double>(lo);
	return v[lo] + f * (v[hi] - v[lo]);
}

/// Per-cell thresholds: the p-th percentile of each cell's load history.
inline std::vector<double> custom_thresholds(const std::vector<std::vector<double>> &history, double p)
{
	std::vector<double> th;
	for (const auto &h : history)
		th.push_back(percentile(h, p));
	return th;
}

inline Action baseline_custom(const std::vector<double> &load_fraction, const std::vector<double> &thresholds,
                              double bias_db = baseline_bias_db)
{
	if (thresholds.size() != load_fraction.size())
		throw ShapeError("one threshold per cell required");
	Action a;
	for (std::size_t c = 0; c < load_fraction.size(); ++c) {
		a.sleep.push_back(load_fraction[c] < thresholds[c]);
		a.bias_db.push_back(bias_db);
	}
	return a;
}

struct GreedyConfig
{
	double margin_db = 3.0;
	double bias_db = baseline_bias_db;
};

/// Evaluates a candidate action against the current network without committing it.
using ActionEvaluator = std::function<oracle::NetworkState(const Action &)>;

/**
 * Visits cells in ascending order of current load (lowest id on ties),
 * tentatively putting each to sleep. The sleep is reverted when the mean RSRP
 * of served users drops below floor + margin, or when any compensation
 * neighbour of that cell is overloaded. A step where users exist but none is
 * served counts as below every finite floor.
 */
inline Action baseline_greedy(const oracle::ScenarioConfig &s, const std::vector<double> &load_fraction,
                              const ActionEvaluator &evaluate, const GreedyConfig &cfg = {})
{
	const auto n = static_cast<std::size_t>(s.n_cells());
	if (load_fraction.size() != n)
		throw ShapeError("one load value per cell required");
	std::vector<int> order(n);
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
		return load_fraction[static_cast<std::size_t>(a)] < load_fraction[static_cast<std::size_t>(b)];
	});
	const double limit = s.rsrp_floor_dbm + cfg.margin_db;
	Action a = all_active(s.n_cells());
	std::fill(a.bias_db.begin(), a.bias_db.end(), cfg.bias_db);
	for (int c : order) {
		const auto k = static_cast<std::size_t>(c);
		a.sleep[k] = true;
		const auto st = evaluate(a);
		double rsrp = st.rsrp_avg_dbm;
		if (st.total_users == 0)
			rsrp = std::numeric_limits<double>::infinity();
		else if (std::isnan(rsrp))
			rsrp = -std::numeric_limits<double>::infinity();
		bool overload = false;
		for (int nb : s.cells[k].neighbors)
			overload = overload || st.overload_mbps[static_cast<std::size_t>(nb)] > 0.0;
		if (rsrp < limit || overload)
			a.sleep[k] = false;
	}
	return a;
}

} // namespace netwm::agent
