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
 * \file netwm/oracle/network.hpp
 *
 * \brief Settling one decision step: re-association, load re-routing, power.
 *
 * Shared by the ground-truth oracle and the world-model environment so the
 * two only differ in where traffic, users and RSRP come from.
 */

#pragma once

#include <netwm/oracle/radio.hpp>
#include <netwm/oracle/scenario.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace netwm::oracle {

struct NetworkState
{
	int t_hours = 0;
	double step_hours = 0.0;
	/// Load each cell would carry with every cell active.
	std::vector<double> native_load_mbps;
	/// Load actually served after re-routing, capped at capacity.
	std::vector<double> per_cell_load_mbps;
	std::vector<double> overload_mbps;
	/// Demand of users whose origin cell slept and who could not be re-attached.
	double unserved_mbps = 0.0;
	std::vector<int> per_grid_users;
	std::vector<bool> sleep_mask;
	/// Grid index of every user.
	std::vector<int> user_grid;
	/// Serving cell per user, -1 when dropped.
	std::vector<int> association;
	std::vector<double> per_user_rsrp_dbm;
	std::vector<int> served_users;
	int total_users = 0;
	int dropped_users = 0;
	std::vector<double> per_cell_power_watts;
	double energy_wh = 0.0;
	/// Mean RSRP over served users; NaN when nobody is served.
	double rsrp_avg_dbm = std::numeric_limits<double>::quiet_NaN();

	int n_cells() const noexcept { return static_cast<int>(native_load_mbps.size()); }
};

/// Energy of one step with every cell active at its native load.
inline double always_on_energy_wh(const ScenarioConfig &s, const std::vector<double> &native_load_mbps,
                                  double step_hours)
{
	double e = 0.0;
	for (const auto &cell : s.cells) {
		const double rho = std::min(native_load_mbps[static_cast<std::size_t>(cell.id)] / cell.capacity_mbps, 1.0);
		e += cell_power_watts(cell, rho, false) * step_hours;
	}
	return e;
}

/**
 * Settles a step given per-cell native load, per-user RSRP and the action.
 *
 * Each user carries an equal share of its origin cell's native load, where
 * the origin is its all-active unbiased association. After re-association
 * the share follows the user to its new serving cell; demand of dropped
 * users is lost. A cell without native users keeps its own load while active.
 */
inline NetworkState settle_step(const ScenarioConfig &s, int t_hours, double step_hours,
                                std::vector<double> native_load_mbps, std::vector<int> per_grid_users,
                                std::vector<int> user_grid, const Eigen::MatrixXd &rsrp,
                                const std::vector<bool> &sleep_mask, const std::vector<double> &bias_db)
{
	const auto n_cells = static_cast<std::size_t>(s.n_cells());
	if (native_load_mbps.size() != n_cells || sleep_mask.size() != n_cells || bias_db.size() != n_cells)
		throw ShapeError("settle_step: per-cell vectors must have n_cells entries");
	if (rsrp.rows() != static_cast<Eigen::Index>(user_grid.size()) ||
	    rsrp.cols() != static_cast<Eigen::Index>(n_cells))
		throw ShapeError("settle_step: rsrp matrix must be users x cells");

	NetworkState st;
	st.t_hours = t_hours;
	st.step_hours = step_hours;
	st.sleep_mask = sleep_mask;
	st.per_grid_users = std::move(per_grid_users);
	st.user_grid = std::move(user_grid);
	st.total_users = static_cast<int>(st.user_grid.size());

	const std::vector<bool> all_active(n_cells, false);
	const std::vector<double> no_bias(n_cells, 0.0);
	const Association native = associate_users(rsrp, all_active, no_bias, s.rsrp_floor_dbm);
	std::vector<int> native_users(n_cells, 0);
	for (int c : native.serving)
		if (c >= 0)
			++native_users[static_cast<std::size_t>(c)];

	const Association actual = associate_users(rsrp, sleep_mask, bias_db, s.rsrp_floor_dbm);
	st.association = actual.serving;
	st.per_user_rsrp_dbm = actual.rsrp_dbm;
	st.dropped_users = actual.dropped;

	std::vector<double> served(n_cells, 0.0);
	for (std::size_t c = 0; c < n_cells; ++c)
		if (native_users[c] == 0 && !sleep_mask[c])
			served[c] += native_load_mbps[c];
		else if (native_users[c] == 0)
			st.unserved_mbps += native_load_mbps[c];

	for (std::size_t u = 0; u < native.serving.size(); ++u) {
		const int origin = native.serving[u];
		if (origin < 0)
			continue;
		const double demand = native_load_mbps[static_cast<std::size_t>(origin)] /
		                      native_users[static_cast<std::size_t>(origin)];
		const int to = actual.serving[u];
		if (to >= 0)
			served[static_cast<std::size_t>(to)] += demand;
		else
			st.unserved_mbps += demand;
	}

	st.served_users.assign(n_cells, 0);
	for (int c : actual.serving)
		if (c >= 0)
			++st.served_users[static_cast<std::size_t>(c)];

	st.per_cell_load_mbps.assign(n_cells, 0.0);
	st.overload_mbps.assign(n_cells, 0.0);
	st.per_cell_power_watts.assign(n_cells, 0.0);
	for (const auto &cell : s.cells) {
		const auto c = static_cast<std::size_t>(cell.id);
		const double cap = cell.capacity_mbps;
		const double load = sleep_mask[c] ? 0.0 : served[c];
		st.per_cell_load_mbps[c] = std::min(load, cap);
		st.overload_mbps[c] = std::max(load - cap, 0.0);
		st.per_cell_power_watts[c] = cell_power_watts(cell, st.per_cell_load_mbps[c] / cap, sleep_mask[c]);
		st.energy_wh += st.per_cell_power_watts[c] * step_hours;
	}
	st.native_load_mbps = std::move(native_load_mbps);

	double sum = 0.0;
	int n = 0;
	for (double r : st.per_user_rsrp_dbm)
		if (!std::isnan(r)) {
			sum += r;
			++n;
		}
	if (n > 0)
		st.rsrp_avg_dbm = sum / n;
	return st;
}

} // namespace netwm::oracle
