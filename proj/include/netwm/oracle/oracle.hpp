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
 * \file netwm/oracle/oracle.hpp
 *
 * \brief Seeded synthetic ground truth for traffic, users, RSRP and energy.
 *
 * The oracle is immutable after construction. Every random quantity is drawn
 * from a generator keyed on (scenario seed, stream, query coordinates), so
 * queries can be issued from several threads and in any order.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/oracle/network.hpp>
#include <netwm/oracle/radio.hpp>
#include <netwm/oracle/scenario.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <random>
#include <vector>

namespace netwm::oracle {

class Oracle
{
public:
	explicit Oracle(ScenarioConfig config) : m_config(std::move(config))
	{
		validate(m_config);
		m_peak_scale.assign(static_cast<std::size_t>(m_config.n_cells()), 1.0);
		if (m_config.counterfactual_peak_fraction) {
			for (const auto &cell : m_config.cells) {
				double peak = 0.0;
				for (int h = 0; h < 24; h += m_config.traffic_step_hours)
					peak = std::max(peak, deterministic_shape(cell, h));
				if (peak > 0.0)
					m_peak_scale[static_cast<std::size_t>(cell.id)] = *m_config.counterfactual_peak_fraction / peak;
			}
		}
	}

	const ScenarioConfig &config() const noexcept { return m_config; }
	int n_cells() const noexcept { return m_config.n_cells(); }
	int n_grids() const noexcept { return m_config.n_grids(); }

	const CellConfig &cell(int id) const
	{
		if (id < 0 || id >= n_cells())
			throw LookupError("unknown cell id " + std::to_string(id));
		return m_config.cells[static_cast<std::size_t>(id)];
	}

	const GridCell &grid(int index) const
	{
		if (index < 0 || index >= n_grids())
			throw LookupError("grid index " + std::to_string(index) + " out of range");
		return m_config.grid[static_cast<std::size_t>(index)];
	}

	/// Noise-free load fraction before clipping, including counterfactual scaling.
	double expected_load_fraction(int cell_id, int t_hours) const
	{
		const auto &c = cell(cell_id);
		return m_peak_scale[static_cast<std::size_t>(cell_id)] * deterministic_shape(c, t_hours % 24);
	}

	double traffic_at(int cell_id, int t_hours) const
	{
		const auto &c = cell(cell_id);
		check_time(t_hours);
		double x = expected_load_fraction(cell_id, t_hours);
		if (m_config.traffic_noise_sigma > 0.0) {
			auto rng = make_rng({m_config.seed, tag(Stream::traffic_noise), static_cast<std::uint64_t>(cell_id),
			                     static_cast<std::uint64_t>(t_hours)});
			std::normal_distribution<double> z(0.0, 1.0);
			x *= 1.0 + m_config.traffic_noise_sigma * z(rng);
		}
		return c.capacity_mbps * std::clamp(x, 0.0, 1.0);
	}

	/// Poisson rate of users_at().
	double user_rate(int grid_index, int t_hours) const
	{
		const auto &g = grid(grid_index);
		return g.base_users * g.poi_weight * user_activity(g.poi_profile, t_hours % 24);
	}

	int users_at(int grid_index, int t_hours) const
	{
		const double rate = user_rate(grid_index, t_hours);
		check_time(t_hours);
		if (rate <= 0.0)
			return 0;
		auto rng = make_rng({m_config.seed, tag(Stream::users), static_cast<std::uint64_t>(grid_index),
		                     static_cast<std::uint64_t>(t_hours)});
		std::poisson_distribution<int> pois(rate);
		return pois(rng);
	}

	/// Position of user `j` of grid square `grid_index` at `t_hours`, uniform in the square.
	Position user_position(int grid_index, int t_hours, int j) const
	{
		const auto &g = grid(grid_index);
		auto rng = make_rng({m_config.seed, tag(Stream::user_position), static_cast<std::uint64_t>(grid_index),
		                     static_cast<std::uint64_t>(t_hours), static_cast<std::uint64_t>(j)});
		std::uniform_real_distribution<double> u(-0.5, 0.5);
		const double dx = u(rng) * m_config.grid_spacing_km;
		const double dy = u(rng) * m_config.grid_spacing_km;
		return {g.position.x_km + dx, g.position.y_km + dy};
	}

	/// Log-normal shadowing between user j of a grid square and a cell.
	double shadowing_db(int grid_index, int t_hours, int j, int cell_id) const
	{
		if (m_config.shadowing_sigma_db == 0.0)
			return 0.0;
		auto rng = make_rng({m_config.seed, tag(Stream::shadowing), static_cast<std::uint64_t>(grid_index),
		                     static_cast<std::uint64_t>(t_hours), static_cast<std::uint64_t>(j),
		                     static_cast<std::uint64_t>(cell_id)});
		std::normal_distribution<double> z(0.0, m_config.shadowing_sigma_db);
		return z(rng);
	}

	struct UserSnapshot
	{
		std::vector<int> per_grid_users;
		std::vector<int> user_grid;
		std::vector<Position> positions;
		/// users x cells, unbiased, every cell treated as active.
		Eigen::MatrixXd rsrp;
	};

	UserSnapshot users_snapshot(int t_hours) const
	{
		check_time(t_hours);
		UserSnapshot snap;
		snap.per_grid_users.resize(static_cast<std::size_t>(n_grids()));
		for (int g = 0; g < n_grids(); ++g) {
			const int n = users_at(g, t_hours);
			snap.per_grid_users[static_cast<std::size_t>(g)] = n;
			for (int j = 0; j < n; ++j) {
				snap.user_grid.push_back(g);
				snap.positions.push_back(user_position(g, t_hours, j));
			}
		}
		snap.rsrp.resize(static_cast<Eigen::Index>(snap.user_grid.size()), n_cells());
		std::vector<int> index_in_grid(static_cast<std::size_t>(n_grids()), 0);
		for (std::size_t u = 0; u < snap.user_grid.size(); ++u) {
			const int g = snap.user_grid[u];
			const int j = index_in_grid[static_cast<std::size_t>(g)]++;
			for (const auto &c : m_config.cells)
				snap.rsrp(static_cast<Eigen::Index>(u), c.id) =
				    rsrp_dbm(c, snap.positions[u], shadowing_db(g, t_hours, j, c.id));
		}
		return snap;
	}

	std::vector<double> native_loads(int t_hours) const
	{
		std::vector<double> loads(static_cast<std::size_t>(n_cells()));
		for (int c = 0; c < n_cells(); ++c)
			loads[static_cast<std::size_t>(c)] = traffic_at(c, t_hours);
		return loads;
	}

	/**
	 * One decision step at `t_hours` lasting traffic_step_hours.
	 * \param bias_db per-cell selection bias (already resolved from the
	 *        sleeping cells' requests, see neighbor_bias()).
	 */
	NetworkState step_network(int t_hours, const std::vector<bool> &sleep_mask,
	                          const std::vector<double> &bias_db) const
	{
		if (static_cast<int>(sleep_mask.size()) != n_cells() || static_cast<int>(bias_db.size()) != n_cells())
			throw ShapeError("step_network: sleep mask and bias need one entry per cell");
		auto snap = users_snapshot(t_hours);
		return settle_step(m_config, t_hours, m_config.traffic_step_hours, native_loads(t_hours),
		                   std::move(snap.per_grid_users), std::move(snap.user_grid), snap.rsrp, sleep_mask,
		                   bias_db);
	}

	/// One day of traffic for a cell at the traffic granularity.
	std::vector<double> daily_traffic(int cell_id, int day) const
	{
		std::vector<double> out;
		for (int h = 0; h < 24; h += m_config.traffic_step_hours)
			out.push_back(traffic_at(cell_id, day * 24 + h));
		return out;
	}

	std::vector<double> daily_users(int grid_index, int day) const
	{
		std::vector<double> out;
		for (int h = 0; h < 24; h += m_config.user_step_hours)
			out.push_back(users_at(grid_index, day * 24 + h));
		return out;
	}

	/// Users present at a grid square at night are a fraction of the peak.
	static double user_activity(PoiProfile p, double hour_of_day) { return 0.02 + 0.98 * diurnal(p, hour_of_day); }

private:
	static double deterministic_shape(const CellConfig &c, int hour_of_day)
	{
		return c.traffic_base + c.traffic_amp * diurnal(c.poi_profile, hour_of_day);
	}

	void check_time(int t_hours) const
	{
		if (t_hours < 0 || t_hours >= m_config.horizon_hours)
			throw DomainError("time " + std::to_string(t_hours) + " h outside horizon [0, " +
			                  std::to_string(m_config.horizon_hours) + ")");
	}

	ScenarioConfig m_config;
	std::vector<double> m_peak_scale;
};

inline Oracle build_scenario(ScenarioConfig config) { return Oracle(std::move(config)); }

} // namespace netwm::oracle
