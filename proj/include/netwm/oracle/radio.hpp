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
 * \file netwm/oracle/radio.hpp
 *
 * \brief Propagation, received power, cell power draw and user association.
 *
 * Propagation is free-space loss plus a caller-supplied log-normal shadowing
 * draw. Power follows the linear load model
 *
 *   P = p0 + delta_p * rho * p_max_out    (active)
 *   P = p_sleep                           (asleep)
 *
 * Both are stand-ins: nothing here is calibrated against a live network.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/oracle/scenario.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace netwm::oracle {

inline constexpr double min_distance_km = 0.01;

/// Free-space path loss in dB. Distances below 10 m are clamped.
inline double path_loss_db(double distance_km, double freq_mhz)
{
	if (!(freq_mhz > 0.0))
		throw DomainError("carrier frequency must be positive, got " + std::to_string(freq_mhz));
	if (std::isnan(distance_km))
		throw DomainError("distance is NaN");
	const double d = std::max(distance_km, min_distance_km);
	return 32.45 + 20.0 * std::log10(d) + 20.0 * std::log10(freq_mhz);
}

/// Received reference-signal power at `distance_km` from `cell`.
inline double rsrp_dbm(const CellConfig &cell, double distance_km, double shadowing_db)
{
	return cell.tx_power_dbm - path_loss_db(distance_km, cell.carrier_freq_mhz) + shadowing_db;
}

inline double rsrp_dbm(const CellConfig &cell, const Position &user, double shadowing_db)
{
	return rsrp_dbm(cell, distance_km(cell.position, user), shadowing_db);
}

/// Same as above but refuses sleeping cells.
inline double rsrp_dbm(const CellConfig &cell, const Position &user, double shadowing_db, bool asleep)
{
	if (asleep)
		throw CellAsleepError(cell.id);
	return rsrp_dbm(cell, user, shadowing_db);
}

inline double cell_power_watts(const CellConfig &cell, double load_fraction, bool asleep)
{
	if (!(load_fraction >= 0.0 && load_fraction <= 1.0))
		throw DomainError("load fraction must lie in [0, 1], got " + std::to_string(load_fraction));
	if (asleep)
		return cell.p_sleep_watts;
	return cell.p0_watts + cell.delta_p * load_fraction * cell.p_max_out_watts;
}

// ---------------------------------------------------------------------------

struct Association
{
	/// Serving cell per user, -1 when dropped.
	std::vector<int> serving;
	/// Unbiased RSRP from the serving cell; NaN for dropped users.
	std::vector<double> rsrp_dbm;
	int dropped = 0;
};

/**
 * Attaches each user to the active cell maximizing rsrp + bias (lowest id on
 * ties). A user whose unbiased RSRP from that cell is below `floor_dbm` is
 * dropped, as is everyone when all cells sleep.
 *
 * \param rsrp users x cells matrix of unbiased RSRP; entries of sleeping
 *        cells are never read.
 */
inline Association associate_users(const Eigen::MatrixXd &rsrp, const std::vector<bool> &sleep_mask,
                                    const std::vector<double> &bias_db, double floor_dbm)
{
	const auto n_users = rsrp.rows();
	const auto n_cells = rsrp.cols();
	if (static_cast<Eigen::Index>(sleep_mask.size()) != n_cells ||
	    static_cast<Eigen::Index>(bias_db.size()) != n_cells)
		throw ShapeError("association: sleep mask / bias length must equal the cell count");

	Association a;
	a.serving.assign(static_cast<std::size_t>(n_users), -1);
	a.rsrp_dbm.assign(static_cast<std::size_t>(n_users), std::numeric_limits<double>::quiet_NaN());
	for (Eigen::Index u = 0; u < n_users; ++u) {
		int best = -1;
		double best_score = -std::numeric_limits<double>::infinity();
		for (Eigen::Index c = 0; c < n_cells; ++c) {
			if (sleep_mask[static_cast<std::size_t>(c)])
				continue;
			const double score = rsrp(u, c) + bias_db[static_cast<std::size_t>(c)];
			if (best < 0 || score > best_score) {
				best = static_cast<int>(c);
				best_score = score;
			}
		}
		if (best < 0 || rsrp(u, best) < floor_dbm) {
			++a.dropped;
			continue;
		}
		a.serving[static_cast<std::size_t>(u)] = best;
		a.rsrp_dbm[static_cast<std::size_t>(u)] = rsrp(u, best);
	}
	return a;
}

/// Bias seen by each cell when sleeping cells hand their users to their
/// compensation neighbours: the largest bias requested by any sleeping
/// cell that lists it. Sleeping cells get zero.
inline std::vector<double> neighbor_bias(const ScenarioConfig &s, const std::vector<bool> &sleep_mask,
                                         const std::vector<double> &bias_of_sleeper)
{
	std::vector<double> bias(static_cast<std::size_t>(s.n_cells()), 0.0);
	for (const auto &cell : s.cells) {
		const auto k = static_cast<std::size_t>(cell.id);
		if (!sleep_mask[k])
			continue;
		for (int n : cell.neighbors) {
			const auto nk = static_cast<std::size_t>(n);
			if (!sleep_mask[nk])
				bias[nk] = std::max(bias[nk], bias_of_sleeper[k]);
		}
	}
	return bias;
}

} // namespace netwm::oracle
