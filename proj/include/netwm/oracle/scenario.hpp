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
 * \file netwm/oracle/scenario.hpp
 *
 * \brief Scenario description: cells, the user grid and simulation granularity.
 *
 * A scenario is plain data. It is validated once by `validate()` (called by
 * the oracle constructor) and can be read from / written to JSON.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/jsonutil.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace netwm::oracle {

enum class PoiProfile { residential, office, mixed, event };

inline constexpr std::array<PoiProfile, 4> all_poi_profiles = {
	PoiProfile::residential, PoiProfile::office, PoiProfile::mixed, PoiProfile::event};

inline std::string to_string(PoiProfile p)
{
	switch (p) {
	case PoiProfile::residential: return "residential";
	case PoiProfile::office: return "office";
	case PoiProfile::mixed: return "mixed";
	case PoiProfile::event: return "event";
	}
	return "?";
}

inline PoiProfile poi_from_string(const std::string &s, const std::string &field)
{
	for (auto p : all_poi_profiles)
		if (to_string(p) == s)
			return p;
	throw ConfigError(field, "unknown poi_profile '" + s + "'");
}

struct Position
{
	double x_km = 0.0;
	double y_km = 0.0;
};

inline double distance_km(const Position &a, const Position &b)
{
	return std::hypot(a.x_km - b.x_km, a.y_km - b.y_km);
}

struct CellConfig
{
	int id = 0;
	Position position;
	double tx_power_dbm = 15.0;
	double carrier_freq_mhz = 1800.0;
	double capacity_mbps = 150.0;
	PoiProfile poi_profile = PoiProfile::mixed;
	std::vector<int> neighbors;
	double p0_watts = 130.0;
	double delta_p = 4.7;
	double p_max_out_watts = 20.0;
	double p_sleep_watts = 75.0;
	/// Traffic floor and diurnal amplitude as fractions of capacity.
	double traffic_base = 0.1;
	double traffic_amp = 0.5;
};

struct GridCell
{
	Position position;
	double poi_weight = 1.0;
	int base_users = 0;
	PoiProfile poi_profile = PoiProfile::mixed;
};

struct ScenarioConfig
{
	std::uint64_t seed = 1;
	std::vector<CellConfig> cells;
	int grid_dim = 0;
	double grid_spacing_km = 1.0;
	/// grid_dim * grid_dim entries, row-major.
	std::vector<GridCell> grid;
	int horizon_hours = 24 * 365;
	int traffic_step_hours = 2;
	int user_step_hours = 1;
	std::optional<double> counterfactual_peak_fraction;
	double rsrp_floor_dbm = -101.0;
	double shadowing_sigma_db = 4.0;
	double traffic_noise_sigma = 0.05;

	int n_cells() const noexcept { return static_cast<int>(cells.size()); }
	int n_grids() const noexcept { return static_cast<int>(grid.size()); }
	int steps_per_day() const noexcept { return 24 / traffic_step_hours; }
};

// ---------------------------------------------------------------------------
// Diurnal templates: two circular Gaussian bumps per profile, scaled so the
// hourly maximum is one.

namespace detail {

struct Bump
{
	double center_h;
	double width_h;
	double weight;
};

inline std::array<Bump, 2> bumps(PoiProfile p)
{
	switch (p) {
	case PoiProfile::residential: return {{{20.0, 3.0, 1.0}, {8.0, 2.0, 0.45}}};
	case PoiProfile::office: return {{{11.0, 2.0, 1.0}, {15.0, 2.0, 0.9}}};
	case PoiProfile::mixed: return {{{13.0, 3.0, 0.8}, {19.0, 3.0, 1.0}}};
	case PoiProfile::event: return {{{21.0, 1.5, 1.0}, {16.0, 2.0, 0.5}}};
	}
	return {};
}

inline double raw_diurnal(PoiProfile p, double hour)
{
	double v = 0.0;
	for (const auto &b : bumps(p)) {
		double d = std::fmod(std::abs(hour - b.center_h), 24.0);
		d = std::min(d, 24.0 - d);
		v += b.weight * std::exp(-0.5 * d * d / (b.width_h * b.width_h));
	}
	return v;
}

inline double diurnal_peak(PoiProfile p)
{
	double m = 0.0;
	for (int h = 0; h < 24; ++h)
		m = std::max(m, raw_diurnal(p, h));
	return m;
}

} // namespace detail

/// Normalized daily activity shape in [0, 1] (1 at the busiest whole hour).
inline double diurnal(PoiProfile p, double hour_of_day)
{
	return detail::raw_diurnal(p, hour_of_day) / detail::diurnal_peak(p);
}

// ---------------------------------------------------------------------------

inline void validate(const ScenarioConfig &c)
{
	if (c.n_cells() < 2)
		throw ConfigError("n_cells", "at least 2 cells required, got " + std::to_string(c.n_cells()));
	if (c.grid_dim <= 0)
		throw ConfigError("grid_dim", "must be positive");
	if (c.grid_spacing_km <= 0.0)
		throw ConfigError("grid_spacing_km", "must be positive");
	if (c.n_grids() != c.grid_dim * c.grid_dim)
		throw ConfigError("grid", "expected grid_dim^2 = " + std::to_string(c.grid_dim * c.grid_dim) +
		                              " entries, got " + std::to_string(c.n_grids()));
	if (c.traffic_step_hours <= 0 || 24 % c.traffic_step_hours != 0)
		throw ConfigError("traffic_step_hours", "must be a positive divisor of 24");
	if (c.user_step_hours <= 0)
		throw ConfigError("user_step_hours", "must be positive");
	if (c.horizon_hours <= 0 || c.horizon_hours % c.traffic_step_hours != 0)
		throw ConfigError("horizon_hours", "must be a positive multiple of traffic_step_hours");
	if (c.counterfactual_peak_fraction) {
		const double f = *c.counterfactual_peak_fraction;
		if (!(f > 0.0 && f <= 1.0))
			throw ConfigError("counterfactual_peak_fraction", "must lie in (0, 1]");
	}
	if (!std::isfinite(c.rsrp_floor_dbm))
		throw ConfigError("rsrp_floor_dbm", "must be finite");
	if (!(c.shadowing_sigma_db >= 0.0))
		throw ConfigError("shadowing_sigma_db", "must be >= 0");
	if (!(c.traffic_noise_sigma >= 0.0))
		throw ConfigError("traffic_noise_sigma", "must be >= 0");

	std::set<int> ids;
	for (std::size_t i = 0; i < c.cells.size(); ++i) {
		const auto &cell = c.cells[i];
		if (cell.id != static_cast<int>(i))
			throw ConfigError("cells[" + std::to_string(i) + "].id", "cell ids must be 0..n_cells-1 in order");
		ids.insert(cell.id);
	}
	for (const auto &cell : c.cells) {
		const std::string p = "cells[" + std::to_string(cell.id) + "].";
		if (!(cell.tx_power_dbm > 0.0))
			throw ConfigError(p + "tx_power_dbm", "must be positive");
		if (!(cell.carrier_freq_mhz > 0.0))
			throw ConfigError(p + "carrier_freq_mhz", "must be positive");
		if (!(cell.capacity_mbps > 0.0))
			throw ConfigError(p + "capacity_mbps", "must be positive");
		if (!(cell.p_sleep_watts < cell.p0_watts))
			throw ConfigError(p + "p_sleep_watts", "must be below p0_watts");
		if (cell.delta_p < 0.0 || cell.p_max_out_watts < 0.0)
			throw ConfigError(p + "delta_p", "power slope terms must be >= 0");
		if (cell.traffic_base < 0.0 || cell.traffic_amp < 0.0)
			throw ConfigError(p + "traffic_base", "traffic shape terms must be >= 0");
		if (cell.neighbors.empty())
			throw ConfigError(p + "neighbors", "at least one compensation neighbor required");
		for (int n : cell.neighbors) {
			if (!ids.count(n))
				throw ConfigError(p + "neighbors", "unknown neighbor id " + std::to_string(n));
			if (n == cell.id)
				throw ConfigError(p + "neighbors", "cell lists itself as neighbor");
		}
	}
	for (std::size_t g = 0; g < c.grid.size(); ++g) {
		const auto &gc = c.grid[g];
		if (!std::isfinite(gc.poi_weight) || gc.poi_weight < 0.0)
			throw ConfigError("grid[" + std::to_string(g) + "].poi_weight", "must be finite and >= 0");
		if (gc.base_users < 0)
			throw ConfigError("grid[" + std::to_string(g) + "].base_users", "must be >= 0");
	}
}

// ---------------------------------------------------------------------------
// Default layout

/// Seven-site hexagonal layout: one central site and a ring of six at
/// `isd_km`, office and residential sites alternating around the ring.
/// Each cell's compensation set is its geometric neighbours. The user grid
/// covers the ring with 6 x 6 squares; each square inherits the profile of
/// its nearest cell, users concentrate away from the sites and the central
/// area is sparsely populated.
inline ScenarioConfig default_hex_scenario(std::uint64_t seed = 1)
{
	ScenarioConfig s;
	s.seed = seed;
	const double isd_km = 3.0;
	const std::array<PoiProfile, 7> profiles = {PoiProfile::mixed,  PoiProfile::office,
	                                            PoiProfile::residential, PoiProfile::office,
	                                            PoiProfile::residential, PoiProfile::office,
	                                            PoiProfile::residential};

	for (int i = 0; i < 7; ++i) {
		CellConfig c;
		c.id = i;
		if (i > 0) {
			const double a = std::numbers::pi / 3.0 * (i - 1);
			c.position = {isd_km * std::cos(a), isd_km * std::sin(a)};
		}
		c.tx_power_dbm = 12.0;
		c.carrier_freq_mhz = 1800.0;
		c.capacity_mbps = i == 0 ? 200.0 : 150.0;
		c.poi_profile = profiles[static_cast<std::size_t>(i)];
		c.traffic_base = 0.08;
		c.traffic_amp = 0.30;
		s.cells.push_back(c);
	}
	// centre neighbours the whole ring, ring cells neighbour centre and the two adjacent ring cells
	for (int i = 1; i < 7; ++i)
		s.cells[0].neighbors.push_back(i);
	for (int i = 1; i < 7; ++i) {
		const int prev = (i + 4) % 6 + 1;
		const int next = i % 6 + 1;
		s.cells[static_cast<std::size_t>(i)].neighbors = {0, prev, next};
		std::sort(s.cells[static_cast<std::size_t>(i)].neighbors.begin(),
		          s.cells[static_cast<std::size_t>(i)].neighbors.end());
	}

	s.grid_dim = 6;
	s.grid_spacing_km = 1.2;
	const double origin = -0.5 * s.grid_spacing_km * (s.grid_dim - 1);
	for (int r = 0; r < s.grid_dim; ++r) {
		for (int col = 0; col < s.grid_dim; ++col) {
			GridCell g;
			g.position = {origin + col * s.grid_spacing_km, origin + r * s.grid_spacing_km};
			int best = 0;
			for (const auto &c : s.cells)
				if (distance_km(g.position, c.position) <
				    distance_km(g.position, s.cells[static_cast<std::size_t>(best)].position))
					best = c.id;
			const double d = distance_km(g.position, s.cells[static_cast<std::size_t>(best)].position);
			const double edge = std::min(d / (0.5 * isd_km), 1.2);
			g.poi_profile = s.cells[static_cast<std::size_t>(best)].poi_profile;
			g.poi_weight = (best == 0 ? 0.3 : 1.0) * (0.1 + edge * edge);
			g.base_users = 10;
			s.grid.push_back(g);
		}
	}
	s.horizon_hours = 24 * 400;
	s.rsrp_floor_dbm = -101.0;
	return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {
using jsonutil::get_to;
using jsonutil::reject_unknown;
} // namespace detail

inline nlohmann::json to_json(const ScenarioConfig &s)
{
	nlohmann::json j;
	j["seed"] = s.seed;
	j["n_cells"] = s.n_cells();
	j["grid_dim"] = s.grid_dim;
	j["grid_spacing_km"] = s.grid_spacing_km;
	j["horizon_hours"] = s.horizon_hours;
	j["traffic_step_hours"] = s.traffic_step_hours;
	j["user_step_hours"] = s.user_step_hours;
	j["counterfactual_peak_fraction"] =
	    s.counterfactual_peak_fraction ? nlohmann::json(*s.counterfactual_peak_fraction) : nlohmann::json();
	j["rsrp_floor_dbm"] = s.rsrp_floor_dbm;
	j["shadowing_sigma_db"] = s.shadowing_sigma_db;
	j["traffic_noise_sigma"] = s.traffic_noise_sigma;
	auto &cells = j["cells"] = nlohmann::json::array();
	for (const auto &c : s.cells) {
		cells.push_back({{"id", c.id},
		                 {"x_km", c.position.x_km},
		                 {"y_km", c.position.y_km},
		                 {"tx_power_dbm", c.tx_power_dbm},
		                 {"carrier_freq_mhz", c.carrier_freq_mhz},
		                 {"capacity_mbps", c.capacity_mbps},
		                 {"poi_profile", to_string(c.poi_profile)},
		                 {"neighbors", c.neighbors},
		                 {"p0_watts", c.p0_watts},
		                 {"delta_p", c.delta_p},
		                 {"p_max_out_watts", c.p_max_out_watts},
		                 {"p_sleep_watts", c.p_sleep_watts},
		                 {"traffic_base", c.traffic_base},
		                 {"traffic_amp", c.traffic_amp}});
	}
	auto &grid = j["grid"] = nlohmann::json::array();
	for (const auto &g : s.grid) {
		grid.push_back({{"x_km", g.position.x_km},
		                {"y_km", g.position.y_km},
		                {"poi_weight", g.poi_weight},
		                {"base_users", g.base_users},
		                {"poi_profile", to_string(g.poi_profile)}});
	}
	return j;
}

/// Strict parse: unknown keys and type mismatches raise ConfigError naming the key.
/// The result is validated.
inline ScenarioConfig scenario_from_json(const nlohmann::json &j)
{
	using detail::get_to;
	if (!j.is_object())
		throw ConfigError("<root>", "scenario must be a JSON object");
	detail::reject_unknown(j,
	                       {"seed", "n_cells", "grid_dim", "grid_spacing_km", "horizon_hours",
	                        "traffic_step_hours", "user_step_hours", "counterfactual_peak_fraction",
	                        "rsrp_floor_dbm", "shadowing_sigma_db", "traffic_noise_sigma", "cells", "grid"},
	                       "");
	ScenarioConfig s;
	s.cells.clear();
	s.grid.clear();
	get_to(j, "seed", s.seed, "");
	get_to(j, "grid_dim", s.grid_dim, "");
	get_to(j, "grid_spacing_km", s.grid_spacing_km, "");
	get_to(j, "horizon_hours", s.horizon_hours, "");
	get_to(j, "traffic_step_hours", s.traffic_step_hours, "");
	get_to(j, "user_step_hours", s.user_step_hours, "");
	get_to(j, "rsrp_floor_dbm", s.rsrp_floor_dbm, "");
	get_to(j, "shadowing_sigma_db", s.shadowing_sigma_db, "");
	get_to(j, "traffic_noise_sigma", s.traffic_noise_sigma, "");
	if (j.contains("counterfactual_peak_fraction") && !j["counterfactual_peak_fraction"].is_null()) {
		double f = 0.0;
		get_to(j, "counterfactual_peak_fraction", f, "");
		s.counterfactual_peak_fraction = f;
	}
	if (!j.contains("cells") || !j["cells"].is_array())
		throw ConfigError("cells", "required array");
	for (std::size_t i = 0; i < j["cells"].size(); ++i) {
		const auto &jc = j["cells"][i];
		const std::string p = "cells[" + std::to_string(i) + "].";
		if (!jc.is_object())
			throw ConfigError(p, "must be an object");
		detail::reject_unknown(jc,
		                       {"id", "x_km", "y_km", "tx_power_dbm", "carrier_freq_mhz", "capacity_mbps",
		                        "poi_profile", "neighbors", "p0_watts", "delta_p", "p_max_out_watts",
		                        "p_sleep_watts", "traffic_base", "traffic_amp"},
		                       p);
		CellConfig c;
		c.id = static_cast<int>(i);
		get_to(jc, "id", c.id, p);
		get_to(jc, "x_km", c.position.x_km, p);
		get_to(jc, "y_km", c.position.y_km, p);
		get_to(jc, "tx_power_dbm", c.tx_power_dbm, p);
		get_to(jc, "carrier_freq_mhz", c.carrier_freq_mhz, p);
		get_to(jc, "capacity_mbps", c.capacity_mbps, p);
		std::string prof = to_string(c.poi_profile);
		get_to(jc, "poi_profile", prof, p);
		c.poi_profile = poi_from_string(prof, p + "poi_profile");
		get_to(jc, "neighbors", c.neighbors, p);
		get_to(jc, "p0_watts", c.p0_watts, p);
		get_to(jc, "delta_p", c.delta_p, p);
		get_to(jc, "p_max_out_watts", c.p_max_out_watts, p);
		get_to(jc, "p_sleep_watts", c.p_sleep_watts, p);
		get_to(jc, "traffic_base", c.traffic_base, p);
		get_to(jc, "traffic_amp", c.traffic_amp, p);
		s.cells.push_back(c);
	}
	if (j.contains("n_cells")) {
		int n = 0;
		get_to(j, "n_cells", n, "");
		if (n != s.n_cells())
			throw ConfigError("n_cells", "does not match the number of cells listed");
	}
	if (j.contains("grid")) {
		if (!j["grid"].is_array())
			throw ConfigError("grid", "must be an array");
		for (std::size_t i = 0; i < j["grid"].size(); ++i) {
			const auto &jg = j["grid"][i];
			const std::string p = "grid[" + std::to_string(i) + "].";
			detail::reject_unknown(jg, {"x_km", "y_km", "poi_weight", "base_users", "poi_profile"}, p);
			GridCell g;
			get_to(jg, "x_km", g.position.x_km, p);
			get_to(jg, "y_km", g.position.y_km, p);
			get_to(jg, "poi_weight", g.poi_weight, p);
			get_to(jg, "base_users", g.base_users, p);
			std::string prof = to_string(g.poi_profile);
			get_to(jg, "poi_profile", prof, p);
			g.poi_profile = poi_from_string(prof, p + "poi_profile");
			s.grid.push_back(g);
		}
	}
	validate(s);
	return s;
}

inline ScenarioConfig load_scenario(const std::string &path)
{
	std::ifstream in(path);
	if (!in)
		throw ConfigError("scenario", "cannot open '" + path + "'");
	nlohmann::json j;
	try {
		in >> j;
	} catch (const nlohmann::json::parse_error &e) {
		throw ConfigError("scenario", std::string("malformed JSON: ") + e.what());
	}
	return scenario_from_json(j);
}

inline void save_scenario(const ScenarioConfig &s, const std::string &path)
{
	std::ofstream out(path);
	if (!out)
		throw ConfigError("scenario", "cannot write '" + path + "'");
	out << to_json(s).dump(2) << '\n';
}

} // namespace netwm::oracle
