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
 * \file netwm/harness/environment.hpp
 *
 * \brief Day contexts from the oracle or from the world model, and settling
 *        an action against one step of such a context.
 *
 * Both environments reduce a decision step to the same inputs (native cell
 * loads, users per square, a users x cells RSRP matrix) and share
 * oracle::settle_step, so they differ only in where those inputs come from.
 * Actions never influence later steps.
 */

#pragma once

#include <netwm/agent/action.hpp>
#include <netwm/agent/observation.hpp>
#include <netwm/agent/reward.hpp>
#include <netwm/data/dataset.hpp>
#include <netwm/diffusion/worldmodel.hpp>
#include <netwm/oracle/oracle.hpp>
#include <netwm/parallel.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace netwm::harness {

using nn::Matrix;

/// Inputs of one decision step.
struct StepContext
{
	int t_hours = 0;
	std::vector<double> native_load_mbps;
	std::vector<int> per_grid_users;
	std::vector<int> user_grid;
	Eigen::MatrixXd rsrp;
};

struct DayContext
{
	int day = 0;
	/// "oracle" or "worldmodel".
	std::string source;
	std::vector<StepContext> steps;
};

struct StepResult
{
	oracle::NetworkState state;
	double reference_energy_wh = 0.0;
	double reward = 0.0;
};

inline int steps_per_day(const oracle::ScenarioConfig &s) { return 24 / s.traffic_step_hours; }

inline StepResult settle(const oracle::ScenarioConfig &s, const StepContext &ctx, const agent::Action &a,
                         const agent::RewardWeights &w)
{
	StepResult r;
	r.state = oracle::settle_step(s, ctx.t_hours, s.traffic_step_hours, ctx.native_load_mbps, ctx.per_grid_users,
	                              ctx.user_grid, ctx.rsrp, a.sleep, agent::association_bias(s, a));
	r.reference_energy_wh = oracle::always_on_energy_wh(s, ctx.native_load_mbps, s.traffic_step_hours);
	r.reward = agent::compute_reward(agent::outcome_of(r.state, r.reference_energy_wh), w);
	return r;
}

// ---------------------------------------------------------------------------

inline DayContext oracle_day(const oracle::Oracle &o, int day)
{
	const auto &s = o.config();
	DayContext d;
	d.day = day;
	d.source = "oracle";
	for (int k = 0; k < steps_per_day(s); ++k) {
		const int t = day * 24 + k * s.traffic_step_hours;
		auto snap = o.users_snapshot(t);
		d.steps.push_back({t, o.native_loads(t), std::move(snap.per_grid_users), std::move(snap.user_grid),
		                   std::move(snap.rsrp)});
	}
	return d;
}

/// Per-cell load fractions over the `n_days` days before `day` (operator history).
inline std::vector<std::vector<double>> load_history(const oracle::Oracle &o, int day, int n_days)
{
	const auto &s = o.config();
	std::vector<std::vector<double>> h(static_cast<std::size_t>(o.n_cells()));
	for (int d = std::max(0, day - n_days); d < day; ++d)
		for (int k = 0; k < steps_per_day(s); ++k) {
			const int t = d * 24 + k * s.traffic_step_hours;
			for (const auto &c : s.cells)
				h[static_cast<std::size_t>(c.id)].push_back(o.traffic_at(c.id, t) / c.capacity_mbps);
		}
	return h;
}

// ---------------------------------------------------------------------------

/// Samples `conds` (raw) in fixed chunks, chunk i drawing from seed_of({key, i}).
/// With `history` non-empty the last `horizon` positions are generated and
/// the rest are revealed (short-term mode); otherwise everything is generated.
inline Matrix sample_chunked(const diffusion::Head &head, const std::vector<std::vector<double>> &conds, double w,
                             std::uint64_t key, int jobs, const Matrix &history = {}, int horizon = 0)
{
	constexpr std::size_t chunk = 64;
	const int L = head.length();
	const std::size_t n = conds.size();
	Matrix out(L, static_cast<Eigen::Index>(n));
	const std::size_t n_chunks = (n + chunk - 1) / chunk;
	parallel_for(n_chunks, jobs, [&](std::size_t i) {
		const std::size_t lo = i * chunk;
		const std::size_t hi = std::min(n, lo + chunk);
		const auto B = static_cast<Eigen::Index>(hi - lo);
		std::vector<std::vector<double>> c(conds.begin() + static_cast<std::ptrdiff_t>(lo),
		                                   conds.begin() + static_cast<std::ptrdiff_t>(hi));
		auto rng = make_rng({key, static_cast<std::uint64_t>(i)});
		Matrix mask = Matrix::Ones(L, B);
		Matrix hist = Matrix::Zero(L, B);
		if (history.size() > 0) {
			mask.topRows(L - horizon).setZero();
			hist = history.middleCols(static_cast<Eigen::Index>(lo), B);
		}
		out.middleCols(static_cast<Eigen::Index>(lo), B) = head.sample(c, mask, hist, w, rng);
	});
	return out;
}

/// Nominal user scale per cell: sum of base_users * poi_weight over its home squares.
inline std::vector<double> user_scale(const oracle::ScenarioConfig &s)
{
	std::vector<double> scale(static_cast<std::size_t>(s.n_cells()), 0.0);
	const auto home = data::home_cells(s);
	for (std::size_t g = 0; g < s.grid.size(); ++g)
		scale[static_cast<std::size_t>(home[g])] += s.grid[g].base_users * s.grid[g].poi_weight;
	for (auto &v : scale)
		v = std::max(v, 1.0);
	return scale;
}

/// World-model mean profiles used as the "predicted" part of observations.
/// Conditions only depend on the day through the day of week, so at most
/// seven profiles exist per scenario.
class Forecaster
{
public:
	struct Profile
	{
		/// [cell][step] mean generated traffic, Mbps.
		std::vector<std::vector<double>> traffic;
		/// [grid][hour] mean generated users.
		std::vector<std::vector<double>> users;
	};

	Forecaster(const diffusion::WorldModel &wm, const oracle::Oracle &scenario, int samples, std::uint64_t seed,
	           int jobs = 1)
		: m_scenario(&scenario), m_home(data::home_cells(scenario.config())), m_scale(user_scale(scenario.config())),
		  m_samples(samples), m_seed(seed)
	{
		if (samples < 1)
			throw ConfigError("forecast.samples", "must be >= 1");
		const auto &users = wm.head(data::SampleKind::users);
		if (!users.trained())
			throw ModelError("forecasting needs a trained users head");
		const int G = scenario.n_grids();
		std::vector<std::vector<double>> uc;
		for (int dow = 0; dow < 7; ++dow)
			for (int g = 0; g < G; ++g)
				for (int i = 0; i < samples; ++i)
					uc.push_back(data::encode_condition(data::users_condition_inputs(scenario, g, dow)));
		const Matrix ux = sample_chunked(users, uc, wm.guidance_w(), seed_of({seed, tag(Stream::forecast), 1}), jobs);
		m_profiles.resize(7);
		Eigen::Index ui = 0;
		for (auto &p : m_profiles)
			for (int g = 0; g < G; ++g) {
				const Eigen::VectorXd m = ux.middleCols(ui, samples).rowwise().mean();
				ui += samples;
				p.users.emplace_back(m.data(), m.data() + m.size());
			}
		forecast_traffic(wm.head(data::SampleKind::traffic), wm.guidance_w(), jobs);
	}

	/// Copy whose traffic profiles come from `traffic` under `scenario`;
	/// user profiles are kept (the scenario must share the base layout).
	Forecaster with_traffic(const diffusion::Head &traffic, double w, const oracle::Oracle &scenario, int jobs = 1) const
	{
		if (scenario.n_cells() != m_scenario->n_cells() || scenario.n_grids() != m_scenario->n_grids())
			throw ConfigError("scenario", "layout differs from the forecaster's");
		Forecaster f = *this;
		f.m_scenario = &scenario;
		f.forecast_traffic(traffic, w, jobs);
		return f;
	}

	const Profile &profile(int day) const { return m_profiles[static_cast<std::size_t>(((day % 7) + 7) % 7)]; }

	/// Observation inputs for step k of `ctx`; predictions refer to step k+1
	/// (wrapping to the first step of the day).
	agent::ObservationInputs inputs(const DayContext &ctx, int k) const
	{
		const auto &s = m_scenario->config();
		const auto &p = profile(ctx.day);
		const int K = steps_per_day(s);
		const int next = (k + 1) % K;
		const int next_hour = next * s.traffic_step_hours;
		agent::ObservationInputs in;
		in.hour = k * s.traffic_step_hours;
		std::vector<double> users(static_cast<std::size_t>(s.n_cells()), 0.0);
		for (std::size_t g = 0; g < m_home.size(); ++g)
			users[static_cast<std::size_t>(m_home[g])] +=
			    std::max(0.0, p.users[g][static_cast<std::size_t>(next_hour / s.user_step_hours)]);
		for (const auto &c : s.cells) {
			const auto i = static_cast<std::size_t>(c.id);
			in.load_fraction.push_back(ctx.steps[static_cast<std::size_t>(k)].native_load_mbps[i] / c.capacity_mbps);
			in.predicted_load_fraction.push_back(
			    std::clamp(p.traffic[i][static_cast<std::size_t>(next)] / c.capacity_mbps, 0.0, 1.0));
			in.predicted_users.push_back(users[i] / m_scale[i]);
		}
		return in;
	}

	Eigen::VectorXd observe(const DayContext &ctx, int k) const
	{
		return agent::build_observation(m_scenario->config(), inputs(ctx, k));
	}

private:
	void forecast_traffic(const diffusion::Head &traffic, double w, int jobs)
	{
		if (!traffic.trained())
			throw ModelError("forecasting needs a trained traffic head");
		const int C = m_scenario->n_cells();
		std::vector<std::vector<double>> tc;
		for (int dow = 0; dow < 7; ++dow)
			for (int c = 0; c < C; ++c)
				for (int i = 0; i < m_samples; ++i)
					tc.push_back(data::encode_condition(data::traffic_condition_inputs(*m_scenario, c, dow)));
		const Matrix tx = sample_chunked(traffic, tc, w, seed_of({m_seed, tag(Stream::forecast), 0}), jobs);
		Eigen::Index ti = 0;
		for (auto &p : m_profiles) {
			p.traffic.clear();
			for (int c = 0; c < C; ++c) {
				const Eigen::VectorXd m = tx.middleCols(ti, m_samples).rowwise().mean();
				ti += m_samples;
				p.traffic.emplace_back(m.data(), m.data() + m.size());
			}
		}
	}

	const oracle::Oracle *m_scenario;
	std::vector<int> m_home;
	std::vector<double> m_scale;
	int m_samples = 1;
	std::uint64_t m_seed = 0;
	std::vector<Profile> m_profiles;
};

// ---------------------------------------------------------------------------

struct WorldModelEnvConfig
{
	/// Generated days kept in the episode pool.
	int pool_days = 32;
	/// Day index of the first pool day (sets its day-of-week condition).
	int first_pool_day = 0;
	/// Sampled positions per square in the RSRP table.
	int rsrp_slots = 16;

	void validate() const
	{
		if (pool_days < 1)
			throw ConfigError("environment.pool_days", "must be >= 1");
		if (rsrp_slots < 1)
			throw ConfigError("environment.rsrp_slots", "must be >= 1");
	}
};

/**
 * Environment whose traffic, users and RSRP all come from the world model.
 *
 * Traffic and user series for whole days are generated once into a pool
 * (long-term mode, conditioned on the scenario's context). RSRP comes from
 * a table: for each square, `rsrp_slots` positions are drawn and the RSRP
 * head is sampled for every (position, cell) link from the
 * (tx power, carrier, distance) condition. An episode picks a pool day and
 * gives every generated user a random table slot of its square.
 */
class WorldModelEnv
{
public:
	WorldModelEnv(const diffusion::WorldModel &wm, const oracle::Oracle &scenario, const WorldModelEnvConfig &cfg,
	              std::uint64_t seed, int jobs = 1)
		: m_scenario(&scenario), m_cfg(cfg), m_seed(seed)
	{
		cfg.validate();
		wm.require_complete();
		const auto &s = scenario.config();
		const int G = scenario.n_grids();

		std::vector<std::vector<double>> uc, rc;
		for (int i = 0; i < cfg.pool_days; ++i)
			for (int g = 0; g < G; ++g)
				uc.push_back(data::encode_condition(data::users_condition_inputs(scenario, g, cfg.first_pool_day + i)));
		for (int g = 0; g < G; ++g)
			for (int j = 0; j < cfg.rsrp_slots; ++j) {
				auto rng = make_rng({seed, tag(Stream::rsrp_table), static_cast<std::uint64_t>(g),
				                     static_cast<std::uint64_t>(j)});
				std::uniform_real_distribution<double> u(-0.5, 0.5);
				const auto &gp = scenario.grid(g).position;
				const oracle::Position p{gp.x_km + u(rng) * s.grid_spacing_km, gp.y_km + u(rng) * s.grid_spacing_km};
				for (const auto &c : s.cells)
					rc.push_back(data::encode_condition(data::rsrp_condition_inputs(
					    c.tx_power_dbm, c.carrier_freq_mhz, oracle::distance_km(p, c.position))));
			}

		const double w = wm.guidance_w();
		generate_traffic(wm.head(data::SampleKind::traffic), w, jobs);
		m_users = sample_chunked(wm.head(data::SampleKind::users), uc, w, seed_of({seed, tag(Stream::pool), 1}), jobs);
		m_rsrp = sample_chunked(wm.head(data::SampleKind::rsrp), rc, w, seed_of({seed, tag(Stream::pool), 2}), jobs);
	}

	/// Copy whose traffic pool is regenerated by `traffic` under `scenario`;
	/// users and the RSRP table are kept.
	WorldModelEnv with_traffic(const diffusion::Head &traffic, double w, const oracle::Oracle &scenario,
	                           int jobs = 1) const
	{
		if (scenario.n_cells() != m_scenario->n_cells() || scenario.n_grids() != m_scenario->n_grids())
			throw ConfigError("scenario", "layout differs from the environment's");
		WorldModelEnv e = *this;
		e.m_scenario = &scenario;
		e.generate_traffic(traffic, w, jobs);
		return e;
	}

	const oracle::ScenarioConfig &scenario() const { return m_scenario->config(); }
	int pool_size() const noexcept { return m_cfg.pool_days; }

	/// Generated traffic of pool day i, [cell][step], clipped to [0, capacity].
	std::vector<std::vector<double>> pool_traffic(int i) const
	{
		const auto &s = scenario();
		std::vector<std::vector<double>> out;
		for (const auto &c : s.cells) {
			const auto col = static_cast<Eigen::Index>(i * s.n_cells() + c.id);
			std::vector<double> v;
			for (Eigen::Index l = 0; l < m_traffic.rows(); ++l)
				v.push_back(std::clamp(m_traffic(l, col), 0.0, c.capacity_mbps));
			out.push_back(std::move(v));
		}
		return out;
	}

	/// Day context for episode `episode`, drawn from the pool with its own stream.
	DayContext day(std::uint64_t episode_key) const
	{
		const auto &s = scenario();
		const int C = s.n_cells();
		const int G = s.n_grids();
		auto rng = make_rng({m_seed, tag(Stream::episode), episode_key});
		const int i = std::uniform_int_distribution<int>(0, m_cfg.pool_days - 1)(rng);
		std::uniform_int_distribution<int> slot(0, m_cfg.rsrp_slots - 1);
		DayContext d;
		d.day = m_cfg.first_pool_day + i;
		d.source = "worldmodel";
		const auto traffic = pool_traffic(i);
		for (int k = 0; k < steps_per_day(s); ++k) {
			StepContext st;
			st.t_hours = d.day * 24 + k * s.traffic_step_hours;
			for (int c = 0; c < C; ++c)
				st.native_load_mbps.push_back(traffic[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)]);
			const auto hour = static_cast<Eigen::Index>(k * s.traffic_step_hours / s.user_step_hours);
			std::vector<int> rows;
			for (int g = 0; g < G; ++g) {
				const double v = m_users(hour, static_cast<Eigen::Index>(i * G + g));
				const int n = static_cast<int>(std::lround(std::max(0.0, v)));
				st.per_grid_users.push_back(n);
				for (int j = 0; j < n; ++j) {
					st.user_grid.push_back(g);
					rows.push_back((g * m_cfg.rsrp_slots + slot(rng)) * C);
				}
			}
			st.rsrp.resize(static_cast<Eigen::Index>(rows.size()), C);
			for (std::size_t u = 0; u < rows.size(); ++u)
				for (int c = 0; c < C; ++c)
					st.rsrp(static_cast<Eigen::Index>(u), c) = m_rsrp(0, rows[u] + c);
			d.steps.push_back(std::move(st));
		}
		return d;
	}

private:
	void generate_traffic(const diffusion::Head &traffic, double w, int jobs)
	{
		std::vector<std::vector<double>> tc;
		for (int i = 0; i < m_cfg.pool_days; ++i)
			for (int c = 0; c < m_scenario->n_cells(); ++c)
				tc.push_back(data::encode_condition(
				    data::traffic_condition_inputs(*m_scenario, c, m_cfg.first_pool_day + i)));
		m_traffic = sample_chunked(traffic, tc, w, seed_of({m_seed, tag(Stream::pool), 0}), jobs);
	}

	const oracle::Oracle *m_scenario;
	WorldModelEnvConfig m_cfg;
	std::uint64_t m_seed;
	Matrix m_traffic;
	Matrix m_users;
	Matrix m_rsrp;
};

} // namespace netwm::harness
