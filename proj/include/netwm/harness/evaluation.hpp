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
 * \file netwm/harness/evaluation.hpp
 *
 * \brief Running learned and rule-based schemes over whole days.
 */

#pragma once

#include <netwm/agent/baselines.hpp>
#include <netwm/harness/environment.hpp>
#include <netwm/harness/training.hpp>
#include <netwm/jsonutil.hpp>

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace netwm::harness {

enum class Scheme { agent, always_on, all_sleep, empirical, custom, greedy };

inline std::string to_string(Scheme s)
{
	switch (s) {
	case Scheme::agent: return "agent";
	case Scheme::always_on: return "always_on";
	case Scheme::all_sleep: return "all_sleep";
	case Scheme::empirical: return "empirical";
	case Scheme::custom: return "custom";
	case Scheme::greedy: return "greedy";
	}
	return "?";
}

inline Scheme scheme_from_string(const std::string &s)
{
	for (auto k : {Scheme::agent, Scheme::always_on, Scheme::all_sleep, Scheme::empirical, Scheme::custom, Scheme::greedy})
		if (to_string(k) == s)
			return k;
	throw ConfigError("scheme", "unknown scheme '" + s + "'");
}

struct BaselineConfig
{
	double tau = 0.2;
	double percentile = 25.0;
	int history_days = 7;
	agent::GreedyConfig greedy;
};

struct EpisodeResult
{
	std::string scheme;
	/// "worldmodel" or "oracle".
	std::string environment;
	std::string scenario;
	std::uint64_t seed = 0;
	int day = 0;
	std::vector<double> energy_wh;
	std::vector<double> reference_energy_wh;
	/// NaN where nobody was served.
	std::vector<double> rsrp_avg_dbm;
	std::vector<double> drop_rate;
	std::vector<double> reward;
	std::vector<int> asleep;

	double utility() const
	{
		double s = 0.0;
		for (double r : reward)
			s += r;
		return reward.empty() ? 0.0 : s / static_cast<double>(reward.size());
	}
};

/// Chooses an action for step k of a day.
using Controller = std::function<agent::Action(const DayContext &, int)>;

inline EpisodeResult run_episode(const oracle::ScenarioConfig &s, const DayContext &ctx, const Controller &control,
                                 const agent::RewardWeights &w)
{
	EpisodeResult r;
	r.day = ctx.day;
	r.environment = ctx.source;
	for (int k = 0; k < static_cast<int>(ctx.steps.size()); ++k) {
		const auto a = control(ctx, k);
		const auto st = settle(s, ctx.steps[static_cast<std::size_t>(k)], a, w);
		r.energy_wh.push_back(st.state.energy_wh);
		r.reference_energy_wh.push_back(st.reference_energy_wh);
		r.rsrp_avg_dbm.push_back(st.state.rsrp_avg_dbm);
		r.drop_rate.push_back(agent::drop_rate(agent::outcome_of(st.state, st.reference_energy_wh)));
		r.reward.push_back(st.reward);
		r.asleep.push_back(a.n_asleep());
	}
	return r;
}

/// Controller for a scheme evaluated on the oracle. `agent` and `forecast`
/// are only needed for Scheme::agent.
inline Controller oracle_controller(Scheme scheme, const oracle::Oracle &o, const BaselineConfig &b,
                                    const agent::RewardWeights &w, const TrainedAgent *trained = nullptr,
                                    const Forecaster *forecast = nullptr)
{
	const auto &s = o.config();
	auto loads = [&s](const DayContext &ctx, int k) {
		std::vector<double> f;
		for (const auto &c : s.cells)
			f.push_back(ctx.steps[static_cast<std::size_t>(k)].native_load_mbps[static_cast<std::size_t>(c.id)] /
			            c.capacity_mbps);
		return f;
	};
	switch (scheme) {
	case Scheme::agent:
		if (!trained || !forecast)
			throw UsageError("the agent scheme needs a trained policy and a forecaster");
		return [trained, forecast](const DayContext &ctx, int k) { return trained->act(forecast->observe(ctx, k)); };
	case Scheme::always_on: return [&s](const DayContext &, int) { return agent::all_active(s.n_cells()); };
	case Scheme::all_sleep:
		return [&s](const DayContext &, int) {
			auto a = agent::all_active(s.n_cells());
			std::fill(a.sleep.begin(), a.sleep.end(), true);
			return a;
		};
	case Scheme::empirical:
		return [loads, b](const DayContext &ctx, int k) { return agent::baseline_empirical(loads(ctx, k), b.tau); };
	case Scheme::custom: {
		auto cache = std::make_shared<std::map<int, std::vector<double>>>();
		return [loads, b, &o, cache](const DayContext &ctx, int k) {
			auto it = cache->find(ctx.day);
			if (it == cache->end())
				it = cache->emplace(ctx.day, agent::custom_thresholds(load_history(o, ctx.day, b.history_days), b.percentile))
				         .first;
			return agent::baseline_custom(loads(ctx, k), it->second);
		};
	}
	case Scheme::greedy:
		return [loads, b, &s, w](const DayContext &ctx, int k) {
			const auto &step = ctx.steps[static_cast<std::size_t>(k)];
			return agent::baseline_greedy(
			    s, loads(ctx, k), [&](const agent::Action &a) { return settle(s, step, a, w).state; }, b.greedy);
		};
	}
	throw UsageError("unhandled scheme");
}

struct SchemeSummary
{
	double utility = 0.0;
	double energy_wh = 0.0;
	double reference_energy_wh = 0.0;
	double energy_saved = 0.0;
	double rsrp_avg_dbm = 0.0;
	/// Mean over steps of (scheme RSRP - always-on RSRP), steps where both serve someone.
	double rsrp_delta_db = 0.0;
	double drop_rate = 0.0;
	double asleep = 0.0;
};

/// Aggregates episodes of one scheme against the always-on episodes of the same days.
inline SchemeSummary summarize(const std::vector<EpisodeResult> &eps, const std::vector<EpisodeResult> &always_on)
{
	std::map<int, const EpisodeResult *> ref;
	for (const auto &e : always_on)
		ref[e.day] = &e;
	SchemeSummary s;
	double rsum = 0.0, dsum = 0.0;
	int rn = 0, dn = 0, steps = 0;
	for (const auto &e : eps) {
		s.utility += e.utility() / static_cast<double>(eps.size());
		const auto it = ref.find(e.day);
		for (std::size_t k = 0; k < e.reward.size(); ++k) {
			s.energy_wh += e.energy_wh[k];
			s.reference_energy_wh += e.reference_energy_wh[k];
			s.drop_rate += e.drop_rate[k];
			s.asleep += e.asleep[k];
			++steps;
			if (!std::isnan(e.rsrp_avg_dbm[k])) {
				rsum += e.rsrp_avg_dbm[k];
				++rn;
				if (it != ref.end() && !std::isnan(it->second->rsrp_avg_dbm[k])) {
					dsum += e.rsrp_avg_dbm[k] - it->second->rsrp_avg_dbm[k];
					++dn;
				}
			}
		}
	}
	if (steps > 0) {
		s.drop_rate /= steps;
		s.asleep /= steps;
	}
	s.energy_saved = s.reference_energy_wh > 0.0 ? 1.0 - s.energy_wh / s.reference_energy_wh : 0.0;
	s.rsrp_avg_dbm = rn ? rsum / rn : std::nan("");
	s.rsrp_delta_db = dn ? dsum / dn : std::nan("");
	return s;
}

} // namespace netwm::harness
