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
 * \file netwm/harness/training.hpp
 *
 * \brief Policy training inside the world-model environment.
 */

#pragma once

#include <netwm/agent/policy.hpp>
#include <netwm/harness/environment.hpp>
#include <netwm/jsonutil.hpp>
#include <netwm/nn/checkpoint.hpp>
#include <netwm/parallel.hpp>

#include <json.hpp>

#include <string>
#include <vector>

namespace netwm::harness {

struct AgentConfig
{
	agent::PolicyConfig policy;
	agent::ReinforceConfig reinforce;
	int updates = 300;
	int episodes_per_update = 16;

	void validate() const
	{
		reinforce.validate();
		if (updates < 1)
			throw ConfigError("agent.updates", "must be >= 1");
		if (episodes_per_update < 1)
			throw ConfigError("agent.episodes_per_update", "must be >= 1");
	}
};

inline nlohmann::json to_json(const AgentConfig &c)
{
	return {{"hidden", c.policy.hidden},
	        {"bias_levels", c.policy.bias_levels},
	        {"lr", c.reinforce.lr},
	        {"gamma", c.reinforce.gamma},
	        {"baseline_momentum", c.reinforce.baseline_momentum},
	        {"entropy_coef", c.reinforce.entropy_coef},
	        {"clip_norm", c.reinforce.clip_norm},
	        {"updates", c.updates},
	        {"episodes_per_update", c.episodes_per_update}};
}

inline AgentConfig agent_config_from_json(const nlohmann::json &j, const std::string &prefix = "agent")
{
	using jsonutil::get_to;
	jsonutil::require_object(j, prefix);
	const std::string p = prefix + ".";
	jsonutil::reject_unknown(j,
	                         {"hidden", "bias_levels", "lr", "gamma", "baseline_momentum", "entropy_coef", "clip_norm",
	                          "updates", "episodes_per_update"},
	                         p);
	AgentConfig c;
	get_to(j, "hidden", c.policy.hidden, p);
	get_to(j, "bias_levels", c.policy.bias_levels, p);
	get_to(j, "lr", c.reinforce.lr, p);
	get_to(j, "gamma", c.reinforce.gamma, p);
	get_to(j, "baseline_momentum", c.reinforce.baseline_momentum, p);
	get_to(j, "entropy_coef", c.reinforce.entropy_coef, p);
	get_to(j, "clip_norm", c.reinforce.clip_norm, p);
	get_to(j, "updates", c.updates, p);
	get_to(j, "episodes_per_update", c.episodes_per_update, p);
	c.validate();
	return c;
}

struct TrainedAgent
{
	agent::Policy policy;
	nn::ParamStore store;
	/// Mean per-step reward of the batch behind each update.
	std::vector<double> curve;

	agent::Action act(const Eigen::VectorXd &obs) const
	{
		return policy.to_action(agent::Policy::mode(policy.probabilities(store, obs)));
	}

	void save(const std::string &path) const
	{
		nn::save_checkpoint(path, store,
		                    {{"kind", "policy"},
		                     {"obs_dim", policy.obs_dim()},
		                     {"n_cells", policy.n_cells()},
		                     {"hidden", policy.config().hidden},
		                     {"bias_levels", policy.config().bias_levels},
		                     {"curve", curve}});
	}

	static TrainedAgent load(const std::string &path)
	{
		auto ck = nn::load_checkpoint(path);
		const auto &m = ck.manifest;
		try {
			if (m.at("kind") != "policy")
				throw ModelError("'" + path + "' is not a policy checkpoint");
			agent::PolicyConfig pc;
			pc.hidden = m.at("hidden").get<std::vector<int>>();
			pc.bias_levels = m.at("bias_levels").get<std::vector<double>>();
			TrainedAgent a;
			a.policy = agent::Policy(m.at("obs_dim").get<int>(), m.at("n_cells").get<int>(), pc);
			auto rng = make_rng({0});
			a.policy.init(a.store, rng);
			nn::assign_checked(a.store, ck.store);
			a.curve = m.at("curve").get<std::vector<double>>();
			return a;
		} catch (const nlohmann::json::exception &e) {
			throw FormatError(std::string("malformed policy manifest: ") + e.what());
		}
	}
};

/// One sampled episode over `ctx`; rewards come from settling each sampled action.
inline agent::Trajectory rollout(const agent::Policy &policy, const nn::ParamStore &store, const Forecaster &forecast,
                                 const oracle::ScenarioConfig &s, const DayContext &ctx, const agent::RewardWeights &w,
                                 Rng &rng)
{
	agent::Trajectory t;
	for (int k = 0; k < static_cast<int>(ctx.steps.size()); ++k) {
		agent::Step st;
		st.obs = forecast.observe(ctx, k);
		const Matrix p = policy.probabilities(store, st.obs);
		st.choices = agent::Policy::sample(p, rng);
		st.log_prob = agent::Policy::log_prob(p, st.choices);
		st.reward = settle(s, ctx.steps[static_cast<std::size_t>(k)], policy.to_action(st.choices), w).reward;
		t.steps.push_back(std::move(st));
	}
	return t;
}

/**
 * REINFORCE over world-model episodes for a fixed number of updates.
 * Rollouts of one update run in parallel against frozen parameters; each
 * episode has its own streams, so the curve does not depend on `jobs`.
 * With `warm_start` the policy continues from those parameters.
 */
inline TrainedAgent run_training(const WorldModelEnv &env, const Forecaster &forecast, const AgentConfig &cfg,
                                 const agent::RewardWeights &w, std::uint64_t seed, int jobs = 1,
                                 const TrainedAgent *warm_start = nullptr)
{
	cfg.validate();
	w.validate();
	const auto &s = env.scenario();
	TrainedAgent a;
	a.policy = agent::Policy(agent::observation_dim(s.n_cells()), s.n_cells(), cfg.policy);
	if (warm_start) {
		if (warm_start->policy.obs_dim() != a.policy.obs_dim() || warm_start->policy.n_choices() != a.policy.n_choices())
			throw ConfigError("agent", "warm-start policy does not match the scenario");
		a.store = warm_start->store;
		for (auto &[_, p] : a.store)
			p.reset_moments();
	} else {
		auto rng = make_rng({seed, tag(Stream::init), tag(Stream::policy)});
		a.policy.init(a.store, rng);
	}
	agent::Reinforce learner(cfg.reinforce);
	const auto E = static_cast<std::size_t>(cfg.episodes_per_update);
	for (int u = 0; u < cfg.updates; ++u) {
		std::vector<agent::Trajectory> batch(E);
		parallel_for(E, jobs, [&](std::size_t e) {
			const std::uint64_t key = seed_of({seed, static_cast<std::uint64_t>(u), e});
			const DayContext ctx = env.day(key);
			auto rng = make_rng({key, tag(Stream::policy)});
			batch[e] = rollout(a.policy, a.store, forecast, s, ctx, w, rng);
		});
		a.curve.push_back(learner.update(a.policy, a.store, batch).mean_utility);
	}
	return a;
}

} // namespace netwm::harness
