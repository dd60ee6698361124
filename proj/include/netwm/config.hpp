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
 * \file netwm/config.hpp
 *
 * \brief Run configuration: strict parsing, defaults and a content hash.
 *
 * Every section is optional and falls back to its defaults. Unknown keys and
 * type mismatches raise ConfigError naming the offending key. The hash is
 * FNV-1a over the canonical dump of the fully populated configuration, so
 * key order and omitted defaults do not change it.
 */

#pragma once

#include <netwm/harness/counterfactual.hpp>
#include <netwm/harness/evaluation.hpp>
#include <netwm/jsonutil.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace netwm {

struct EvaluationConfig
{
	/// Seed i (0-based position in the seed list) is evaluated on days
	/// first_day + i * days, ..., first_day + (i + 1) * days - 1.
	int first_day = 200;
	int days = 5;
};

struct RunConfig
{
	/// Scenario JSON; empty selects the built-in 7-cell hexagonal layout.
	std::string scenario_path;
	std::uint64_t scenario_seed = 7;
	std::string output_dir = "runs/default";
	/// Stage artifacts; empty means a fixed subdirectory of output_dir.
	std::string dataset_dir;
	std::string worldmodel_dir;
	std::string policy_dir;

	int collect_first_day = 0;
	int collect_days = 60;
	int rsrp_per_day = 64;
	data::SplitFractions splits;
	std::uint64_t dataset_seed = 1;

	diffusion::WorldModelConfig worldmodel;
	int forecast_samples = 8;
	harness::WorldModelEnvConfig environment;
	std::uint64_t environment_seed = 1;
	harness::AgentConfig agent;
	agent::RewardWeights reward;
	harness::BaselineConfig baselines;
	EvaluationConfig evaluation;
	harness::GenerationOptions generation;
	harness::CounterfactualConfig counterfactual;
	std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

	/// Directory relative input paths are resolved against.
	std::string base_dir = ".";

	void validate() const
	{
		if (seeds.empty())
			throw ConfigError("seeds", "must not be empty");
		if (collect_days < 1)
			throw ConfigError("collect.n_days", "must be >= 1");
		if (rsrp_per_day < 1)
			throw ConfigError("collect.rsrp_per_day", "must be >= 1");
		data::validate(splits);
		worldmodel.validate();
		if (forecast_samples < 1)
			throw ConfigError("forecast_samples", "must be >= 1");
		environment.validate();
		agent.validate();
		reward.validate();
		if (!(baselines.tau >= 0.0 && baselines.tau <= 1.0))
			throw ConfigError("baselines.tau", "must lie in [0, 1]");
		if (!(baselines.percentile >= 0.0 && baselines.percentile <= 100.0))
			throw ConfigError("baselines.percentile", "must lie in [0, 100]");
		if (baselines.history_days < 1)
			throw ConfigError("baselines.history_days", "must be >= 1");
		if (evaluation.days < 1 || evaluation.first_day < 0)
			throw ConfigError("evaluation", "days must be >= 1 and first_day >= 0");
		generation.validate();
		counterfactual.validate();
		if (output_dir.empty())
			throw ConfigError("output_dir", "must not be empty");
	}

	/// Output root: NETWM_OUTPUT_ROOT (when set) prefixes a relative output_dir.
	std::filesystem::path output() const
	{
		std::filesystem::path p(output_dir);
		if (p.is_relative())
			if (const char *root = std::getenv("NETWM_OUTPUT_ROOT"); root && *root)
				return std::filesystem::path(root) / p;
		return p;
	}

	std::filesystem::path dataset() const { return dataset_dir.empty() ? output() / "dataset" : resolve(dataset_dir); }
	std::filesystem::path worldmodel_path() const
	{
		return worldmodel_dir.empty() ? output() / "worldmodel" : resolve(worldmodel_dir);
	}
	std::filesystem::path policies() const { return policy_dir.empty() ? output() / "policies" : resolve(policy_dir); }

	std::filesystem::path resolve(const std::string &p) const
	{
		const std::filesystem::path q(p);
		return q.is_relative() ? std::filesystem::path(base_dir) / q : q;
	}

	oracle::ScenarioConfig scenario() const
	{
		if (scenario_path.empty())
			return oracle::default_hex_scenario(scenario_seed);
		return oracle::load_scenario(resolve(scenario_path).string());
	}

	data::CollectOptions collect_options() const
	{
		data::CollectOptions c;
		c.first_day = collect_first_day;
		c.n_days = collect_days;
		c.rsrp_per_day = rsrp_per_day;
		c.fractions = splits;
		c.seed = dataset_seed;
		return c;
	}

	/// Evaluation days of the seed at position `index`.
	std::vector<int> evaluation_days(std::size_t index) const
	{
		std::vector<int> d;
		for (int k = 0; k < evaluation.days; ++k)
			d.push_back(evaluation.first_day + static_cast<int>(index) * evaluation.days + k);
		return d;
	}
};

inline nlohmann::json to_json(const RunConfig &c)
{
	const auto &b = c.baselines;
	return {{"scenario", {{"path", c.scenario_path}, {"seed", c.scenario_seed}}},
	        {"output_dir", c.output_dir},
	        {"paths", {{"dataset", c.dataset_dir}, {"worldmodel", c.worldmodel_dir}, {"policies", c.policy_dir}}},
	        {"collect",
	         {{"first_day", c.collect_first_day},
	          {"n_days", c.collect_days},
	          {"rsrp_per_day", c.rsrp_per_day},
	          {"splits", {c.splits.train, c.splits.val, c.splits.test}},
	          {"seed", c.dataset_seed}}},
	        {"worldmodel", to_json(c.worldmodel)},
	        {"forecast_samples", c.forecast_samples},
	        {"environment",
	         {{"pool_days", c.environment.pool_days},
	          {"first_pool_day", c.environment.first_pool_day},
	          {"rsrp_slots", c.environment.rsrp_slots},
	          {"seed", c.environment_seed}}},
	        {"agent", harness::to_json(c.agent)},
	        {"reward",
	         {{"lambda_energy", c.reward.lambda_energy},
	          {"lambda_rsrp", c.reward.lambda_rsrp},
	          {"lambda_drop", c.reward.lambda_drop},
	          {"rsrp_lo_dbm", c.reward.rsrp_lo_dbm},
	          {"rsrp_hi_dbm", c.reward.rsrp_hi_dbm}}},
	        {"baselines",
	         {{"tau", b.tau},
	          {"percentile", b.percentile},
	          {"history_days", b.history_days},
	          {"greedy_margin_db", b.greedy.margin_db},
	          {"greedy_bias_db", b.greedy.bias_db}}},
	        {"evaluation", {{"first_day", c.evaluation.first_day}, {"days", c.evaluation.days}}},
	        {"generation", harness::to_json(c.generation)},
	        {"counterfactual", harness::to_json(c.counterfactual)},
	        {"seeds", c.seeds}};
}

namespace detail {

inline const nlohmann::json &section(const nlohmann::json &j, const char *key)
{
	static const nlohmann::json empty = nlohmann::json::object();
	if (!j.contains(key))
		return empty;
	jsonutil::require_object(j.at(key), key);
	return j.at(key);
}

} // namespace detail

/// Parses a configuration object; `base_dir` anchors relative input paths.
inline RunConfig config_from_json(const nlohmann::json &j, const std::string &base_dir = ".")
{
	using jsonutil::get_to;
	using jsonutil::reject_unknown;
	jsonutil::require_object(j, "");
	reject_unknown(j,
	               {"scenario", "output_dir", "paths", "collect", "worldmodel", "forecast_samples", "environment", "agent",
	                "reward", "baselines", "evaluation", "generation", "counterfactual", "seeds"},
	               "");
	RunConfig c;
	c.base_dir = base_dir;

	const auto &sc = detail::section(j, "scenario");
	reject_unknown(sc, {"path", "seed"}, "scenario.");
	get_to(sc, "path", c.scenario_path, "scenario.");
	get_to(sc, "seed", c.scenario_seed, "scenario.");
	get_to(j, "output_dir", c.output_dir, "");

	const auto &pa = detail::section(j, "paths");
	reject_unknown(pa, {"dataset", "worldmodel", "policies"}, "paths.");
	get_to(pa, "dataset", c.dataset_dir, "paths.");
	get_to(pa, "worldmodel", c.worldmodel_dir, "paths.");
	get_to(pa, "policies", c.policy_dir, "paths.");

	const auto &co = detail::section(j, "collect");
	reject_unknown(co, {"first_day", "n_days", "rsrp_per_day", "splits", "seed"}, "collect.");
	get_to(co, "first_day", c.collect_first_day, "collect.");
	get_to(co, "n_days", c.collect_days, "collect.");
	get_to(co, "rsrp_per_day", c.rsrp_per_day, "collect.");
	get_to(co, "seed", c.dataset_seed, "collect.");
	if (co.contains("splits")) {
		std::vector<double> s;
		get_to(co, "splits", s, "collect.");
		if (s.size() != 3)
			throw ConfigError("collect.splits", "expected [train, val, test]");
		c.splits = {s[0], s[1], s[2]};
	}

	if (j.contains("worldmodel"))
		c.worldmodel = diffusion::worldmodel_config_from_json(j.at("worldmodel"));
	get_to(j, "forecast_samples", c.forecast_samples, "");

	const auto &env = detail::section(j, "environment");
	reject_unknown(env, {"pool_days", "first_pool_day", "rsrp_slots", "seed"}, "environment.");
	get_to(env, "pool_days", c.environment.pool_days, "environment.");
	get_to(env, "first_pool_day", c.environment.first_pool_day, "environment.");
	get_to(env, "rsrp_slots", c.environment.rsrp_slots, "environment.");
	get_to(env, "seed", c.environment_seed, "environment.");

	if (j.contains("agent"))
		c.agent = harness::agent_config_from_json(j.at("agent"));

	const auto &rw = detail::section(j, "reward");
	reject_unknown(rw, {"lambda_energy", "lambda_rsrp", "lambda_drop", "rsrp_lo_dbm", "rsrp_hi_dbm"}, "reward.");
	get_to(rw, "lambda_energy", c.reward.lambda_energy, "reward.");
	get_to(rw, "lambda_rsrp", c.reward.lambda_rsrp, "reward.");
	get_to(rw, "lambda_drop", c.reward.lambda_drop, "reward.");
	get_to(rw, "rsrp_lo_dbm", c.reward.rsrp_lo_dbm, "reward.");
	get_to(rw, "rsrp_hi_dbm", c.reward.rsrp_hi_dbm, "reward.");

	const auto &bl = detail::section(j, "baselines");
	reject_unknown(bl, {"tau", "percentile", "history_days", "greedy_margin_db", "greedy_bias_db"}, "baselines.");
	get_to(bl, "tau", c.baselines.tau, "baselines.");
	get_to(bl, "percentile", c.baselines.percentile, "baselines.");
	get_to(bl, "history_days", c.baselines.history_days, "baselines.");
	get_to(bl, "greedy_margin_db", c.baselines.greedy.margin_db, "baselines.");
	get_to(bl, "greedy_bias_db", c.baselines.greedy.bias_db, "baselines.");

	const auto &ev = detail::section(j, "evaluation");
	reject_unknown(ev, {"first_day", "days"}, "evaluation.");
	get_to(ev, "first_day", c.evaluation.first_day, "evaluation.");
	get_to(ev, "days", c.evaluation.days, "evaluation.");

	if (j.contains("generation"))
		c.generation = harness::generation_options_from_json(j.at("generation"));
	if (j.contains("counterfactual"))
		c.counterfactual = harness::counterfactual_config_from_json(j.at("counterfactual"));
	get_to(j, "seeds", c.seeds, "");

	c.validate();
	if (!c.scenario_path.empty() && !std::filesystem::exists(c.resolve(c.scenario_path)))
		throw ConfigError("scenario.path", "'" + c.scenario_path + "' does not exist");
	return c;
}

inline RunConfig parse_config(const std::string &path)
{
	std::ifstream in(path);
	if (!in)
		throw ConfigError("config", "cannot open '" + path + "'");
	nlohmann::json j;
	try {
		in >> j;
	} catch (const nlohmann::json::parse_error &e) {
		throw ConfigError("config", std::string("malformed JSON: ") + e.what());
	}
	const auto dir = std::filesystem::path(path).parent_path();
	return config_from_json(j, dir.empty() ? "." : dir.string());
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string &s)
{
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char ch : s) {
		h ^= ch;
		h *= 0x100000001b3ULL;
	}
	return h;
}

/// Hex digest of the canonical (sorted-key) dump of the populated config.
inline std::string config_hash(const RunConfig &c)
{
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
	return buf;
}

} // namespace netwm
