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
 * \file netwm/harness/counterfactual.hpp
 *
 * \brief Peak-load counterfactual scenarios and adapting the traffic head to them.
 */

#pragma once

#include <netwm/harness/metrics.hpp>

#include <vector>

namespace netwm::harness {

struct CounterfactualConfig
{
	std::vector<double> fractions = {0.5, 0.6, 0.8};
	/// Days of counterfactual traffic the adapter is trained on.
	int first_day = 0;
	int n_days = 7;
	diffusion::LoraConfig lora;
	/// Policy updates when retraining in the adapted environment.
	int retrain_updates = 300;

	void validate() const
	{
		if (fractions.empty())
			throw ConfigError("counterfactual.fractions", "at least one fraction required");
		for (double f : fractions)
			if (!(f > 0.0 && f <= 1.0))
				throw ConfigError("counterfactual.fractions", "each fraction must lie in (0, 1]");
		if (n_days < 1)
			throw ConfigError("counterfactual.n_days", "must be >= 1");
		if (lora.rank < 1 || lora.steps < 0 || !(lora.lr > 0.0) || lora.layers.empty())
			throw ConfigError("counterfactual.lora", "rank >= 1, steps >= 0, lr > 0 and a layer list are required");
		if (retrain_updates < 1)
			throw ConfigError("counterfactual.retrain_updates", "must be >= 1");
	}
};

inline nlohmann::json to_json(const CounterfactualConfig &c)
{
	return {{"fractions", c.fractions},
	        {"first_day", c.first_day},
	        {"n_days", c.n_days},
	        {"lora", {{"rank", c.lora.rank}, {"alpha", c.lora.alpha}, {"layers", c.lora.layers}, {"steps", c.lora.steps}, {"lr", c.lora.lr}}},
	        {"retrain_updates", c.retrain_updates}};
}

inline CounterfactualConfig counterfactual_config_from_json(const nlohmann::json &j,
                                                            const std::string &prefix = "counterfactual")
{
	using jsonutil::get_to;
	jsonutil::require_object(j, prefix);
	const std::string p = prefix + ".";
	jsonutil::reject_unknown(j, {"fractions", "first_day", "n_days", "lora", "retrain_updates"}, p);
	CounterfactualConfig c;
	get_to(j, "fractions", c.fractions, p);
	get_to(j, "first_day", c.first_day, p);
	get_to(j, "n_days", c.n_days, p);
	get_to(j, "retrain_updates", c.retrain_updates, p);
	if (j.contains("lora")) {
		const auto &l = j.at("lora");
		const std::string lp = p + "lora.";
		jsonutil::require_object(l, p + "lora");
		jsonutil::reject_unknown(l, {"rank", "alpha", "layers", "steps", "lr"}, lp);
		get_to(l, "rank", c.lora.rank, lp);
		get_to(l, "alpha", c.lora.alpha, lp);
		get_to(l, "layers", c.lora.layers, lp);
		get_to(l, "steps", c.lora.steps, lp);
		get_to(l, "lr", c.lora.lr, lp);
	}
	c.validate();
	return c;
}

inline oracle::ScenarioConfig counterfactual_scenario(oracle::ScenarioConfig s, double fraction)
{
	s.counterfactual_peak_fraction = fraction;
	oracle::validate(s);
	return s;
}

inline std::string counterfactual_name(double fraction)
{
	char buf[32];
	std::snprintf(buf, sizeof buf, "peak_%.2f", fraction);
	return buf;
}

/// Copy of `base` with LoRA adapters trained on `n_days` of the counterfactual
/// oracle's traffic. Normalization statistics stay those of the base head.
inline diffusion::Head adapt_traffic_head(const diffusion::Head &base, const oracle::Oracle &cf,
                                          const CounterfactualConfig &cfg, const diffusion::TrainConfig &tc,
                                          std::vector<double> *curve = nullptr)
{
	if (base.kind() != data::SampleKind::traffic)
		throw UsageError("counterfactual adaptation applies to the traffic head");
	diffusion::Head h = base;
	const auto d = data::collect_samples(cf, data::SampleKind::traffic, cfg.first_day, cfg.n_days);
	auto c = diffusion::fine_tune_lora(h, d, cfg.lora, tc);
	if (curve)
		*curve = std::move(c);
	return h;
}

/// `wm` with its traffic head replaced by `traffic`.
inline diffusion::WorldModel with_traffic_head(const diffusion::WorldModel &wm, diffusion::Head traffic)
{
	diffusion::WorldModel out = wm;
	out.set(std::move(traffic));
	return out;
}

} // namespace netwm::harness
