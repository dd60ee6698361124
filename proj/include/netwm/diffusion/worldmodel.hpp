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
 * \file netwm/diffusion/worldmodel.hpp
 *
 * \brief The three generative heads (traffic, users, RSRP) trained and stored together.
 */

#pragma once

#include <netwm/data/dataset.hpp>
#include <netwm/diffusion/head.hpp>
#include <netwm/jsonutil.hpp>

#include <json.hpp>

#include <array>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <vector>

namespace netwm::diffusion {

struct WorldModelConfig
{
	int T = 100;
	double beta_min = 1e-4;
	double beta_max = 0.02;
	/// Shared layer widths; length and condition width are set per head.
	DenoiserConfig denoiser;
	bool rsrp_prompt_memory = false;
	TrainConfig train;
	double guidance_w = 1.0;

	void validate() const
	{
		make_schedule(T, beta_min, beta_max);
		denoiser.validate();
		train.validate();
		if (guidance_w < 0.0)
			throw ConfigError("worldmodel.guidance_w", "must be >= 0");
	}
};

inline nlohmann::json to_json(const TrainConfig &c)
{
	return {{"steps", c.steps},
	        {"batch", c.batch},
	        {"lr", c.lr},
	        {"lr_final_fraction", c.lr_final_fraction},
	        {"p_uncond", c.p_uncond},
	        {"long_term_prob", c.long_term_prob},
	        {"clip_norm", c.clip_norm},
	        {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const nlohmann::json &j, const std::string &prefix)
{
	using jsonutil::get_to;
	jsonutil::require_object(j, prefix);
	jsonutil::reject_unknown(
	    j, {"steps", "batch", "lr", "lr_final_fraction", "p_uncond", "long_term_prob", "clip_norm", "seed"}, prefix + ".");
	TrainConfig c;
	get_to(j, "steps", c.steps, prefix + ".");
	get_to(j, "batch", c.batch, prefix + ".");
	get_to(j, "lr", c.lr, prefix + ".");
	get_to(j, "lr_final_fraction", c.lr_final_fraction, prefix + ".");
	get_to(j, "p_uncond", c.p_uncond, prefix + ".");
	get_to(j, "long_term_prob", c.long_term_prob, prefix + ".");
	get_to(j, "clip_norm", c.clip_norm, prefix + ".");
	get_to(j, "seed", c.seed, prefix + ".");
	return c;
}

inline nlohmann::json to_json(const WorldModelConfig &c)
{
	auto d = to_json(c.denoiser);
	d.erase("length");
	d.erase("cond_dim");
	return {{"T", c.T},
	        {"beta_min", c.beta_min},
	        {"beta_max", c.beta_max},
	        {"denoiser", d},
	        {"rsrp_prompt_memory", c.rsrp_prompt_memory},
	        {"train", to_json(c.train)},
	        {"guidance_w", c.guidance_w}};
}

inline WorldModelConfig worldmodel_config_from_json(const nlohmann::json &j, const std::string &prefix = "worldmodel")
{
	using jsonutil::get_to;
	jsonutil::require_object(j, prefix);
	const std::string p = prefix + ".";
	jsonutil::reject_unknown(j, {"T", "beta_min", "beta_max", "denoiser", "rsrp_prompt_memory", "train", "guidance_w"}, p);
	WorldModelConfig c;
	get_to(j, "T", c.T, p);
	get_to(j, "beta_min", c.beta_min, p);
	get_to(j, "beta_max", c.beta_max, p);
	get_to(j, "rsrp_prompt_memory", c.rsrp_prompt_memory, p);
	get_to(j, "guidance_w", c.guidance_w, p);
	if (j.contains("train"))
		c.train = train_config_from_json(j["train"], p + "train");
	if (j.contains("denoiser")) {
		const auto &d = j["denoiser"];
		const std::string dp = p + "denoiser.";
		jsonutil::require_object(d, p + "denoiser");
		jsonutil::reject_unknown(d,
		                         {"time_dim", "cond_embed", "hidden", "experts", "gate_hidden", "prompt_memory",
		                          "prompt_pool", "prompt_top", "prompt_dim", "pull_weight"},
		                         dp);
		get_to(d, "time_dim", c.denoiser.time_dim, dp);
		get_to(d, "cond_embed", c.denoiser.cond_embed, dp);
		get_to(d, "hidden", c.denoiser.hidden, dp);
		get_to(d, "experts", c.denoiser.experts, dp);
		get_to(d, "gate_hidden", c.denoiser.gate_hidden, dp);
		get_to(d, "prompt_memory", c.denoiser.prompt_memory, dp);
		get_to(d, "prompt_pool", c.denoiser.prompt_pool, dp);
		get_to(d, "prompt_top", c.denoiser.prompt_top, dp);
		get_to(d, "prompt_dim", c.denoiser.prompt_dim, dp);
		get_to(d, "pull_weight", c.denoiser.pull_weight, dp);
	}
	c.validate();
	return c;
}

/// Builds an untrained head sized for `bundle`.
inline Head make_head(const data::DatasetBundle &bundle, const WorldModelConfig &cfg)
{
	DenoiserConfig d = cfg.denoiser;
	d.length = bundle.length;
	d.cond_dim = static_cast<int>(bundle.condition_stats.channels());
	if (bundle.kind == data::SampleKind::rsrp)
		d.prompt_memory = cfg.rsrp_prompt_memory;
	d.validate();
	return Head(bundle.kind, d, make_schedule(cfg.T, cfg.beta_min, cfg.beta_max), bundle.series_stats,
	            bundle.condition_stats);
}

struct LoraConfig
{
	int rank = 4;
	double alpha = 8.0;
	std::vector<std::string> layers = {"expert", "cond"};
	int steps = 200;
	double lr = 5e-3;
};

/// Attaches adapters to `head` and trains only them on `train`.
inline std::vector<double> fine_tune_lora(Head &head, const data::Dataset &train, const LoraConfig &lc,
                                          TrainConfig tc)
{
	auto rng = make_rng({tc.seed, tag(Stream::init), static_cast<std::uint64_t>(head.kind()), 0x10a4});
	head.denoiser().attach_lora(head.store(), lc.layers, {lc.rank, lc.alpha}, rng);
	tc.steps = lc.steps;
	tc.lr = lc.lr;
	return head.fit(train, tc);
}

class WorldModel
{
public:
	static constexpr std::array<data::SampleKind, 3> kinds = {data::SampleKind::traffic, data::SampleKind::users,
	                                                          data::SampleKind::rsrp};

	WorldModel() = default;

	/// Trains one head per bundle. Heads are independent, so they may train
	/// concurrently (`jobs` > 1) without changing the result.
	static WorldModel train(const std::vector<data::DatasetBundle> &bundles, const WorldModelConfig &cfg, int jobs = 1,
	                        std::vector<std::vector<double>> *curves = nullptr)
	{
		cfg.validate();
		WorldModel wm;
		wm.m_guidance = cfg.guidance_w;
		std::vector<Head> heads;
		for (const auto &b : bundles) {
			heads.push_back(make_head(b, cfg));
			heads.back().init(cfg.train.seed);
		}
		std::vector<std::vector<double>> out(bundles.size());
		auto run = [&](std::size_t i) { out[i] = heads[i].fit(bundles[i].train, cfg.train); };
		if (jobs > 1) {
			std::vector<std::future<void>> fs;
			for (std::size_t i = 0; i < heads.size(); ++i)
				fs.push_back(std::async(std::launch::async, run, i));
			for (auto &f : fs)
				f.get();
		} else {
			for (std::size_t i = 0; i < heads.size(); ++i)
				run(i);
		}
		for (auto &h : heads)
			wm.set(std::move(h));
		if (curves)
			*curves = std::move(out);
		return wm;
	}

	bool has(data::SampleKind k) const { return m_heads[index(k)].has_value(); }

	const Head &head(data::SampleKind k) const
	{
		if (!has(k))
			throw ModelError("world model has no '" + data::to_string(k) + "' head");
		return *m_heads[index(k)];
	}

	Head &head(data::SampleKind k)
	{
		if (!has(k))
			throw ModelError("world model has no '" + data::to_string(k) + "' head");
		return *m_heads[index(k)];
	}

	void set(Head h) { m_heads[index(h.kind())] = std::move(h); }

	/// Throws ModelError unless all three heads are present and trained.
	void require_complete() const
	{
		for (auto k : kinds)
			if (!has(k) || !head(k).trained())
				throw ModelError("world model head '" + data::to_string(k) + "' is missing or untrained");
	}

	double guidance_w() const noexcept { return m_guidance; }
	void set_guidance_w(double w) { m_guidance = w; }

	/// Writes `<kind>.ckpt` per head plus `worldmodel.json`.
	void save(const std::string &dir) const
	{
		std::filesystem::create_directories(dir);
		nlohmann::json m = {{"guidance_w", m_guidance}, {"heads", nlohmann::json::array()}};
		for (auto k : kinds)
			if (has(k)) {
				head(k).save((std::filesystem::path(dir) / (data::to_string(k) + ".ckpt")).string());
				m["heads"].push_back(data::to_string(k));
			}
		std::ofstream out(std::filesystem::path(dir) / "worldmodel.json");
		out << m.dump(2) << '\n';
		if (!out)
			throw Error("cannot write world model manifest in '" + dir + "'");
	}

	static WorldModel load(const std::string &dir)
	{
		const auto mpath = std::filesystem::path(dir) / "worldmodel.json";
		std::ifstream in(mpath);
		if (!in)
			throw Error("cannot open world model manifest '" + mpath.string() + "'");
		WorldModel wm;
		try {
			const auto m = nlohmann::json::parse(in);
			wm.m_guidance = m.at("guidance_w").get<double>();
			for (const auto &k : m.at("heads"))
				wm.set(Head::load((std::filesystem::path(dir) / (k.get<std::string>() + ".ckpt")).string()));
		} catch (const nlohmann::json::exception &e) {
			throw FormatError(std::string("malformed world model manifest: ") + e.what());
		}
		return wm;
	}

private:
	static std::size_t index(data::SampleKind k) { return static_cast<std::size_t>(k); }

	std::array<std::optional<Head>, 3> m_heads;
	double m_guidance = 1.0;
};

} // namespace netwm::diffusion
