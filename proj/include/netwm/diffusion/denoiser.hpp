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
 * \file netwm/diffusion/denoiser.hpp
 *
 * \brief Mixture-of-experts noise predictor.
 *
 * Every expert and the gate see the same feature vector
 *
 *   h = [x_t; time embedding; condition embedding; mask; context; prompts]
 *
 * and the prediction is eps_hat = sum_i g_i(h) * m_i(h) with g = softmax.
 * The condition embedding is replaced by a learnable null embedding for
 * columns flagged unconditional. Prompts are the values of the n keys most
 * similar to the condition embedding.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/diffusion/prompt.hpp>
#include <netwm/nn/layers.hpp>
#include <netwm/nn/params.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace netwm::diffusion {

using nn::Gradients;
using nn::Matrix;
using nn::ParamStore;

struct DenoiserConfig
{
	int length = 12;
	int cond_dim = 13;
	int time_dim = 16;
	int cond_embed = 32;
	int hidden = 64;
	int experts = 4;
	int gate_hidden = 32;
	bool prompt_memory = true;
	int prompt_pool = 16;
	int prompt_top = 2;
	int prompt_dim = 8;
	double pull_weight = 0.1;

	int prompt_width() const { return prompt_memory ? prompt_top * prompt_dim : 0; }
	int input_dim() const { return 3 * length + time_dim + cond_embed + prompt_width(); }

	void validate() const
	{
		if (length < 1)
			throw ConfigError("denoiser.length", "must be >= 1");
		if (cond_dim < 1 || time_dim < 2 || time_dim % 2 || cond_embed < 1 || hidden < 1 || gate_hidden < 1)
			throw ConfigError("denoiser.widths", "layer widths must be positive (time_dim even)");
		if (experts < 1)
			throw ConfigError("denoiser.experts", "must be >= 1");
		if (prompt_memory) {
			if (prompt_pool < 1 || prompt_dim < 1)
				throw ConfigError("denoiser.prompt_pool", "prompt pool and width must be positive");
			if (prompt_top < 1 || prompt_top > prompt_pool)
				throw ConfigError("denoiser.prompt_top", "retrieval size must lie in [1, prompt_pool]");
		}
		if (pull_weight < 0.0)
			throw ConfigError("denoiser.pull_weight", "must be >= 0");
	}
};

inline nlohmann::json to_json(const DenoiserConfig &c)
{
	return {{"length", c.length},           {"cond_dim", c.cond_dim},       {"time_dim", c.time_dim},
	        {"cond_embed", c.cond_embed},   {"hidden", c.hidden},           {"experts", c.experts},
	        {"gate_hidden", c.gate_hidden}, {"prompt_memory", c.prompt_memory}, {"prompt_pool", c.prompt_pool},
	        {"prompt_top", c.prompt_top},   {"prompt_dim", c.prompt_dim},   {"pull_weight", c.pull_weight}};
}

inline DenoiserConfig denoiser_config_from_json(const nlohmann::json &j)
{
	DenoiserConfig c;
	c.length = j.at("length").get<int>();
	c.cond_dim = j.at("cond_dim").get<int>();
	c.time_dim = j.at("time_dim").get<int>();
	c.cond_embed = j.at("cond_embed").get<int>();
	c.hidden = j.at("hidden").get<int>();
	c.experts = j.at("experts").get<int>();
	c.gate_hidden = j.at("gate_hidden").get<int>();
	c.prompt_memory = j.at("prompt_memory").get<bool>();
	c.prompt_pool = j.at("prompt_pool").get<int>();
	c.prompt_top = j.at("prompt_top").get<int>();
	c.prompt_dim = j.at("prompt_dim").get<int>();
	c.pull_weight = j.at("pull_weight").get<double>();
	return c;
}

/// A batch of denoiser queries, one per column.
struct DenoiseInput
{
	Matrix x_t;
	std::vector<int> t;
	/// Normalized conditions, cond_dim x B.
	Matrix cond;
	/// 1 = use the null embedding for that column.
	std::vector<std::uint8_t> uncond;
	/// 1 = position to generate.
	Matrix mask;
	/// Revealed series with masked entries zeroed.
	Matrix context;

	Eigen::Index batch() const { return x_t.cols(); }
};

/// Sinusoidal features of integer diffusion steps, dim x B.
inline Matrix time_features(const std::vector<int> &t, int dim)
{
	const int half = dim / 2;
	Matrix f(dim, static_cast<Eigen::Index>(t.size()));
	for (std::size_t b = 0; b < t.size(); ++b)
		for (int k = 0; k < half; ++k) {
			const double w = std::exp(-std::log(1000.0) * k / half);
			f(k, static_cast<Eigen::Index>(b)) = std::sin(t[b] * w);
			f(half + k, static_cast<Eigen::Index>(b)) = std::cos(t[b] * w);
		}
	return f;
}

class Denoiser
{
public:
	struct Cache
	{
		nn::Mlp::Cache time;
		nn::Mlp::Cache cond;
		Matrix cemb;
		std::vector<std::uint8_t> uncond;
		std::vector<std::vector<int>> retrieved;
		Matrix h;
		std::vector<nn::Mlp::Cache> experts;
		std::vector<Matrix> expert_out;
		nn::Mlp::Cache gate;
		Matrix gates;
		/// Columns whose condition embedding came from the condition network.
		int cond_uses = 0;
	};

	Denoiser() = default;
	explicit Denoiser(DenoiserConfig cfg) : m_cfg(cfg)
	{
		m_cfg.validate();
		const int in = m_cfg.input_dim();
		m_time = nn::Mlp("time", {{m_cfg.time_dim, m_cfg.time_dim}, nn::Activation::relu, nn::Activation::tanh});
		m_cond = nn::Mlp("cond", {{m_cfg.cond_dim, m_cfg.cond_embed, m_cfg.cond_embed}, nn::Activation::relu,
		                          nn::Activation::tanh});
		for (int i = 0; i < m_cfg.experts; ++i)
			m_experts.emplace_back("expert" + std::to_string(i),
			                       nn::MlpSpec{{in, m_cfg.hidden, m_cfg.hidden, m_cfg.length}});
		m_gate = nn::Mlp("gate", {{in, m_cfg.gate_hidden, m_cfg.experts}});
	}

	const DenoiserConfig &config() const noexcept { return m_cfg; }
	const nn::Mlp &expert(int i) const { return m_experts.at(static_cast<std::size_t>(i)); }
	const nn::Mlp &gate() const noexcept { return m_gate; }

	void init(ParamStore &store, Rng &rng) const
	{
		m_time.init(store, rng);
		m_cond.init(store, rng);
		for (const auto &e : m_experts)
			e.init(store, rng);
		m_gate.init(store, rng);
		store.add("null_cond", nn::gaussian(m_cfg.cond_embed, 1, 0.1, rng));
		if (m_cfg.prompt_memory) {
			Matrix keys = nn::gaussian(m_cfg.cond_embed, m_cfg.prompt_pool, 1.0, rng);
			normalize_keys(keys);
			store.add("prompt.keys", keys);
			store.add("prompt.values", nn::gaussian(m_cfg.prompt_dim, m_cfg.prompt_pool, 0.1, rng));
		}
	}

	/// Assembles the shared feature vector h (also filling the embedding parts of `cache`).
	Matrix features(const ParamStore &store, const DenoiseInput &in, Cache *cache = nullptr) const
	{
		check(in);
		const auto B = in.batch();
		const Matrix temb = m_time.forward(store, time_features(in.t, m_cfg.time_dim), cache ? &cache->time : nullptr);
		int uses = 0;
		for (auto u : in.uncond)
			uses += u ? 0 : 1;
		Matrix cond_out;
		if (uses > 0)
			cond_out = m_cond.forward(store, in.cond, cache ? &cache->cond : nullptr);
		const Matrix &null = store.value("null_cond");
		Matrix cemb(m_cfg.cond_embed, B);
		for (Eigen::Index b = 0; b < B; ++b)
			if (in.uncond[static_cast<std::size_t>(b)])
				cemb.col(b) = null.col(0);
			else
				cemb.col(b) = cond_out.col(b);

		const int pw = m_cfg.prompt_width();
		Matrix prompts(pw, B);
		std::vector<std::vector<int>> retrieved;
		if (m_cfg.prompt_memory) {
			const Matrix &keys = store.value("prompt.keys");
			const Matrix &values = store.value("prompt.values");
			for (Eigen::Index b = 0; b < B; ++b) {
				auto r = prompt_retrieve(keys, cemb.col(b), m_cfg.prompt_top);
				for (std::size_t s = 0; s < r.indices.size(); ++s)
					prompts.block(static_cast<Eigen::Index>(s) * m_cfg.prompt_dim, b, m_cfg.prompt_dim, 1) =
					    values.col(r.indices[s]);
				retrieved.push_back(std::move(r.indices));
			}
		}

		const int L = m_cfg.length;
		Matrix h(m_cfg.input_dim(), B);
		h << in.x_t, temb, cemb, in.mask, in.context, prompts;
		if (cache) {
			cache->cemb = std::move(cemb);
			cache->uncond = in.uncond;
			cache->retrieved = std::move(retrieved);
			cache->cond_uses = uses;
		}
		(void)L;
		return h;
	}

	Matrix forward(const ParamStore &store, const DenoiseInput &in, Cache *cache = nullptr) const
	{
		Matrix h = features(store, in, cache);
		const auto M = static_cast<std::size_t>(m_cfg.experts);
		std::vector<Matrix> outs(M);
		if (cache)
			cache->experts.resize(M);
		for (std::size_t i = 0; i < M; ++i)
			outs[i] = m_experts[i].forward(store, h, cache ? &cache->experts[i] : nullptr);
		Matrix gates = nn::softmax(m_gate.forward(store, h, cache ? &cache->gate : nullptr));
		Matrix out = Matrix::Zero(m_cfg.length, h.cols());
		for (std::size_t i = 0; i < M; ++i)
			out.array() += outs[i].array().rowwise() * gates.row(static_cast<Eigen::Index>(i)).array();
		if (cache) {
			cache->h = std::move(h);
			cache->expert_out = std::move(outs);
			cache->gates = std::move(gates);
		}
		return out;
	}

	/**
	 * Back-propagates dL/d(eps_hat). `dcemb_extra` (cond_embed x B, may be
	 * empty) is an additional gradient on the condition embedding, used by
	 * the prompt pull term.
	 */
	void backward(const ParamStore &store, const Cache &cache, const Matrix &dout, const Matrix &dcemb_extra,
	              Gradients &grads) const
	{
		const auto B = cache.h.cols();
		if (dout.rows() != m_cfg.length || dout.cols() != B)
			throw ShapeError("denoiser backward: output gradient shape mismatch");
		Matrix dh = Matrix::Zero(cache.h.rows(), B);
		Matrix dg(m_cfg.experts, B);
		for (std::size_t i = 0; i < static_cast<std::size_t>(m_cfg.experts); ++i) {
			const auto ii = static_cast<Eigen::Index>(i);
			const Matrix de = (dout.array().rowwise() * cache.gates.row(ii).array()).matrix();
			dh += m_experts[i].backward(store, cache.experts[i], de, grads);
			dg.row(ii) = dout.cwiseProduct(cache.expert_out[i]).colwise().sum();
		}
		dh += m_gate.backward(store, cache.gate, nn::softmax_backward(cache.gates, dg), grads);

		const int L = m_cfg.length;
		const int off_t = L;
		const int off_c = off_t + m_cfg.time_dim;
		const int off_p = off_c + m_cfg.cond_embed + 2 * L;
		m_time.backward(store, cache.time, dh.middleRows(off_t, m_cfg.time_dim), grads);

		Matrix dcemb = dh.middleRows(off_c, m_cfg.cond_embed);
		if (dcemb_extra.size())
			dcemb += dcemb_extra;
		Matrix dnull = Matrix::Zero(m_cfg.cond_embed, 1);
		for (Eigen::Index b = 0; b < B; ++b)
			if (cache.uncond[static_cast<std::size_t>(b)]) {
				dnull.col(0) += dcemb.col(b);
				dcemb.col(b).setZero();
			}
		grads.accumulate("null_cond", dnull);
		if (cache.cond_uses > 0)
			m_cond.backward(store, cache.cond, dcemb, grads);

		if (m_cfg.prompt_memory) {
			Matrix dvalues = Matrix::Zero(m_cfg.prompt_dim, m_cfg.prompt_pool);
			for (Eigen::Index b = 0; b < B; ++b) {
				const auto &idx = cache.retrieved[static_cast<std::size_t>(b)];
				for (std::size_t s = 0; s < idx.size(); ++s)
					dvalues.col(idx[s]) +=
					    dh.block(off_p + static_cast<Eigen::Index>(s) * m_cfg.prompt_dim, b, m_cfg.prompt_dim, 1);
			}
			grads.accumulate("prompt.values", dvalues);
		}
	}

	/// pull_weight * mean_b sum_{k retrieved} (1 - cos(q_b, key_k)); writes dL/dq and key gradients.
	double pull_loss(const ParamStore &store, const Cache &cache, Matrix *dq, Gradients *grads) const
	{
		const auto B = cache.cemb.cols();
		if (dq)
			*dq = Matrix::Zero(m_cfg.cond_embed, B);
		if (!m_cfg.prompt_memory || m_cfg.pull_weight == 0.0 || B == 0)
			return 0.0;
		const Matrix &keys = store.value("prompt.keys");
		Matrix dkeys = Matrix::Zero(keys.rows(), keys.cols());
		const double w = m_cfg.pull_weight / static_cast<double>(B);
		double loss = 0.0;
		Eigen::VectorXd gq, gk;
		for (Eigen::Index b = 0; b < B; ++b) {
			const Eigen::VectorXd q = cache.cemb.col(b);
			for (int k : cache.retrieved[static_cast<std::size_t>(b)]) {
				loss += w * (1.0 - cosine(q, keys.col(k)));
				cosine_distance_grad(q, keys.col(k), gq, gk);
				if (dq)
					dq->col(b) += w * gq;
				dkeys.col(k) += w * gk;
			}
		}
		if (grads)
			grads->accumulate("prompt.keys", dkeys);
		return loss;
	}

	struct Loss
	{
		double total = 0.0;
		double mse = 0.0;
		double pull = 0.0;
	};

	/// Masked noise-prediction error plus the pull term; gradients into `grads` when given.
	Loss loss(const ParamStore &store, const DenoiseInput &in, const Matrix &eps, Gradients *grads = nullptr) const
	{
		Cache cache;
		const Matrix pred = forward(store, in, &cache);
		Matrix dpred;
		Loss l;
		l.mse = nn::masked_mse(pred, eps, in.mask, grads ? &dpred : nullptr);
		Matrix dq;
		l.pull = pull_loss(store, cache, grads ? &dq : nullptr, grads);
		l.total = l.mse + l.pull;
		if (grads)
			backward(store, cache, dpred, dq, *grads);
		return l;
	}

	// -- low-rank adaptation -------------------------------------------------

	/// Freezes every tensor, then attaches adapters to the layers whose name
	/// starts with one of `prefixes`.
	void attach_lora(ParamStore &store, const std::vector<std::string> &prefixes, nn::LoraSpec spec, Rng &rng)
	{
		std::vector<nn::Dense *> targets;
		for (auto *l : all_layers())
			for (const auto &p : prefixes)
				if (l->name().rfind(p, 0) == 0) {
					targets.push_back(l);
					break;
				}
		if (targets.empty())
			throw ConfigError("lora.layers", "no layer matches the requested prefixes");
		for (auto *l : targets)
			if (spec.rank < 1 || spec.rank > std::min(l->in(), l->out()))
				throw ConfigError("lora.rank", "rank " + std::to_string(spec.rank) +
				                                   " must lie in [1, min(d_in, d_out)] for layer " + l->name());
		store.freeze_all();
		for (auto *l : targets)
			l->attach_lora(store, spec, rng);
	}

	bool has_lora() const
	{
		for (auto *l : const_cast<Denoiser *>(this)->all_layers())
			if (l->lora())
				return true;
		return false;
	}

	void merge_lora(ParamStore &store)
	{
		for (auto *l : all_layers())
			if (l->lora())
				l->merge_lora(store);
	}

	nlohmann::json lora_manifest() const
	{
		nlohmann::json j = nlohmann::json::object();
		for (auto *l : const_cast<Denoiser *>(this)->all_layers())
			if (l->lora())
				j[l->name()] = {{"rank", l->lora()->rank}, {"alpha", l->lora()->alpha}};
		return j;
	}

	void restore_lora(const nlohmann::json &j)
	{
		for (auto *l : all_layers())
			if (j.contains(l->name()))
				l->restore_lora(nn::LoraSpec{j[l->name()].at("rank").get<int>(), j[l->name()].at("alpha").get<double>()});
	}

	std::vector<nn::Dense *> all_layers()
	{
		std::vector<nn::Dense *> out;
		for (auto *m : mlps())
			for (auto &l : m->layers())
				out.push_back(&l);
		return out;
	}

private:
	std::vector<nn::Mlp *> mlps()
	{
		std::vector<nn::Mlp *> out = {&m_time, &m_cond};
		for (auto &e : m_experts)
			out.push_back(&e);
		out.push_back(&m_gate);
		return out;
	}

	void check(const DenoiseInput &in) const
	{
		const auto B = in.batch();
		const auto L = m_cfg.length;
		if (in.x_t.rows() != L)
			throw ShapeError("denoiser: x_t has " + std::to_string(in.x_t.rows()) + " rows, expected " + std::to_string(L));
		if (in.cond.rows() != m_cfg.cond_dim || in.cond.cols() != B)
			throw ShapeError("denoiser: condition must be " + std::to_string(m_cfg.cond_dim) + " x batch, got " +
			                 std::to_string(in.cond.rows()) + " x " + std::to_string(in.cond.cols()));
		if (in.mask.rows() != L || in.mask.cols() != B || in.context.rows() != L || in.context.cols() != B)
			throw ShapeError("denoiser: mask and context must be length x batch");
		if (static_cast<Eigen::Index>(in.t.size()) != B || static_cast<Eigen::Index>(in.uncond.size()) != B)
			throw ShapeError("denoiser: one step and one guidance flag per column required");
	}

	DenoiserConfig m_cfg;
	nn::Mlp m_time;
	nn::Mlp m_cond;
	std::vector<nn::Mlp> m_experts;
	nn::Mlp m_gate;
};

} // namespace netwm::diffusion
