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
 * \file netwm/diffusion/head.hpp
 *
 * \brief One generative head: denoiser, schedule and normalization, with
 * masked-reconstruction training and guided, inpainting ancestral sampling.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/data/condition.hpp>
#include <netwm/data/dataset.hpp>
#include <netwm/diffusion/denoiser.hpp>
#include <netwm/diffusion/schedule.hpp>
#include <netwm/nn/checkpoint.hpp>
#include <netwm/nn/optim.hpp>

#include <random>
#include <string>
#include <vector>

namespace netwm::diffusion {

struct TrainConfig
{
	int steps = 1500;
	int batch = 64;
	double lr = 2e-3;
	/// Learning rate decays linearly to lr * lr_final_fraction.
	double lr_final_fraction = 0.1;
	double p_uncond = 0.1;
	/// Probability of drawing a full (long-term) mask; otherwise a suffix mask.
	double long_term_prob = 0.5;
	double clip_norm = 1.0;
	std::uint64_t seed = 1;

	void validate() const
	{
		if (steps < 0)
			throw ConfigError("train.steps", "must be >= 0");
		if (batch < 1)
			throw ConfigError("train.batch", "must be >= 1");
		if (!(lr > 0.0))
			throw ConfigError("train.lr", "must be positive");
		if (!(p_uncond >= 0.0 && p_uncond < 1.0))
			throw ConfigError("train.p_uncond", "must lie in [0, 1)");
		if (!(long_term_prob >= 0.0 && long_term_prob <= 1.0))
			throw ConfigError("train.long_term_prob", "must lie in [0, 1]");
	}
};

/// Random quantities of one training step, drawn up front so the loss is a
/// deterministic function of the parameters.
struct TrainDraws
{
	std::vector<int> t;
	Matrix eps;
	std::vector<std::uint8_t> uncond;
	Matrix mask;
};

inline TrainDraws draw_training(const NoiseSchedule &s, int length, int batch, double p_uncond, double long_term_prob,
                                Rng &rng)
{
	TrainDraws d;
	std::uniform_int_distribution<int> step(1, s.T);
	std::uniform_real_distribution<double> u(0.0, 1.0);
	std::normal_distribution<double> z(0.0, 1.0);
	d.eps.resize(length, batch);
	d.mask.resize(length, batch);
	for (int b = 0; b < batch; ++b) {
		d.t.push_back(step(rng));
		d.uncond.push_back(u(rng) < p_uncond ? 1 : 0);
		int horizon = length;
		if (length > 1 && u(rng) >= long_term_prob)
			horizon = std::uniform_int_distribution<int>(1, length - 1)(rng);
		const auto m = data::make_mask(length > 1 && horizon < length ? data::Task::short_term_prediction
		                                                              : data::Task::long_term_generation,
		                               length, horizon);
		for (int l = 0; l < length; ++l) {
			d.mask(l, b) = m[static_cast<std::size_t>(l)];
			d.eps(l, b) = z(rng);
		}
	}
	return d;
}

/// Noised inputs for a training step: x_t = q_sample(x0, t, eps), context = x0 on revealed positions.
inline DenoiseInput training_input(const Matrix &x0, const Matrix &cond, const TrainDraws &d, const NoiseSchedule &s)
{
	DenoiseInput in;
	in.x_t.resize(x0.rows(), x0.cols());
	for (Eigen::Index b = 0; b < x0.cols(); ++b)
		in.x_t.col(b) = q_sample(x0.col(b), d.t[static_cast<std::size_t>(b)], d.eps.col(b), s);
	in.t = d.t;
	in.cond = cond;
	in.uncond = d.uncond;
	in.mask = d.mask;
	in.context = x0.cwiseProduct((1.0 - d.mask.array()).matrix());
	return in;
}

class Head
{
public:
	Head() = default;
	Head(data::SampleKind kind, DenoiserConfig cfg, NoiseSchedule schedule, data::NormalizationStats series_stats,
	     data::NormalizationStats condition_stats)
		: m_kind(kind), m_denoiser(cfg), m_schedule(std::move(schedule)), m_series(std::move(series_stats)),
		  m_condition(std::move(condition_stats))
	{
		if (static_cast<int>(m_condition.channels()) != cfg.cond_dim)
			throw ShapeError("condition statistics have " + std::to_string(m_condition.channels()) +
			                 " channels, denoiser expects " + std::to_string(cfg.cond_dim));
	}

	void init(std::uint64_t seed)
	{
		m_store = ParamStore{};
		auto rng = make_rng({seed, tag(Stream::init), static_cast<std::uint64_t>(m_kind)});
		m_denoiser.init(m_store, rng);
	}

	data::SampleKind kind() const noexcept { return m_kind; }
	int length() const noexcept { return m_denoiser.config().length; }
	const Denoiser &denoiser() const noexcept { return m_denoiser; }
	Denoiser &denoiser() noexcept { return m_denoiser; }
	const ParamStore &store() const noexcept { return m_store; }
	ParamStore &store() noexcept { return m_store; }
	const NoiseSchedule &schedule() const noexcept { return m_schedule; }
	const data::NormalizationStats &series_stats() const noexcept { return m_series; }
	const data::NormalizationStats &condition_stats() const noexcept { return m_condition; }
	bool trained() const noexcept { return m_trained; }
	void mark_trained(bool v = true) noexcept { m_trained = v; }

	/// Normalized series (L x B) and conditions (D_c x B) of `samples`.
	void normalized_batch(const std::vector<const data::Sample *> &samples, Matrix &x0, Matrix &cond) const
	{
		const auto B = static_cast<Eigen::Index>(samples.size());
		x0.resize(length(), B);
		cond.resize(m_denoiser.config().cond_dim, B);
		for (Eigen::Index b = 0; b < B; ++b) {
			const auto &s = *samples[static_cast<std::size_t>(b)];
			if (static_cast<int>(s.series.size()) != length())
				throw ShapeError("sample length " + std::to_string(s.series.size()) + " differs from head length " +
				                 std::to_string(length()));
			const auto z = data::normalize(s.series, m_series);
			const auto c = data::normalize_condition(s.condition, m_condition);
			for (int l = 0; l < length(); ++l)
				x0(l, b) = z[static_cast<std::size_t>(l)];
			for (std::size_t k = 0; k < c.size(); ++k)
				cond(static_cast<Eigen::Index>(k), b) = c[k];
		}
	}

	Matrix normalized_conditions(const std::vector<std::vector<double>> &raw) const
	{
		Matrix cond(m_denoiser.config().cond_dim, static_cast<Eigen::Index>(raw.size()));
		for (std::size_t b = 0; b < raw.size(); ++b) {
			const auto c = data::normalize_condition(raw[b], m_condition);
			for (std::size_t k = 0; k < c.size(); ++k)
				cond(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)) = c[k];
		}
		return cond;
	}

	/// One optimizer step on a normalized batch; returns the loss before the step.
	double train_step(const Matrix &x0, const Matrix &cond, const TrainDraws &draws, const nn::AdamConfig &adam)
	{
		const auto in = training_input(x0, cond, draws, m_schedule);
		Gradients grads;
		const auto loss = m_denoiser.loss(m_store, in, draws.eps, &grads);
		if (!std::isfinite(loss.total))
			throw TrainingError("non-finite diffusion loss");
		nn::adam_step(m_store, grads, adam);
		if (m_denoiser.config().prompt_memory && m_store.at("prompt.keys").trainable)
			normalize_keys(m_store.mutable_at("prompt.keys").value);
		return loss.total;
	}

	/// Trains on `train` for cfg.steps mini-batches; returns the per-step loss.
	std::vector<double> fit(const data::Dataset &train, const TrainConfig &cfg)
	{
		cfg.validate();
		if (train.samples.empty())
			throw ConfigError("dataset", "training split is empty");
		std::vector<double> curve;
		curve.reserve(static_cast<std::size_t>(cfg.steps));
		std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
		for (int step = 0; step < cfg.steps; ++step) {
			auto rng = make_rng({cfg.seed, tag(Stream::training), static_cast<std::uint64_t>(m_kind),
			                     static_cast<std::uint64_t>(step)});
			std::vector<const data::Sample *> batch;
			for (int b = 0; b < cfg.batch; ++b)
				batch.push_back(&train.samples[pick(rng)]);
			Matrix x0, cond;
			normalized_batch(batch, x0, cond);
			const auto draws = draw_training(m_schedule, length(), cfg.batch, cfg.p_uncond, cfg.long_term_prob, rng);
			nn::AdamConfig adam;
			const double frac = cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 0.0;
			adam.lr = cfg.lr * (1.0 - (1.0 - cfg.lr_final_fraction) * frac);
			adam.clip_norm = cfg.clip_norm;
			curve.push_back(train_step(x0, cond, draws, adam));
		}
		m_trained = true;
		return curve;
	}

	/**
	 * Ancestral sampling in normalized space.
	 *
	 * \param cond normalized conditions, D_c x B
	 * \param mask 1 = generate, L x B
	 * \param context normalized revealed values (ignored where mask = 1)
	 */
	Matrix sample_normalized(const Matrix &cond, const Matrix &mask, const Matrix &context, double guidance_w,
	                         Rng &rng) const
	{
		if (!m_trained)
			throw ModelError("head '" + data::to_string(m_kind) + "' has not been trained or loaded");
		if (guidance_w < 0.0)
			throw ConfigError("guidance_w", "must be >= 0");
		const int L = length();
		const auto B = cond.cols();
		if (mask.rows() != L || mask.cols() != B || context.rows() != L || context.cols() != B)
			throw ShapeError("sample: mask and context must be length x batch");
		const Matrix keep = (1.0 - mask.array()).matrix();
		const Matrix ctx = context.cwiseProduct(keep);
		std::normal_distribution<double> z(0.0, 1.0);
		auto gauss = [&](Eigen::Index r, Eigen::Index c) {
			Matrix m(r, c);
			for (Eigen::Index j = 0; j < c; ++j)
				for (Eigen::Index i = 0; i < r; ++i)
					m(i, j) = z(rng);
			return m;
		};

		const bool guided = guidance_w > 0.0;
		const auto BB = guided ? 2 * B : B;
		DenoiseInput in;
		in.cond.resize(cond.rows(), BB);
		in.mask.resize(L, BB);
		in.context.resize(L, BB);
		in.uncond.assign(static_cast<std::size_t>(BB), 0);
		in.cond.leftCols(B) = cond;
		in.mask.leftCols(B) = mask;
		in.context.leftCols(B) = ctx;
		if (guided) {
			in.cond.rightCols(B) = cond;
			in.mask.rightCols(B) = mask;
			in.context.rightCols(B) = ctx;
			std::fill(in.uncond.begin() + B, in.uncond.end(), 1);
		}

		Matrix x = gauss(L, B);
		x = x.cwiseProduct(mask) + q_sample_at(ctx, m_schedule.alpha_bar.back(), gauss(L, B)).cwiseProduct(keep);
		for (int t = m_schedule.T; t >= 1; --t) {
			in.t.assign(static_cast<std::size_t>(BB), t);
			in.x_t.resize(L, BB);
			in.x_t.leftCols(B) = x;
			if (guided)
				in.x_t.rightCols(B) = x;
			const Matrix out = m_denoiser.forward(m_store, in);
			Matrix eps = out.leftCols(B);
			if (guided)
				eps = (1.0 + guidance_w) * eps - guidance_w * out.rightCols(B);
			const auto tt = static_cast<std::size_t>(t);
			const double beta = m_schedule.beta[tt];
			const double coef = beta / std::sqrt(1.0 - m_schedule.alpha_bar[tt]);
			x = (x - coef * eps) / std::sqrt(1.0 - beta);
			if (t > 1) {
				x += std::sqrt(beta) * gauss(L, B);
				x = x.cwiseProduct(mask) +
				    q_sample_at(ctx, m_schedule.alpha_bar[tt - 1], gauss(L, B)).cwiseProduct(keep);
			} else {
				x = x.cwiseProduct(mask) + ctx;
			}
		}
		if (!x.allFinite())
			throw ModelError("sampling produced non-finite values");
		return x;
	}

	/// Samples in data units. `history` holds raw values where mask = 0.
	Matrix sample(const std::vector<std::vector<double>> &raw_conditions, const Matrix &mask, const Matrix &history,
	              double guidance_w, Rng &rng) const
	{
		const Matrix cond = normalized_conditions(raw_conditions);
		const Matrix ctx = ((history.array() - m_series.mean[0]) / m_series.std[0]).matrix();
		const Matrix z = sample_normalized(cond, mask, ctx, guidance_w, rng);
		return ((z.array() * m_series.std[0]) + m_series.mean[0]).matrix();
	}

	/// Long-term generation: everything masked, no history.
	Matrix generate(const std::vector<std::vector<double>> &raw_conditions, double guidance_w, Rng &rng) const
	{
		const auto B = static_cast<Eigen::Index>(raw_conditions.size());
		return sample(raw_conditions, Matrix::Ones(length(), B), Matrix::Zero(length(), B), guidance_w, rng);
	}

	nlohmann::json manifest() const
	{
		return {{"kind", data::to_string(m_kind)},
		        {"schedule", {{"T", m_schedule.T}, {"beta_min", m_schedule.beta_min}, {"beta_max", m_schedule.beta_max}}},
		        {"D_c", m_denoiser.config().cond_dim},
		        {"L", length()},
		        {"M", m_denoiser.config().experts},
		        {"denoiser", to_json(m_denoiser.config())},
		        {"lora", m_denoiser.lora_manifest()},
		        {"prompt_memory", m_denoiser.config().prompt_memory},
		        {"layout", data::condition_layout()},
		        {"series_stats", data::stats_to_json(m_series)},
		        {"condition_stats", data::stats_to_json(m_condition)},
		        {"trained", m_trained}};
	}

	/// Refuses datasets whose kind, length or condition layout disagree with the head.
	void check_compatible(const data::DatasetBundle &b) const
	{
		if (b.kind != m_kind)
			throw ModelError("dataset kind '" + data::to_string(b.kind) + "' differs from head kind '" +
			                 data::to_string(m_kind) + "'");
		if (b.length != length())
			throw ModelError("dataset length " + std::to_string(b.length) + " differs from model length " +
			                 std::to_string(length()));
		if (static_cast<int>(b.condition_stats.channels()) != m_denoiser.config().cond_dim)
			throw ModelError("dataset D_c " + std::to_string(b.condition_stats.channels()) + " differs from model D_c " +
			                 std::to_string(m_denoiser.config().cond_dim));
	}

	void save(const std::string &path) const { nn::save_checkpoint(path, m_store, manifest()); }

	static Head load(const std::string &path)
	{
		auto ck = nn::load_checkpoint(path);
		const auto &m = ck.manifest;
		try {
			if (m.at("layout") != data::condition_layout())
				throw ModelError("condition layout in '" + path + "' differs from this build (D_c " +
				                 m.at("D_c").dump() + ")");
			const auto &sj = m.at("schedule");
			Head h(data::kind_from_string(m.at("kind").get<std::string>()),
			       denoiser_config_from_json(m.at("denoiser")),
			       make_schedule(sj.at("T").get<int>(), sj.at("beta_min").get<double>(), sj.at("beta_max").get<double>()),
			       data::stats_from_json(m.at("series_stats")), data::stats_from_json(m.at("condition_stats")));
			h.init(0);
			h.m_denoiser.restore_lora(m.at("lora"));
			for (const auto &[name, _] : ck.store)
				if (!h.m_store.contains(name) && name.find(".lora_") != std::string::npos)
					h.m_store.add(name, Matrix::Zero(ck.store.value(name).rows(), ck.store.value(name).cols()));
			nn::assign_checked(h.m_store, ck.store);
			h.m_trained = m.at("trained").get<bool>();
			return h;
		} catch (const nlohmann::json::exception &e) {
			throw FormatError(std::string("malformed model manifest: ") + e.what());
		}
	}

private:
	data::SampleKind m_kind = data::SampleKind::traffic;
	Denoiser m_denoiser;
	NoiseSchedule m_schedule;
	data::NormalizationStats m_series;
	data::NormalizationStats m_condition;
	ParamStore m_store;
	bool m_trained = false;
};

} // namespace netwm::diffusion
