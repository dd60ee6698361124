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
 * \file netwm/agent/policy.hpp
 *
 * \brief Factorized categorical policy and the REINFORCE update.
 *
 * An MLP maps an observation to C x K logits. Cell c draws its choice from
 * softmax(logits[c*K .. c*K+K)) independently of the other cells, so the
 * joint log-probability is the sum of per-cell log-probabilities.
 */

#pragma once

#include <netwm/agent/action.hpp>
#include <netwm/common.hpp>
#include <netwm/nn/layers.hpp>
#include <netwm/nn/optim.hpp>
#include <netwm/nn/params.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace netwm::agent {

using nn::Matrix;

struct PolicyConfig
{
	std::vector<int> hidden = {64};
	std::vector<double> bias_levels = default_bias_levels();
};

class Policy
{
public:
	Policy() = default;
	Policy(int obs_dim, int n_cells, PolicyConfig cfg) : m_cfg(std::move(cfg)), m_obs(obs_dim), m_cells(n_cells)
	{
		if (obs_dim < 1 || n_cells < 1)
			throw ConfigError("policy", "observation width and cell count must be positive");
		if (m_cfg.bias_levels.empty())
			throw ConfigError("agent.bias_levels", "at least one bias level required");
		nn::MlpSpec spec;
		spec.widths.push_back(obs_dim);
		for (int h : m_cfg.hidden) {
			if (h < 1)
				throw ConfigError("agent.hidden", "layer widths must be positive");
			spec.widths.push_back(h);
		}
		spec.widths.push_back(n_cells * n_choices());
		spec.hidden = nn::Activation::tanh;
		m_net = nn::Mlp("policy", spec);
	}

	void init(nn::ParamStore &store, Rng &rng) const { m_net.init(store, rng); }

	int obs_dim() const noexcept { return m_obs; }
	int n_cells() const noexcept { return m_cells; }
	int n_choices() const noexcept { return 1 + static_cast<int>(m_cfg.bias_levels.size()); }
	const PolicyConfig &config() const noexcept { return m_cfg; }

	/// (C*K) x B logits.
	Matrix logits(const nn::ParamStore &store, const Matrix &obs, nn::Mlp::Cache *cache = nullptr) const
	{
		if (obs.rows() != m_obs)
			throw ShapeError("policy expects observations of width " + std::to_string(m_obs) + ", got " +
			                 std::to_string(obs.rows()));
		return m_net.forward(store, obs, cache);
	}

	/// K x C choice probabilities for one observation.
	Matrix probabilities(const nn::ParamStore &store, const Eigen::VectorXd &obs) const
	{
		const Matrix z = logits(store, obs);
		return nn::softmax(Eigen::Map<const Matrix>(z.data(), n_choices(), m_cells));
	}

	static std::vector<int> sample(const Matrix &probs, Rng &rng)
	{
		std::uniform_real_distribution<double> u(0.0, 1.0);
		std::vector<int> out;
		for (Eigen::Index c = 0; c < probs.cols(); ++c) {
			const double x = u(rng);
			double acc = 0.0;
			int ch = static_cast<int>(probs.rows()) - 1;
			for (Eigen::Index k = 0; k < probs.rows(); ++k) {
				acc += probs(k, c);
				if (x < acc) {
					ch = static_cast<int>(k);
					break;
				}
			}
			out.push_back(ch);
		}
		return out;
	}

	/// Most likely choice per cell (lowest index on ties).
	static std::vector<int> mode(const Matrix &probs)
	{
		std::vector<int> out;
		for (Eigen::Index c = 0; c < probs.cols(); ++c) {
			Eigen::Index k = 0;
			probs.col(c).maxCoeff(&k);
			out.push_back(static_cast<int>(k));
		}
		return out;
	}

	static double log_prob(const Matrix &probs, const std::vector<int> &choices)
	{
		if (static_cast<Eigen::Index>(choices.size()) != probs.cols())
			throw ShapeError("one choice per cell required");
		double lp = 0.0;
		for (Eigen::Index c = 0; c < probs.cols(); ++c)
			lp += std::log(probs(choices[static_cast<std::size_t>(c)], c));
		return lp;
	}

	/// Sum of per-cell entropies.
	static double entropy(const Matrix &probs)
	{
		double h = 0.0;
		for (Eigen::Index i = 0; i < probs.size(); ++i)
			if (probs.data()[i] > 0.0)
				h -= probs.data()[i] * std::log(probs.data()[i]);
		return h;
	}

	Action to_action(const std::vector<int> &choices) const { return action_from_choices(choices, m_cfg.bias_levels); }

	/**
	 * Surrogate loss
	 *
	 *   L = -(1/B) sum_b [ w_b log pi(a_b | o_b) + beta H(pi(. | o_b)) ]
	 *
	 * whose gradient is the REINFORCE estimator when w_b are advantages.
	 * The gradient is accumulated into `grads` when given.
	 */
	double surrogate_loss(const nn::ParamStore &store, const Matrix &obs, const std::vector<std::vector<int>> &choices,
	                      const std::vector<double> &weights, double entropy_coef, nn::Gradients *grads) const
	{
		const auto B = obs.cols();
		if (static_cast<Eigen::Index>(choices.size()) != B || static_cast<Eigen::Index>(weights.size()) != B)
			throw ShapeError("surrogate loss: one choice vector and weight per observation");
		nn::Mlp::Cache cache;
		const Matrix z = logits(store, obs, grads ? &cache : nullptr);
		const int K = n_choices();
		Matrix dz(z.rows(), B);
		double loss = 0.0;
		for (Eigen::Index b = 0; b < B; ++b) {
			const auto &ch = choices[static_cast<std::size_t>(b)];
			if (static_cast<int>(ch.size()) != m_cells)
				throw ShapeError("one choice per cell required");
			const double w = weights[static_cast<std::size_t>(b)];
			for (int c = 0; c < m_cells; ++c) {
				const Eigen::VectorXd zc = z.col(b).segment(c * K, K);
				const Eigen::VectorXd lp = nn::log_softmax(zc);
				const Eigen::VectorXd p = lp.array().exp();
				const double h = -(p.array() * lp.array()).sum();
				const int a = ch[static_cast<std::size_t>(c)];
				loss -= (w * lp(a) + entropy_coef * h) / static_cast<double>(B);
				for (int k = 0; k < K; ++k) {
					const double dlogp = (k == a ? 1.0 : 0.0) - p(k);
					const double dh = -p(k) * (lp(k) + h);
					dz(c * K + k, b) = -(w * dlogp + entropy_coef * dh) / static_cast<double>(B);
				}
			}
		}
		if (grads)
			m_net.backward(store, cache, dz, *grads);
		return loss;
	}

private:
	PolicyConfig m_cfg;
	int m_obs = 0;
	int m_cells = 0;
	nn::Mlp m_net;
};

// ---------------------------------------------------------------------------

struct Step
{
	Eigen::VectorXd obs;
	std::vector<int> choices;
	double reward = 0.0;
	double log_prob = 0.0;
};

struct Trajectory
{
	std::vector<Step> steps;

	double episode_return() const
	{
		double r = 0.0;
		for (const auto &s : steps)
			r += s.reward;
		return r;
	}
};

struct ReinforceConfig
{
	double lr = 3e-3;
	/// Discount for reward-to-go. Decisions do not change later states, so 0 is the default.
	double gamma = 0.0;
	/// Running baseline b_t <- m b_t + (1 - m) mean_batch(G_t), per step index.
	double baseline_momentum = 0.9;
	double entropy_coef = 0.0;
	double clip_norm = 0.0;

	void validate() const
	{
		if (!(lr > 0.0))
			throw ConfigError("agent.lr", "must be positive");
		if (!(gamma >= 0.0 && gamma <= 1.0))
			throw ConfigError("agent.gamma", "must lie in [0, 1]");
		if (!(baseline_momentum >= 0.0 && baseline_momentum < 1.0))
			throw ConfigError("agent.baseline_momentum", "must lie in [0, 1)");
		if (entropy_coef < 0.0)
			throw ConfigError("agent.entropy_coef", "must be >= 0");
	}
};

struct UpdateStats
{
	double mean_return = 0.0;
	/// Mean per-step reward (episode utility) over the batch.
	double mean_utility = 0.0;
	double entropy = 0.0;
	double grad_norm = 0.0;
};

/// Reward-to-go per step.
inline std::vector<double> returns_to_go(const Trajectory &t, double gamma)
{
	std::vector<double> g(t.steps.size());
	double acc = 0.0;
	for (std::size_t i = t.steps.size(); i-- > 0;) {
		acc = t.steps[i].reward + gamma * acc;
		g[i] = acc;
	}
	return g;
}

class Reinforce
{
public:
	Reinforce() = default;
	explicit Reinforce(ReinforceConfig cfg) : m_cfg(cfg) { m_cfg.validate(); }

	const std::vector<double> &baseline() const noexcept { return m_baseline; }

	UpdateStats update(const Policy &policy, nn::ParamStore &store, const std::vector<Trajectory> &batch)
	{
		if (batch.empty())
			throw UsageError("policy update needs at least one trajectory");
		std::size_t horizon = 0;
		for (const auto &t : batch) {
			horizon = std::max(horizon, t.steps.size());
			for (const auto &s : t.steps)
				if (!std::isfinite(s.reward))
					throw TrainingError("non-finite reward in trajectory");
		}

		std::vector<std::vector<double>> G;
		std::vector<double> sum(horizon, 0.0);
		std::vector<int> count(horizon, 0);
		UpdateStats st;
		std::size_t n_steps = 0;
		for (const auto &t : batch) {
			G.push_back(returns_to_go(t, m_cfg.gamma));
			for (std::size_t i = 0; i < t.steps.size(); ++i) {
				sum[i] += G.back()[i];
				++count[i];
				st.mean_utility += t.steps[i].reward;
			}
			n_steps += t.steps.size();
			st.mean_return += t.episode_return() / static_cast<double>(batch.size());
		}
		st.mean_utility /= static_cast<double>(std::max<std::size_t>(n_steps, 1));
		if (m_baseline.size() < horizon) {
			const auto old = m_baseline.size();
			m_baseline.resize(horizon);
			for (std::size_t i = old; i < horizon; ++i)
				m_baseline[i] = sum[i] / count[i];
		}

		Matrix obs(policy.obs_dim(), static_cast<Eigen::Index>(n_steps));
		std::vector<std::vector<int>> choices;
		std::vector<double> adv;
		Eigen::Index col = 0;
		for (std::size_t e = 0; e < batch.size(); ++e)
			for (std::size_t i = 0; i < batch[e].steps.size(); ++i) {
				obs.col(col++) = batch[e].steps[i].obs;
				choices.push_back(batch[e].steps[i].choices);
				adv.push_back(G[e][i] - m_baseline[i]);
			}
		for (std::size_t i = 0; i < horizon; ++i)
			m_baseline[i] = m_cfg.baseline_momentum * m_baseline[i] + (1.0 - m_cfg.baseline_momentum) * sum[i] / count[i];

		nn::Gradients grads;
		policy.surrogate_loss(store, obs, choices, adv, m_cfg.entropy_coef, &grads);
		st.grad_norm = nn::global_norm(grads);
		nn::AdamConfig adam;
		adam.lr = m_cfg.lr;
		adam.clip_norm = m_cfg.clip_norm;
		nn::adam_step(store, grads, adam);

		double h = 0.0;
		for (Eigen::Index b = 0; b < obs.cols(); ++b)
			h += Policy::entropy(policy.probabilities(store, obs.col(b)));
		st.entropy = h / static_cast<double>(obs.cols());
		return st;
	}

private:
	ReinforceConfig m_cfg;
	std::vector<double> m_baseline;
};

} // namespace netwm::agent
