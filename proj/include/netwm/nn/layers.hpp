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
 * \file netwm/nn/layers.hpp
 *
 * \brief Dense layers (with optional low-rank adapter), MLPs and softmax.
 *
 * Activations are stored column-wise: a batch of B inputs of width d is a
 * d x B matrix. Backward passes consume the cache written by the matching
 * forward pass and accumulate parameter gradients into a Gradients object.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/nn/params.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace netwm::nn {

enum class Activation { linear, relu, tanh };

inline Matrix activate(Activation a, const Matrix &z)
{
	switch (a) {
	case Activation::linear: return z;
	case Activation::relu: return z.cwiseMax(0.0);
	case Activation::tanh: return z.array().tanh().matrix();
	}
	return z;
}

/// dL/dz given dL/dy, the pre-activation z and the output y.
inline Matrix activate_backward(Activation a, const Matrix &z, const Matrix &y, const Matrix &dy)
{
	switch (a) {
	case Activation::linear: return dy;
	case Activation::relu: return (z.array() > 0.0).select(dy, 0.0);
	case Activation::tanh: return (dy.array() * (1.0 - y.array().square())).matrix();
	}
	return dy;
}

struct LoraSpec
{
	int rank = 0;
	double alpha = 1.0;
	double scale() const { return alpha / rank; }
};

/**
 * y = act(W x + b [+ (alpha/r) B A x]).
 *
 * Parameters live in the ParamStore under `<name>.W`, `<name>.b` and, while
 * an adapter is attached, `<name>.lora_A` (r x in) and `<name>.lora_B`
 * (out x r).
 */
class Dense
{
public:
	struct Cache
	{
		Matrix x;
		Matrix z;
		Matrix y;
		Matrix ax;
		std::uint64_t revision = 0;
		bool valid = false;
	};

	Dense() = default;
	Dense(std::string name, int in, int out, Activation act) : m_name(std::move(name)), m_in(in), m_out(out), m_act(act) {}

	void init(ParamStore &store, Rng &rng) const
	{
		store.add(m_name + ".W", glorot(m_out, m_in, rng));
		store.add(m_name + ".b", Matrix::Zero(m_out, 1));
	}

	const std::string &name() const noexcept { return m_name; }
	int in() const noexcept { return m_in; }
	int out() const noexcept { return m_out; }
	Activation activation() const noexcept { return m_act; }
	const std::optional<LoraSpec> &lora() const noexcept { return m_lora; }
	std::string weight_name() const { return m_name + ".W"; }
	std::string bias_name() const { return m_name + ".b"; }
	std::string lora_a_name() const { return m_name + ".lora_A"; }
	std::string lora_b_name() const { return m_name + ".lora_B"; }

	/// Adds a zero-initialized B and random A; freezes W and b.
	void attach_lora(ParamStore &store, LoraSpec spec, Rng &rng)
	{
		if (spec.rank <= 0 || spec.rank > std::min(m_in, m_out))
			throw ConfigError("lora.rank", "rank " + std::to_string(spec.rank) + " must lie in [1, min(d_in, d_out)] = [1, " +
			                                   std::to_string(std::min(m_in, m_out)) + "] for layer " + m_name);
		if (m_lora)
			throw UsageError("layer " + m_name + " already has an adapter");
		store.add(lora_a_name(), gaussian(spec.rank, m_in, 1.0 / std::sqrt(static_cast<double>(m_in)), rng));
		store.add(lora_b_name(), Matrix::Zero(m_out, spec.rank));
		store.set_trainable(weight_name(), false);
		store.set_trainable(bias_name(), false);
		m_lora = spec;
	}

	/// Folds (alpha/r) B A into W and removes the adapter.
	void merge_lora(ParamStore &store)
	{
		if (!m_lora)
			throw UsageError("layer " + m_name + " has no adapter to merge");
		const Matrix delta = m_lora->scale() * store.value(lora_b_name()) * store.value(lora_a_name());
		store.mutable_at(weight_name()).value += delta;
		store.erase(lora_a_name());
		store.erase(lora_b_name());
		m_lora.reset();
	}

	/// Re-declares an adapter whose tensors are already in the store (checkpoint load).
	void restore_lora(std::optional<LoraSpec> spec) { m_lora = spec; }

	/// Low-rank contribution (alpha/r) B A x alone.
	Matrix lora_delta(const ParamStore &store, const Matrix &x) const
	{
		if (!m_lora)
			return Matrix::Zero(m_out, x.cols());
		return m_lora->scale() * (store.value(lora_b_name()) * (store.value(lora_a_name()) * x));
	}

	Matrix forward(const ParamStore &store, const Matrix &x, Cache *cache = nullptr) const
	{
		if (x.rows() != m_in)
			throw ShapeError("layer " + m_name + " expects input width " + std::to_string(m_in) + ", got " +
			                 std::to_string(x.rows()));
		Matrix z = store.value(weight_name()) * x;
		z.colwise() += store.value(bias_name()).col(0);
		Matrix ax;
		if (m_lora) {
			ax = store.value(lora_a_name()) * x;
			z.noalias() += m_lora->scale() * (store.value(lora_b_name()) * ax);
		}
		Matrix y = activate(m_act, z);
		if (cache) {
			cache->x = x;
			cache->z = std::move(z);
			cache->y = y;
			cache->ax = std::move(ax);
			cache->revision = store.revision();
			cache->valid = true;
		}
		return y;
	}

	/// Returns dL/dx. Gradients of frozen tensors are still accumulated;
	/// the optimizer ignores them.
	Matrix backward(const ParamStore &store, const Cache &cache, const Matrix &dy, Gradients &grads) const
	{
		if (!cache.valid || cache.revision != store.revision())
			throw UsageError("stale forward cache for layer " + m_name);
		if (dy.rows() != m_out || dy.cols() != cache.x.cols())
			throw ShapeError("layer " + m_name + " backward: gradient shape mismatch");
		const Matrix dz = activate_backward(m_act, cache.z, cache.y, dy);
		grads.accumulate(weight_name(), dz * cache.x.transpose());
		grads.accumulate(bias_name(), dz.rowwise().sum());
		Matrix dx = store.value(weight_name()).transpose() * dz;
		if (m_lora) {
			const double s = m_lora->scale();
			const Matrix &a = store.value(lora_a_name());
			const Matrix &b = store.value(lora_b_name());
			const Matrix btdz = b.transpose() * dz;
			grads.accumulate(lora_b_name(), s * dz * cache.ax.transpose());
			grads.accumulate(lora_a_name(), s * btdz * cache.x.transpose());
			dx.noalias() += s * (a.transpose() * btdz);
		}
		return dx;
	}

private:
	std::string m_name;
	int m_in = 0;
	int m_out = 0;
	Activation m_act = Activation::linear;
	std::optional<LoraSpec> m_lora;
};

/// Layer widths plus one activation for hidden layers and one for the output.
struct MlpSpec
{
	std::vector<int> widths;
	Activation hidden = Activation::relu;
	Activation output = Activation::linear;
};

class Mlp
{
public:
	using Cache = std::vector<Dense::Cache>;

	Mlp() = default;
	Mlp(const std::string &name, const MlpSpec &spec)
	{
		if (spec.widths.size() < 2)
			throw ConfigError(name, "an MLP needs at least input and output widths");
		for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
			const bool last = i + 2 == spec.widths.size();
			m_layers.emplace_back(name + "." + std::to_string(i), spec.widths[i], spec.widths[i + 1],
			                      last ? spec.output : spec.hidden);
		}
	}

	void init(ParamStore &store, Rng &rng) const
	{
		for (const auto &l : m_layers)
			l.init(store, rng);
	}

	int in() const { return m_layers.front().in(); }
	int out() const { return m_layers.back().out(); }
	std::vector<Dense> &layers() noexcept { return m_layers; }
	const std::vector<Dense> &layers() const noexcept { return m_layers; }

	Matrix forward(const ParamStore &store, const Matrix &x, Cache *cache = nullptr) const
	{
		if (cache)
			cache->resize(m_layers.size());
		Matrix h = x;
		for (std::size_t i = 0; i < m_layers.size(); ++i)
			h = m_layers[i].forward(store, h, cache ? &(*cache)[i] : nullptr);
		return h;
	}

	Matrix backward(const ParamStore &store, const Cache &cache, const Matrix &dy, Gradients &grads) const
	{
		if (cache.size() != m_layers.size())
			throw UsageError("MLP cache does not match the network");
		Matrix g = dy;
		for (std::size_t i = m_layers.size(); i-- > 0;)
			g = m_layers[i].backward(store, cache[i], g, grads);
		return g;
	}

private:
	std::vector<Dense> m_layers;
};

/// Column-wise softmax.
inline Matrix softmax(const Matrix &logits)
{
	Matrix out(logits.rows(), logits.cols());
	for (Eigen::Index j = 0; j < logits.cols(); ++j) {
		const double mx = logits.col(j).maxCoeff();
		const Eigen::ArrayXd e = (logits.col(j).array() - mx).exp();
		out.col(j) = (e / e.sum()).matrix();
	}
	return out;
}

/// dL/dlogits from dL/dp for column-wise softmax output p.
inline Matrix softmax_backward(const Matrix &p, const Matrix &dp)
{
	Matrix out(p.rows(), p.cols());
	for (Eigen::Index j = 0; j < p.cols(); ++j) {
		const double dot = p.col(j).dot(dp.col(j));
		out.col(j) = (p.col(j).array() * (dp.col(j).array() - dot)).matrix();
	}
	return out;
}

inline Matrix log_softmax(const Matrix &logits)
{
	Matrix out(logits.rows(), logits.cols());
	for (Eigen::Index j = 0; j < logits.cols(); ++j) {
		const double mx = logits.col(j).maxCoeff();
		const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
		out.col(j) = (logits.col(j).array() - lse).matrix();
	}
	return out;
}

/// Mean of squared differences over the entries where `weight` is nonzero,
/// with the gradient wrt `pred` written to `dpred` when given.
inline double masked_mse(const Matrix &pred, const Matrix &target, const Matrix &weight, Matrix *dpred = nullptr)
{
	const double n = weight.sum();
	const Matrix diff = (pred - target).cwiseProduct(weight);
	if (dpred)
		*dpred = n > 0.0 ? Matrix(2.0 * diff / n) : Matrix(Matrix::Zero(pred.rows(), pred.cols()));
	return n > 0.0 ? diff.cwiseProduct(pred - target).sum() / n : 0.0;
}

} // namespace netwm::nn
