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
 * \file netwm/nn/params.hpp
 *
 * \brief Named parameter tensors with Adam state, and matching gradients.
 */

#pragma once

#include <netwm/common.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>

namespace netwm::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Param
{
	Matrix value;
	Matrix m;
	Matrix v;
	/// Adam steps applied to this tensor (bias correction is per tensor).
	std::int64_t steps = 0;
	bool trainable = true;

	void reset_moments()
	{
		m.setZero();
		v.setZero();
		steps = 0;
	}
};

class ParamStore
{
public:
	Param &add(const std::string &name, Matrix init, bool trainable = true)
	{
		if (m_params.count(name))
			throw UsageError("parameter '" + name + "' already exists");
		Param p;
		p.m = Matrix::Zero(init.rows(), init.cols());
		p.v = Matrix::Zero(init.rows(), init.cols());
		p.value = std::move(init);
		p.trainable = trainable;
		++m_revision;
		return m_params.emplace(name, std::move(p)).first->second;
	}

	void erase(const std::string &name)
	{
		m_params.erase(name);
		++m_revision;
	}

	bool contains(const std::string &name) const { return m_params.count(name) != 0; }

	const Param &at(const std::string &name) const
	{
		auto it = m_params.find(name);
		if (it == m_params.end())
			throw LookupError("no parameter named '" + name + "'");
		return it->second;
	}

	/// Mutable access bumps the revision, invalidating forward caches.
	Param &mutable_at(const std::string &name)
	{
		auto it = m_params.find(name);
		if (it == m_params.end())
			throw LookupError("no parameter named '" + name + "'");
		++m_revision;
		return it->second;
	}

	const Matrix &value(const std::string &name) const { return at(name).value; }

	void set_trainable(const std::string &name, bool trainable) { mutable_at(name).trainable = trainable; }

	void freeze_all()
	{
		for (auto &[_, p] : m_params)
			p.trainable = false;
		++m_revision;
	}

	std::size_t scalar_count(bool trainable_only = false) const
	{
		std::size_t n = 0;
		for (const auto &[_, p] : m_params)
			if (!trainable_only || p.trainable)
				n += static_cast<std::size_t>(p.value.size());
		return n;
	}

	std::uint64_t revision() const noexcept { return m_revision; }
	void touch() noexcept { ++m_revision; }

	auto begin() const { return m_params.begin(); }
	auto end() const { return m_params.end(); }
	auto begin() { return m_params.begin(); }
	auto end() { return m_params.end(); }
	std::size_t size() const noexcept { return m_params.size(); }

private:
	std::map<std::string, Param> m_params;
	std::uint64_t m_revision = 0;
};

/// Gradients keyed like the ParamStore they belong to.
class Gradients
{
public:
	void accumulate(const std::string &name, const Matrix &g)
	{
		auto it = m_grads.find(name);
		if (it == m_grads.end())
			m_grads.emplace(name, g);
		else
			it->second += g;
	}

	bool contains(const std::string &name) const { return m_grads.count(name) != 0; }

	const Matrix &at(const std::string &name) const
	{
		auto it = m_grads.find(name);
		if (it == m_grads.end())
			throw LookupError("no gradient for '" + name + "'");
		return it->second;
	}

	Matrix &mutable_at(const std::string &name) { return m_grads.at(name); }

	void scale(double s)
	{
		for (auto &[_, g] : m_grads)
			g *= s;
	}

	void clear() { m_grads.clear(); }
	auto begin() const { return m_grads.begin(); }
	auto end() const { return m_grads.end(); }
	std::size_t size() const noexcept { return m_grads.size(); }

private:
	std::map<std::string, Matrix> m_grads;
};

/// Glorot-uniform initialization for an out x in weight.
inline Matrix glorot(Eigen::Index out, Eigen::Index in, Rng &rng)
{
	const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
	std::uniform_real_distribution<double> u(-limit, limit);
	Matrix w(out, in);
	for (Eigen::Index j = 0; j < w.cols(); ++j)
		for (Eigen::Index i = 0; i < w.rows(); ++i)
			w(i, j) = u(rng);
	return w;
}

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev, Rng &rng)
{
	std::normal_distribution<double> n(0.0, stddev);
	Matrix m(rows, cols);
	for (Eigen::Index j = 0; j < m.cols(); ++j)
		for (Eigen::Index i = 0; i < m.rows(); ++i)
			m(i, j) = n(rng);
	return m;
}

} // namespace netwm::nn
