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
 * \file netwm/nn/optim.hpp
 *
 * \brief Adam with per-tensor bias correction, and a central-difference
 * gradient checker.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/nn/params.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace netwm::nn {

struct AdamConfig
{
	double lr = 1e-3;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double eps = 1e-8;
	/// Global-norm clip; <= 0 disables.
	double clip_norm = 0.0;
};

inline double global_norm(const Gradients &g)
{
	double s = 0.0;
	for (const auto &[_, m] : g)
		s += m.squaredNorm();
	return std::sqrt(s);
}

/// One Adam step over every trainable tensor that has a gradient. Frozen
/// tensors and tensors without a gradient are left bit-identical.
inline void adam_step(ParamStore &store, const Gradients &grads, const AdamConfig &cfg)
{
	for (const auto &[name, g] : grads)
		if (!g.allFinite())
			throw TrainingError("non-finite gradient for '" + name + "'");
	double scale = 1.0;
	if (cfg.clip_norm > 0.0) {
		const double n = global_norm(grads);
		if (n > cfg.clip_norm)
			scale = cfg.clip_norm / n;
	}
	for (const auto &[name, g] : grads) {
		if (!store.contains(name) || !store.at(name).trainable)
			continue;
		Param &p = store.mutable_at(name);
		if (g.rows() != p.value.rows() || g.cols() != p.value.cols())
			throw ShapeError("gradient for '" + name + "' does not match the parameter shape");
		++p.steps;
		p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * scale * g;
		p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * (scale * g).cwiseProduct(scale * g);
		const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.steps));
		const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.steps));
		p.value.array() -= cfg.lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg.eps);
	}
}

/// Largest elementwise relative error |a - n| / max(|a|, |n|, floor) between
/// `analytic` gradients and central differences of `loss` over every
/// trainable scalar. Parameters are restored afterwards.
inline double finite_difference_check(ParamStore &store, const std::function<double()> &loss,
                                      const Gradients &analytic, double eps = 1e-5, double floor = 1e-6)
{
	double worst = 0.0;
	std::vector<std::string> names;
	for (const auto &[name, p] : store)
		if (p.trainable)
			names.push_back(name);
	for (const auto &name : names) {
		const Eigen::Index n = store.at(name).value.size();
		for (Eigen::Index i = 0; i < n; ++i) {
			double &x = store.mutable_at(name).value.data()[i];
			const double orig = x;
			x = orig + eps;
			store.touch();
			const double up = loss();
			x = orig - eps;
			store.touch();
			const double down = loss();
			x = orig;
			store.touch();
			const double num = (up - down) / (2.0 * eps);
			const double an = analytic.contains(name) ? analytic.at(name).data()[i] : 0.0;
			const double err = std::abs(an - num) / std::max({std::abs(an), std::abs(num), floor});
			worst = std::max(worst, err);
		}
	}
	return worst;
}

} // namespace netwm::nn
