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
 * \file netwm/diffusion/schedule.hpp
 *
 * \brief Linear beta schedule and the closed-form forward process.
 */

#pragma once

#include <netwm/common.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace netwm::diffusion {

/// Indexed 1..T; entry 0 holds beta = 0 and alpha_bar = 1.
struct NoiseSchedule
{
	int T = 0;
	double beta_min = 0.0;
	double beta_max = 0.0;
	std::vector<double> beta;
	std::vector<double> alpha_bar;

	double alpha(int t) const { return 1.0 - beta[static_cast<std::size_t>(t)]; }
};

inline NoiseSchedule make_schedule(int T = 100, double beta_min = 1e-4, double beta_max = 0.02)
{
	if (T < 1)
		throw ConfigError("schedule.T", "must be >= 1");
	if (!(beta_min > 0.0) || !(beta_max < 1.0) || beta_min > beta_max)
		throw ConfigError("schedule.beta", "need 0 < beta_min <= beta_max < 1");
	NoiseSchedule s;
	s.T = T;
	s.beta_min = beta_min;
	s.beta_max = beta_max;
	s.beta.assign(static_cast<std::size_t>(T) + 1, 0.0);
	s.alpha_bar.assign(static_cast<std::size_t>(T) + 1, 1.0);
	for (int t = 1; t <= T; ++t) {
		const double b = T == 1 ? beta_min : beta_min + (beta_max - beta_min) * (t - 1) / (T - 1);
		s.beta[static_cast<std::size_t>(t)] = b;
		s.alpha_bar[static_cast<std::size_t>(t)] = s.alpha_bar[static_cast<std::size_t>(t) - 1] * (1.0 - b);
	}
	return s;
}

/// sqrt(ab) x0 + sqrt(1 - ab) eps for an explicit alpha_bar.
inline Eigen::MatrixXd q_sample_at(const Eigen::MatrixXd &x0, double alpha_bar, const Eigen::MatrixXd &eps)
{
	if (x0.rows() != eps.rows() || x0.cols() != eps.cols())
		throw ShapeError("q_sample: noise shape differs from x0");
	if (alpha_bar == 1.0)
		return x0;
	if (alpha_bar == 0.0)
		return eps;
	return std::sqrt(alpha_bar) * x0 + std::sqrt(1.0 - alpha_bar) * eps;
}

inline Eigen::MatrixXd q_sample(const Eigen::MatrixXd &x0, int t, const Eigen::MatrixXd &eps, const NoiseSchedule &s)
{
	if (t < 1 || t > s.T)
		throw DomainError("diffusion step " + std::to_string(t) + " outside [1, " + std::to_string(s.T) + "]");
	return q_sample_at(x0, s.alpha_bar[static_cast<std::size_t>(t)], eps);
}

} // namespace netwm::diffusion
