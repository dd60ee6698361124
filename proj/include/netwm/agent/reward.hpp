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

#pragma once

#include <netwm/common.hpp>
#include <netwm/oracle/network.hpp>

#include <algorithm>
#include <cmath>

namespace netwm::agent {

struct RewardWeights
{
	double lambda_energy = 1.0;
	double lambda_rsrp = 1.0;
	double lambda_drop = 2.0;
	double rsrp_lo_dbm = -120.0;
	double rsrp_hi_dbm = -80.0;

	void validate() const
	{
		if (lambda_energy < 0.0 || lambda_rsrp < 0.0 || lambda_drop < 0.0)
			throw ConfigError("reward.lambda", "weights must be >= 0");
		if (!(lambda_energy + lambda_rsrp > 0.0))
			throw ConfigError("reward.lambda", "lambda_energy + lambda_rsrp must be positive");
		if (!(rsrp_hi_dbm > rsrp_lo_dbm))
			throw ConfigError("reward.rsrp_norm_range", "hi must exceed lo");
	}
};

/// The quantities a reward is computed from; filled from an oracle step or
/// from world-model generated data.
struct StepOutcome
{
	double energy_wh = 0.0;
	/// Always-on energy of the same step.
	double reference_energy_wh = 1.0;
	/// Mean RSRP over served users (ignored when nobody is served).
	double rsrp_avg_dbm = 0.0;
	int total_users = 0;
	int dropped_users = 0;
};

inline StepOutcome outcome_of(const oracle::NetworkState &st, double reference_energy_wh)
{
	return {st.energy_wh, reference_energy_wh, st.rsrp_avg_dbm, st.total_users, st.dropped_users};
}

/// Normalized coverage term in [0, 1]. A step without users is vacuously
/// satisfied; a step whose users are all dropped scores zero.
inline double rsrp_term(const StepOutcome &o, const RewardWeights &w)
{
	if (o.total_users == 0)
		return 1.0;
	if (o.dropped_users >= o.total_users || std::isnan(o.rsrp_avg_dbm))
		return 0.0;
	return std::clamp((o.rsrp_avg_dbm - w.rsrp_lo_dbm) / (w.rsrp_hi_dbm - w.rsrp_lo_dbm), 0.0, 1.0);
}

inline double drop_rate(const StepOutcome &o)
{
	return o.total_users == 0 ? 0.0 : static_cast<double>(o.dropped_users) / o.total_users;
}

/// r = -lE * E/E_ref + lR * rsrp_term - lD * dropped/total
inline double compute_reward(const StepOutcome &o, const RewardWeights &w)
{
	if (!(o.reference_energy_wh > 0.0))
		throw DomainError("reference energy must be positive");
	return -w.lambda_energy * (o.energy_wh / o.reference_energy_wh) + w.lambda_rsrp * rsrp_term(o, w) -
	       w.lambda_drop * drop_rate(o);
}

} // namespace netwm::agent
