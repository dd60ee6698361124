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
 * \file netwm/data/condition.hpp
 *
 * \brief Fixed condition layout shared by every head, and z-score statistics.
 *
 * Layout (D_c = 13):
 *
 *   0..3   poi one-hot (residential, office, mixed, event)
 *   4, 5   hour-of-day sin / cos of the window start
 *   6      day phase (day mod 7) / 7
 *   7      density
 *   8      demand-profile scalar
 *   9      tx power (dBm)
 *   10     log10 carrier frequency (MHz)
 *   11     log10 distance (km)
 *   12     sleep fraction
 *
 * Entries 7 and 8 depend on the sample kind: for traffic, density is the
 * expected user mass of the cell's area and demand its expected daily peak
 * load (Mbps); for users, density is the square's weight and demand its
 * expected peak rate. Further behavioural features would be appended here.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/oracle/scenario.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace netwm::data {

inline constexpr int condition_dim = 13;

inline const std::array<const char *, condition_dim> &condition_fields()
{
	static const std::array<const char *, condition_dim> names = {
	    "poi_residential", "poi_office", "poi_mixed",      "poi_event",   "hour_sin",
	    "hour_cos",        "day_phase",  "density",        "demand",      "tx_power_dbm",
	    "log10_freq_mhz",  "log10_distance_km", "sleep_fraction"};
	return names;
}

struct ConditionInputs
{
	std::optional<oracle::PoiProfile> poi;
	double hour = 0.0;
	int day = 0;
	double density = 0.0;
	double demand = 0.0;
	double tx_power_dbm = 0.0;
	double carrier_freq_mhz = 1.0;
	double distance_km = 1.0;
	double sleep_fraction = 0.0;
};

inline std::vector<double> encode_condition(const ConditionInputs &in)
{
	std::vector<double> c(condition_dim, 0.0);
	if (in.poi)
		c[static_cast<std::size_t>(*in.poi)] = 1.0;
	const double a = 2.0 * std::numbers::pi * in.hour / 24.0;
	c[4] = std::sin(a);
	c[5] = std::cos(a);
	c[6] = static_cast<double>(in.day % 7) / 7.0;
	c[7] = in.density;
	c[8] = in.demand;
	c[9] = in.tx_power_dbm;
	c[10] = std::log10(in.carrier_freq_mhz);
	c[11] = std::log10(std::max(in.distance_km, 1e-3));
	c[12] = in.sleep_fraction;
	return c;
}

inline constexpr double std_floor = 1e-6;
inline constexpr double condition_clip = 5.0;

/// Per-channel mean and standard deviation.
struct NormalizationStats
{
	std::vector<double> mean;
	std::vector<double> std;

	std::size_t channels() const noexcept { return mean.size(); }
};

/// Statistics over rows of `columns` (one vector per observation, one entry per channel).
inline NormalizationStats compute_stats(const std::vector<std::vector<double>> &rows, std::size_t channels)
{
	NormalizationStats s;
	s.mean.assign(channels, 0.0);
	s.std.assign(channels, std_floor);
	if (rows.empty())
		return s;
	// shifted by the first row so constant channels come out exact
	const auto &ref = rows.front();
	for (const auto &r : rows)
		for (std::size_t k = 0; k < channels; ++k)
			s.mean[k] += r[k] - ref[k];
	for (std::size_t k = 0; k < channels; ++k)
		s.mean[k] = ref[k] + s.mean[k] / static_cast<double>(rows.size());
	std::vector<double> var(channels, 0.0);
	for (const auto &r : rows)
		for (std::size_t k = 0; k < channels; ++k)
			var[k] += (r[k] - s.mean[k]) * (r[k] - s.mean[k]);
	for (std::size_t k = 0; k < channels; ++k)
		s.std[k] = std::max(std::sqrt(var[k] / static_cast<double>(rows.size())), std_floor);
	return s;
}

/// Single-channel statistics over every value of every series.
inline NormalizationStats compute_series_stats(const std::vector<const std::vector<double> *> &series)
{
	double ref = 0.0;
	for (const auto *s : series)
		if (!s->empty()) {
			ref = s->front();
			break;
		}
	double sum = 0.0;
	std::size_t n = 0;
	for (const auto *s : series)
		for (double v : *s) {
			sum += v - ref;
			++n;
		}
	NormalizationStats st{{0.0}, {std_floor}};
	if (n == 0)
		return st;
	st.mean[0] = ref + sum / static_cast<double>(n);
	double var = 0.0;
	for (const auto *s : series)
		for (double v : *s)
			var += (v - st.mean[0]) * (v - st.mean[0]);
	st.std[0] = std::max(std::sqrt(var / static_cast<double>(n)), std_floor);
	return st;
}

/// Normalizes a single-channel series.
inline std::vector<double> normalize(const std::vector<double> &x, const NormalizationStats &s)
{
	std::vector<double> out(x.size());
	for (std::size_t i = 0; i < x.size(); ++i)
		out[i] = (x[i] - s.mean[0]) / s.std[0];
	return out;
}

inline std::vector<double> denormalize(const std::vector<double> &z, const NormalizationStats &s)
{
	std::vector<double> out(z.size());
	for (std::size_t i = 0; i < z.size(); ++i)
		out[i] = z[i] * s.std[0] + s.mean[0];
	return out;
}

/// Per-feature z-score of a condition vector, clipped to [-5, 5].
inline std::vector<double> normalize_condition(const std::vector<double> &c, const NormalizationStats &s)
{
	if (c.size() != s.channels())
		throw ShapeError("condition has " + std::to_string(c.size()) + " entries, stats describe " +
		                 std::to_string(s.channels()));
	std::vector<double> out(c.size());
	for (std::size_t k = 0; k < c.size(); ++k)
		out[k] = std::clamp((c[k] - s.mean[k]) / s.std[k], -condition_clip, condition_clip);
	return out;
}

} // namespace netwm::data
