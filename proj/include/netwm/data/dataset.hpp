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
 * \file netwm/data/dataset.hpp
 *
 * \brief Training samples collected from the oracle, masks, splits and the
 * dataset file.
 *
 * Samples keep raw (unnormalized) values; a DatasetBundle carries the
 * statistics of its training split, which the model applies on the fly.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/data/condition.hpp>
#include <netwm/io.hpp>
#include <netwm/oracle/oracle.hpp>
#include <netwm/oracle/radio.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace netwm::data {

enum class SampleKind { traffic, users, rsrp };

inline std::string to_string(SampleKind k)
{
	switch (k) {
	case SampleKind::traffic: return "traffic";
	case SampleKind::users: return "users";
	case SampleKind::rsrp: return "rsrp";
	}
	return "?";
}

inline SampleKind kind_from_string(const std::string &s)
{
	for (auto k : {SampleKind::traffic, SampleKind::users, SampleKind::rsrp})
		if (to_string(k) == s)
			return k;
	throw ConfigError("kinds", "unknown sample kind '" + s + "'");
}

struct Sample
{
	std::vector<double> series;
	std::vector<double> condition;
	/// true = to be generated.
	std::vector<std::uint8_t> mask;
	SampleKind kind = SampleKind::traffic;
	/// Cell id, grid index or measurement index.
	int entity = 0;
	int day = 0;
};

enum class Task { short_term_prediction, long_term_generation };

inline std::vector<std::uint8_t> make_mask(Task task, int length, int horizon)
{
	if (length <= 0)
		throw DomainError("series length must be positive");
	if (task == Task::long_term_generation)
		return std::vector<std::uint8_t>(static_cast<std::size_t>(length), 1);
	if (horizon <= 0 || horizon > length)
		throw DomainError("prediction horizon " + std::to_string(horizon) + " outside [1, " + std::to_string(length) +
		                  "]");
	std::vector<std::uint8_t> m(static_cast<std::size_t>(length), 0);
	std::fill(m.end() - horizon, m.end(), 1);
	return m;
}

inline int series_length(const oracle::ScenarioConfig &s, SampleKind k)
{
	switch (k) {
	case SampleKind::traffic: return 24 / s.traffic_step_hours;
	case SampleKind::users: return 24 / s.user_step_hours;
	case SampleKind::rsrp: return 1;
	}
	return 0;
}

struct Dataset
{
	SampleKind kind = SampleKind::traffic;
	int length = 0;
	std::vector<Sample> samples;

	std::size_t size() const noexcept { return samples.size(); }
};

struct DatasetBundle
{
	SampleKind kind = SampleKind::traffic;
	int length = 0;
	std::uint64_t seed = 0;
	int first_day = 0;
	int n_days = 0;
	NormalizationStats series_stats;
	NormalizationStats condition_stats;
	Dataset train;
	Dataset val;
	Dataset test;
};

// ---------------------------------------------------------------------------
// Condition features derived from the scenario

/// Nearest cell of every grid square (the square's "home" cell).
inline std::vector<int> home_cells(const oracle::ScenarioConfig &s)
{
	std::vector<int> home;
	for (const auto &g : s.grid) {
		int best = 0;
		for (const auto &c : s.cells)
			if (oracle::distance_km(g.position, c.position) <
			    oracle::distance_km(g.position, s.cells[static_cast<std::size_t>(best)].position))
				best = c.id;
		home.push_back(best);
	}
	return home;
}

inline ConditionInputs traffic_condition_inputs(const oracle::Oracle &o, int cell_id, int day)
{
	const auto &s = o.config();
	const auto &cell = o.cell(cell_id);
	const auto home = home_cells(s);
	ConditionInputs in;
	in.poi = cell.poi_profile;
	in.day = day;
	double dist = 0.0;
	int n = 0;
	for (int g = 0; g < o.n_grids(); ++g) {
		if (home[static_cast<std::size_t>(g)] != cell_id)
			continue;
		const auto &gc = o.grid(g);
		in.density += gc.base_users * gc.poi_weight;
		dist += oracle::distance_km(gc.position, cell.position);
		++n;
	}
	double peak = 0.0;
	for (int h = 0; h < 24; h += s.traffic_step_hours)
		peak = std::max(peak, std::min(o.expected_load_fraction(cell_id, h), 1.0));
	in.demand = peak * cell.capacity_mbps;
	in.tx_power_dbm = cell.tx_power_dbm;
	in.carrier_freq_mhz = cell.carrier_freq_mhz;
	in.distance_km = n ? dist / n : oracle::min_distance_km;
	return in;
}

inline ConditionInputs users_condition_inputs(const oracle::Oracle &o, int grid_index, int day)
{
	const auto &s = o.config();
	const auto &g = o.grid(grid_index);
	const auto &cell = o.cell(home_cells(s)[static_cast<std::size_t>(grid_index)]);
	ConditionInputs in;
	in.poi = g.poi_profile;
	in.day = day;
	in.density = g.poi_weight;
	in.demand = g.base_users * g.poi_weight;
	in.tx_power_dbm = cell.tx_power_dbm;
	in.carrier_freq_mhz = cell.carrier_freq_mhz;
	in.distance_km = oracle::distance_km(g.position, cell.position);
	return in;
}

/// A link-level operating point for the RSRP head.
inline ConditionInputs rsrp_condition_inputs(double tx_power_dbm, double freq_mhz, double distance_km)
{
	ConditionInputs in;
	in.tx_power_dbm = tx_power_dbm;
	in.carrier_freq_mhz = freq_mhz;
	in.distance_km = distance_km;
	return in;
}

/// Ranges swept by the drive-test campaign that feeds the RSRP head.
struct MeasurementRanges
{
	double tx_min_dbm = 0.0;
	double tx_max_dbm = 30.0;
	double freq_min_mhz = 700.0;
	double freq_max_mhz = 3500.0;
	double dist_min_km = 0.05;
	double dist_max_km = 5.0;
};

struct Measurement
{
	double tx_power_dbm;
	double freq_mhz;
	double distance_km;
	double rsrp_dbm;
};

/// Measurement `index` of `day`: uniform tx and frequency, log-uniform
/// distance, shadowing with the scenario's sigma.
inline Measurement measure_rsrp(const oracle::ScenarioConfig &s, const MeasurementRanges &r, int day, int index)
{
	auto rng = make_rng({s.seed, tag(Stream::measurement), static_cast<std::uint64_t>(day),
	                     static_cast<std::uint64_t>(index)});
	std::uniform_real_distribution<double> u(0.0, 1.0);
	Measurement m;
	m.tx_power_dbm = r.tx_min_dbm + u(rng) * (r.tx_max_dbm - r.tx_min_dbm);
	m.freq_mhz = r.freq_min_mhz + u(rng) * (r.freq_max_mhz - r.freq_min_mhz);
	m.distance_km = r.dist_min_km * std::pow(r.dist_max_km / r.dist_min_km, u(rng));
	std::normal_distribution<double> z(0.0, 1.0);
	const double shadow = s.shadowing_sigma_db * z(rng);
	oracle::CellConfig cell;
	cell.tx_power_dbm = m.tx_power_dbm;
	cell.carrier_freq_mhz = m.freq_mhz;
	m.rsrp_dbm = oracle::rsrp_dbm(cell, m.distance_km, shadow);
	return m;
}

// ---------------------------------------------------------------------------

struct SplitFractions
{
	double train = 0.8;
	double val = 0.1;
	double test = 0.1;
};

inline void validate(const SplitFractions &f)
{
	if (f.train < 0.0 || f.val < 0.0 || f.test < 0.0)
		throw ConfigError("split_fractions", "fractions must be >= 0");
	if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
		throw ConfigError("split_fractions", "fractions must sum to 1");
}

/// Seeded shuffle then contiguous cut; sizes are rounded train and val
/// counts, the remainder goes to test.
inline std::array<Dataset, 3> split_dataset(const Dataset &d, const SplitFractions &f, std::uint64_t seed)
{
	validate(f);
	std::vector<std::size_t> idx(d.size());
	std::iota(idx.begin(), idx.end(), std::size_t{0});
	auto rng = make_rng({seed, tag(Stream::split), static_cast<std::uint64_t>(d.kind)});
	for (std::size_t i = idx.size(); i > 1; --i) {
		std::uniform_int_distribution<std::size_t> pick(0, i - 1);
		std::swap(idx[i - 1], idx[pick(rng)]);
	}
	const auto n = static_cast<double>(d.size());
	const auto n_train = std::min(d.size(), static_cast<std::size_t>(std::llround(f.train * n)));
	const auto n_val = std::min(d.size() - n_train, static_cast<std::size_t>(std::llround(f.val * n)));
	std::array<Dataset, 3> out;
	for (auto &o : out) {
		o.kind = d.kind;
		o.length = d.length;
	}
	for (std::size_t i = 0; i < idx.size(); ++i) {
		auto &dst = i < n_train ? out[0] : i < n_train + n_val ? out[1] : out[2];
		dst.samples.push_back(d.samples[idx[i]]);
	}
	return out;
}

struct CollectOptions
{
	int first_day = 0;
	int n_days = 1;
	std::vector<SampleKind> kinds = {SampleKind::traffic, SampleKind::users, SampleKind::rsrp};
	int rsrp_per_day = 64;
	MeasurementRanges ranges;
	SplitFractions fractions;
	std::uint64_t seed = 1;
};

/// Raw samples of one kind, one per (cell | grid | measurement, day).
inline Dataset collect_samples(const oracle::Oracle &o, SampleKind kind, int first_day, int n_days,
                               const CollectOptions &opt = {})
{
	const auto &s = o.config();
	Dataset d;
	d.kind = kind;
	d.length = series_length(s, kind);
	const auto full = make_mask(Task::long_term_generation, d.length, d.length);
	for (int day = first_day; day < first_day + n_days; ++day) {
		if (kind == SampleKind::traffic) {
			for (int c = 0; c < o.n_cells(); ++c)
				d.samples.push_back({o.daily_traffic(c, day), encode_condition(traffic_condition_inputs(o, c, day)), full,
				                     kind, c, day});
		} else if (kind == SampleKind::users) {
			for (int g = 0; g < o.n_grids(); ++g)
				d.samples.push_back({o.daily_users(g, day), encode_condition(users_condition_inputs(o, g, day)), full,
				                     kind, g, day});
		} else {
			for (int i = 0; i < opt.rsrp_per_day; ++i) {
				const auto m = measure_rsrp(s, opt.ranges, day, i);
				d.samples.push_back({{m.rsrp_dbm},
				                     encode_condition(rsrp_condition_inputs(m.tx_power_dbm, m.freq_mhz, m.distance_km)),
				                     full,
				                     kind,
				                     i,
				                     day});
			}
		}
	}
	return d;
}

/// Statistics of a training split (series: one channel; conditions: per feature).
inline void fit_stats(DatasetBundle &b)
{
	std::vector<const std::vector<double> *> series;
	std::vector<std::vector<double>> conds;
	for (const auto &smp : b.train.samples) {
		series.push_back(&smp.series);
		conds.push_back(smp.condition);
	}
	b.series_stats = compute_series_stats(series);
	b.condition_stats = compute_stats(conds, condition_dim);
}

inline std::vector<DatasetBundle> collect_dataset(const oracle::Oracle &o, const CollectOptions &opt)
{
	if (opt.kinds.empty())
		throw ConfigError("kinds", "at least one sample kind required");
	if (opt.n_days < 1)
		throw ConfigError("n_days", "must be >= 1");
	if (opt.rsrp_per_day < 1)
		throw ConfigError("rsrp_per_day", "must be >= 1");
	std::vector<DatasetBundle> out;
	for (auto kind : opt.kinds) {
		DatasetBundle b;
		b.kind = kind;
		b.seed = opt.seed;
		b.first_day = opt.first_day;
		b.n_days = opt.n_days;
		const Dataset all = collect_samples(o, kind, opt.first_day, opt.n_days, opt);
		b.length = all.length;
		auto parts = split_dataset(all, opt.fractions, opt.seed);
		b.train = std::move(parts[0]);
		b.val = std::move(parts[1]);
		b.test = std::move(parts[2]);
		fit_stats(b);
		out.push_back(std::move(b));
	}
	return out;
}

// ---------------------------------------------------------------------------
// File format
//
//   magic "NWMDATA\0" | u32 version | u64 header bytes | header JSON |
//   3 x (u64 sample count | samples)
//   sample: i32 entity, i32 day, L doubles series, D_c doubles condition, L mask bytes
//
// The header holds kind, L, D_c, the condition field names and both stats.

inline constexpr char dataset_magic[8] = {'N', 'W', 'M', 'D', 'A', 'T', 'A', '\0'};
inline constexpr std::uint32_t dataset_version = 1;

inline nlohmann::json stats_to_json(const NormalizationStats &s) { return {{"mean", s.mean}, {"std", s.std}}; }

inline NormalizationStats stats_from_json(const nlohmann::json &j)
{
	NormalizationStats s;
	s.mean = j.at("mean").get<std::vector<double>>();
	s.std = j.at("std").get<std::vector<double>>();
	if (s.mean.size() != s.std.size())
		throw FormatError("statistics mean/std lengths differ");
	for (double v : s.std)
		if (!(v > 0.0))
			throw FormatError("non-positive standard deviation in statistics");
	return s;
}

inline nlohmann::json condition_layout()
{
	nlohmann::json names = nlohmann::json::array();
	for (const char *n : condition_fields())
		names.push_back(n);
	return {{"D_c", condition_dim}, {"fields", names}};
}

inline void write_dataset(std::ostream &out, const DatasetBundle &b)
{
	out.write(dataset_magic, 8);
	io::put(out, dataset_version);
	const nlohmann::json header = {{"kind", to_string(b.kind)},
	                               {"L", b.length},
	                               {"layout", condition_layout()},
	                               {"seed", b.seed},
	                               {"first_day", b.first_day},
	                               {"n_days", b.n_days},
	                               {"series_stats", stats_to_json(b.series_stats)},
	                               {"condition_stats", stats_to_json(b.condition_stats)}};
	io::put_string64(out, header.dump());
	for (const Dataset *d : {&b.train, &b.val, &b.test}) {
		io::put(out, static_cast<std::uint64_t>(d->size()));
		for (const auto &s : d->samples) {
			io::put(out, static_cast<std::int32_t>(s.entity));
			io::put(out, static_cast<std::int32_t>(s.day));
			io::put_doubles(out, s.series.data(), s.series.size());
			io::put_doubles(out, s.condition.data(), s.condition.size());
			out.write(reinterpret_cast<const char *>(s.mask.data()), static_cast<std::streamsize>(s.mask.size()));
		}
	}
	if (!out)
		throw FormatError("write failed");
}

inline DatasetBundle read_dataset(std::istream &in)
{
	char magic[8];
	if (!in.read(magic, 8) || std::memcmp(magic, dataset_magic, 8) != 0)
		throw FormatError("not a dataset file (bad magic)");
	const auto version = io::take<std::uint32_t>(in, "version");
	if (version != dataset_version)
		throw FormatError("dataset version mismatch: expected " + std::to_string(dataset_version) + ", found " +
		                  std::to_string(version));
	DatasetBundle b;
	try {
		const auto h = nlohmann::json::parse(io::take_string64(in, "header"));
		b.kind = kind_from_string(h.at("kind").get<std::string>());
		b.length = h.at("L").get<int>();
		if (h.at("layout") != condition_layout())
			throw FormatError("condition layout mismatch: file has D_c=" + h.at("layout").at("D_c").dump() +
			                  ", expected " + std::to_string(condition_dim));
		b.seed = h.at("seed").get<std::uint64_t>();
		b.first_day = h.at("first_day").get<int>();
		b.n_days = h.at("n_days").get<int>();
		b.series_stats = stats_from_json(h.at("series_stats"));
		b.condition_stats = stats_from_json(h.at("condition_stats"));
	} catch (const nlohmann::json::exception &e) {
		throw FormatError(std::string("malformed dataset header: ") + e.what());
	} catch (const ConfigError &e) {
		throw FormatError(e.what());
	}
	if (b.length <= 0)
		throw FormatError("non-positive series length");
	const auto L = static_cast<std::size_t>(b.length);
	const std::uint64_t record = 8 + (L + condition_dim) * sizeof(double) + L;
	for (Dataset *d : {&b.train, &b.val, &b.test}) {
		d->kind = b.kind;
		d->length = b.length;
		const auto n = io::take<std::uint64_t>(in, "sample count");
		if (n > io::remaining(in) / record)
			throw FormatError("truncated file: " + std::to_string(n) + " samples announced");
		d->samples.resize(static_cast<std::size_t>(n));
		for (auto &s : d->samples) {
			s.kind = b.kind;
			s.entity = io::take<std::int32_t>(in, "entity");
			s.day = io::take<std::int32_t>(in, "day");
			s.series.resize(L);
			s.condition.resize(condition_dim);
			s.mask.resize(L);
			io::take_doubles(in, s.series.data(), L, "series");
			io::take_doubles(in, s.condition.data(), condition_dim, "condition");
			if (!in.read(reinterpret_cast<char *>(s.mask.data()), static_cast<std::streamsize>(L)))
				throw FormatError("truncated file while reading mask");
		}
	}
	return b;
}

inline void save_dataset(const std::string &path, const DatasetBundle &b)
{
	std::ofstream out(path, std::ios::binary);
	if (!out)
		throw FormatError("cannot write '" + path + "'");
	write_dataset(out, b);
}

inline DatasetBundle load_dataset(const std::string &path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw FormatError("cannot open '" + path + "'");
	return read_dataset(in);
}

} // namespace netwm::data
