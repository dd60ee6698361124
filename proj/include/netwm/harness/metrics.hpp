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
 * \file netwm/harness/metrics.hpp
 *
 * \brief Fidelity of generated series against the oracle.
 */

#pragma once

#include <netwm/harness/environment.hpp>
#include <netwm/jsonutil.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace netwm::harness {

/// Empirical Wasserstein-1 distance between two samples (area between the CDFs).
inline double wasserstein1(std::vector<double> a, std::vector<double> b)
{
	if (a.empty() || b.empty())
		throw DomainError("wasserstein1 needs two non-empty samples");
	std::sort(a.begin(), a.end());
	std::sort(b.begin(), b.end());
	const double na = static_cast<double>(a.size());
	const double nb = static_cast<double>(b.size());
	std::size_t i = 0, j = 0;
	double x = std::min(a.front(), b.front());
	double w = 0.0;
	while (i < a.size() || j < b.size()) {
		double next;
		if (j == b.size() || (i < a.size() && a[i] <= b[j]))
			next = a[i];
		else
			next = b[j];
		w += std::abs(i / na - j / nb) * (next - x);
		x = next;
		while (i < a.size() && a[i] == x)
			++i;
		while (j < b.size() && b[j] == x)
			++j;
	}
	return w;
}

/// Ranks starting at 1; ties share their average rank.
inline std::vector<double> average_ranks(const std::vector<double> &v)
{
	std::vector<std::size_t> idx(v.size());
	std::iota(idx.begin(), idx.end(), 0);
	std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
	std::vector<double> r(v.size());
	for (std::size_t i = 0; i < idx.size();) {
		std::size_t j = i;
		while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
			++j;
		const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
		for (std::size_t k = i; k <= j; ++k)
			r[idx[k]] = avg;
		i = j + 1;
	}
	return r;
}

inline double pearson(const std::vector<double> &x, const std::vector<double> &y)
{
	if (x.size() != y.size() || x.size() < 2)
		throw DomainError("correlation needs two equally long samples of size >= 2");
	const double n = static_cast<double>(x.size());
	const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
	const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
	double sxy = 0.0, sxx = 0.0, syy = 0.0;
	for (std::size_t i = 0; i < x.size(); ++i) {
		sxy += (x[i] - mx) * (y[i] - my);
		sxx += (x[i] - mx) * (x[i] - mx);
		syy += (y[i] - my) * (y[i] - my);
	}
	if (sxx == 0.0 || syy == 0.0)
		return 0.0;
	return sxy / std::sqrt(sxx * syy);
}

/// Spearman rank correlation; 0 when either side is constant.
inline double spearman(const std::vector<double> &x, const std::vector<double> &y)
{
	return pearson(average_ranks(x), average_ranks(y));
}

inline double lag1_autocorrelation(const std::vector<double> &s)
{
	if (s.size() < 3)
		return 0.0;
	return pearson(std::vector<double>(s.begin(), s.end() - 1), std::vector<double>(s.begin() + 1, s.end()));
}

inline double median(std::vector<double> v)
{
	if (v.empty())
		throw DomainError("median of an empty sample");
	std::sort(v.begin(), v.end());
	const std::size_t n = v.size();
	return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

/// Generated and reference series of one entity (cell or square).
struct EntitySeries
{
	/// One per (day, sample).
	std::vector<std::vector<double>> generated;
	/// One per day.
	std::vector<std::vector<double>> reference;
};

struct SeriesFidelity
{
	/// max - min over all reference values.
	double dynamic_range = 0.0;
	/// Mean over entities and positions of |mean generated - mean reference|.
	double mae = 0.0;
	/// Mean over (entity, position) of W1 between generated and reference values.
	double w1 = 0.0;
	/// |mean lag-1 autocorrelation of generated - of reference|.
	double acf_gap = 0.0;

	double mae_relative() const { return dynamic_range > 0.0 ? mae / dynamic_range : 0.0; }
	double w1_relative() const { return dynamic_range > 0.0 ? w1 / dynamic_range : 0.0; }
};

/// Compares per-entity mean profiles over positions [from, length).
inline SeriesFidelity compare_series(const std::vector<EntitySeries> &entities, int from = 0)
{
	SeriesFidelity f;
	double lo = INFINITY, hi = -INFINITY;
	double mae = 0.0, w1 = 0.0, acf_g = 0.0, acf_r = 0.0;
	std::size_t n_pos = 0, n_g = 0, n_r = 0;
	for (const auto &e : entities) {
		if (e.generated.empty() || e.reference.empty())
			throw DomainError("every entity needs generated and reference series");
		const auto L = e.reference.front().size();
		for (const auto &r : e.reference) {
			for (double v : r) {
				lo = std::min(lo, v);
				hi = std::max(hi, v);
			}
			acf_r += lag1_autocorrelation(r);
			++n_r;
		}
		for (const auto &g : e.generated) {
			if (g.size() != L)
				throw ShapeError("generated and reference series differ in length");
			acf_g += lag1_autocorrelation(g);
			++n_g;
		}
		for (std::size_t l = static_cast<std::size_t>(from); l < L; ++l) {
			std::vector<double> gv, rv;
			for (const auto &g : e.generated)
				gv.push_back(g[l]);
			for (const auto &r : e.reference)
				rv.push_back(r[l]);
			const double gm = std::accumulate(gv.begin(), gv.end(), 0.0) / static_cast<double>(gv.size());
			const double rm = std::accumulate(rv.begin(), rv.end(), 0.0) / static_cast<double>(rv.size());
			mae += std::abs(gm - rm);
			w1 += wasserstein1(std::move(gv), std::move(rv));
			++n_pos;
		}
	}
	if (n_pos == 0)
		throw DomainError("nothing to compare");
	f.dynamic_range = hi - lo;
	f.mae = mae / static_cast<double>(n_pos);
	f.w1 = w1 / static_cast<double>(n_pos);
	f.acf_gap = std::abs(acf_g / static_cast<double>(n_g) - acf_r / static_cast<double>(n_r));
	return f;
}

struct GenerationOptions
{
	/// Held-out days the comparison runs on.
	int first_day = 300;
	int n_days = 7;
	/// Generated series per (entity, day).
	int samples = 8;
	/// Positions generated in the short-term task; the rest is revealed.
	int horizon = 6;
	/// Samples averaged per grid point of the controllability sweep.
	int rsrp_samples = 16;
	/// Also compare the users head (the slowest part).
	bool users = true;
	std::uint64_t seed = 1;

	void validate() const
	{
		if (n_days < 1 || samples < 1 || rsrp_samples < 1)
			throw ConfigError("generation", "n_days, samples and rsrp_samples must be >= 1");
		if (horizon < 1)
			throw ConfigError("generation.horizon", "must be >= 1");
	}
};

inline nlohmann::json to_json(const GenerationOptions &g)
{
	return {{"first_day", g.first_day}, {"n_days", g.n_days},           {"samples", g.samples},
	        {"horizon", g.horizon},     {"rsrp_samples", g.rsrp_samples}, {"users", g.users},
	        {"seed", g.seed}};
}

inline GenerationOptions generation_options_from_json(const nlohmann::json &j, const std::string &prefix = "generation")
{
	using jsonutil::get_to;
	jsonutil::require_object(j, prefix);
	const std::string p = prefix + ".";
	jsonutil::reject_unknown(j, {"first_day", "n_days", "samples", "horizon", "rsrp_samples", "users", "seed"}, p);
	GenerationOptions g;
	get_to(j, "first_day", g.first_day, p);
	get_to(j, "n_days", g.n_days, p);
	get_to(j, "samples", g.samples, p);
	get_to(j, "horizon", g.horizon, p);
	get_to(j, "rsrp_samples", g.rsrp_samples, p);
	get_to(j, "users", g.users, p);
	get_to(j, "seed", g.seed, p);
	g.validate();
	return g;
}

/// Series of `kind` (traffic or users) from `head` next to the oracle's, for
/// every entity over the option's days. With `short_term` the first
/// length - horizon positions are revealed from the oracle.
inline std::vector<EntitySeries> generated_vs_oracle(const diffusion::Head &head, double w, const oracle::Oracle &o,
                                                     const GenerationOptions &opt, bool short_term, int jobs = 1)
{
	opt.validate();
	const auto kind = head.kind();
	if (kind == data::SampleKind::rsrp)
		throw UsageError("series comparison applies to traffic and users heads");
	const bool traffic = kind == data::SampleKind::traffic;
	const int n_ent = traffic ? o.n_cells() : o.n_grids();
	const int L = head.length();
	const int horizon = std::min(opt.horizon, L);
	std::vector<EntitySeries> out(static_cast<std::size_t>(n_ent));
	std::vector<std::vector<double>> conds;
	Matrix history(L, static_cast<Eigen::Index>(n_ent) * opt.n_days * opt.samples);
	Eigen::Index col = 0;
	for (int e = 0; e < n_ent; ++e)
		for (int d = opt.first_day; d < opt.first_day + opt.n_days; ++d) {
			const auto ref = traffic ? o.daily_traffic(e, d) : o.daily_users(e, d);
			out[static_cast<std::size_t>(e)].reference.push_back(ref);
			const auto c = data::encode_condition(traffic ? data::traffic_condition_inputs(o, e, d)
			                                              : data::users_condition_inputs(o, e, d));
			for (int i = 0; i < opt.samples; ++i) {
				conds.push_back(c);
				history.col(col++) = Eigen::Map<const Eigen::VectorXd>(ref.data(), L);
			}
		}
	const std::uint64_t key = seed_of({opt.seed, tag(Stream::metrics), static_cast<std::uint64_t>(kind), short_term});
	const Matrix g = short_term ? sample_chunked(head, conds, w, key, jobs, history, horizon)
	                            : sample_chunked(head, conds, w, key, jobs);
	col = 0;
	for (auto &e : out)
		for (int i = 0; i < opt.n_days * opt.samples; ++i, ++col)
			e.generated.emplace_back(g.col(col).data(), g.col(col).data() + L);
	return out;
}

/// Median over slices of the Spearman correlation along one condition axis.
struct Controllability
{
	double rho_tx_power = 0.0;
	double rho_freq = 0.0;
	double rho_distance = 0.0;
};

/// Axes of the controllability sweep: 5 transmit powers, 5 carriers, 5
/// log-spaced distances spanning the measurement ranges.
inline std::array<std::vector<double>, 3> controllability_grid(const data::MeasurementRanges &r = {})
{
	std::array<std::vector<double>, 3> g;
	for (int i = 0; i < 5; ++i) {
		const double u = i / 4.0;
		g[0].push_back(r.tx_min_dbm + u * (r.tx_max_dbm - r.tx_min_dbm));
		g[1].push_back(r.freq_min_mhz + u * (r.freq_max_mhz - r.freq_min_mhz));
		g[2].push_back(r.dist_min_km * std::pow(r.dist_max_km / r.dist_min_km, u));
	}
	return g;
}

/// Mean generated RSRP at every grid point, indexed [tx][freq][dist].
inline std::vector<double> rsrp_sweep(const diffusion::Head &head, double w, const GenerationOptions &opt,
                                      int jobs = 1)
{
	if (head.kind() != data::SampleKind::rsrp)
		throw UsageError("the controllability sweep needs the RSRP head");
	const auto g = controllability_grid();
	std::vector<std::vector<double>> conds;
	for (double tx : g[0])
		for (double f : g[1])
			for (double d : g[2])
				for (int i = 0; i < opt.rsrp_samples; ++i)
					conds.push_back(data::encode_condition(data::rsrp_condition_inputs(tx, f, d)));
	const Matrix x = sample_chunked(head, conds, w, seed_of({opt.seed, tag(Stream::metrics), 0x55}), jobs);
	std::vector<double> mean;
	for (Eigen::Index i = 0; i < x.cols(); i += opt.rsrp_samples)
		mean.push_back(x.row(0).segment(i, opt.rsrp_samples).mean());
	return mean;
}

inline Controllability controllability(const std::vector<double> &sweep)
{
	if (sweep.size() != 125)
		throw ShapeError("controllability expects a 5x5x5 sweep");
	auto at = [&](int a, int b, int c) { return sweep[static_cast<std::size_t>((a * 5 + b) * 5 + c)]; };
	const std::vector<double> axis = {0, 1, 2, 3, 4};
	std::vector<double> tx, fr, di;
	for (int i = 0; i < 5; ++i)
		for (int j = 0; j < 5; ++j) {
			std::vector<double> a, b, c;
			for (int k = 0; k < 5; ++k) {
				a.push_back(at(k, i, j));
				b.push_back(at(i, k, j));
				c.push_back(at(i, j, k));
			}
			tx.push_back(spearman(axis, a));
			fr.push_back(spearman(axis, b));
			di.push_back(spearman(axis, c));
		}
	return {median(tx), median(fr), median(di)};
}

struct GenerationReport
{
	SeriesFidelity long_term;
	SeriesFidelity short_term;
	/// Left at zero unless GenerationOptions::users.
	SeriesFidelity users_long_term;
	Controllability rsrp;
};

inline GenerationReport generation_metrics(const diffusion::WorldModel &wm, const oracle::Oracle &o,
                                           const GenerationOptions &opt, int jobs = 1)
{
	wm.require_complete();
	const double w = wm.guidance_w();
	const auto &traffic = wm.head(data::SampleKind::traffic);
	GenerationReport r;
	r.long_term = compare_series(generated_vs_oracle(traffic, w, o, opt, false, jobs));
	r.short_term = compare_series(generated_vs_oracle(traffic, w, o, opt, true, jobs),
	                              traffic.length() - std::min(opt.horizon, traffic.length()));
	if (opt.users)
		r.users_long_term =
		    compare_series(generated_vs_oracle(wm.head(data::SampleKind::users), w, o, opt, false, jobs));
	r.rsrp = controllability(rsrp_sweep(wm.head(data::SampleKind::rsrp), w, opt, jobs));
	return r;
}

} // namespace netwm::harness
