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
 * \file netwm/harness/report.hpp
 *
 * \brief Result rows, their CSV form and the per-scenario summary table.
 */

#pragma once

#include <netwm/harness/evaluation.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace netwm::harness {

/// One scheme on one scenario for one seed, aggregated over its evaluation days.
struct ResultRow
{
	std::string scenario;
	std::string scheme;
	std::uint64_t seed = 0;
	std::string environment = "oracle";
	int days = 0;
	SchemeSummary summary;
};

inline ResultRow make_row(const std::string &scenario, const std::string &scheme, std::uint64_t seed,
                          const std::vector<EpisodeResult> &eps, const std::vector<EpisodeResult> &always_on)
{
	ResultRow r{scenario, scheme, seed, "oracle", static_cast<int>(eps.size()), summarize(eps, always_on)};
	for (const auto &e : eps)
		if (e.environment != "oracle")
			throw UsageError("reported results must come from the oracle, got '" + e.environment + "'");
	return r;
}

/// Fixed-format number; identical inputs always give identical text.
inline std::string fmt(double v)
{
	if (std::isnan(v))
		return "nan";
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.10g", v);
	return buf;
}

inline const std::vector<std::string> &result_columns()
{
	static const std::vector<std::string> c = {"scenario",      "scheme",       "seed",          "environment",
	                                           "days",          "utility",      "energy_wh",     "reference_energy_wh",
	                                           "energy_saved",  "rsrp_avg_dbm", "rsrp_delta_db", "drop_rate",
	                                           "asleep"};
	return c;
}

inline void write_results_csv(std::ostream &out, const std::vector<ResultRow> &rows)
{
	const auto &cols = result_columns();
	for (std::size_t i = 0; i < cols.size(); ++i)
		out << (i ? "," : "") << cols[i];
	out << '\n';
	for (const auto &r : rows) {
		const auto &s = r.summary;
		out << r.scenario << ',' << r.scheme << ',' << r.seed << ',' << r.environment << ',' << r.days << ','
		    << fmt(s.utility) << ',' << fmt(s.energy_wh) << ',' << fmt(s.reference_energy_wh) << ','
		    << fmt(s.energy_saved) << ',' << fmt(s.rsrp_avg_dbm) << ',' << fmt(s.rsrp_delta_db) << ','
		    << fmt(s.drop_rate) << ',' << fmt(s.asleep) << '\n';
	}
}

inline std::vector<std::string> split_csv_line(const std::string &line)
{
	std::vector<std::string> f;
	std::stringstream ss(line);
	std::string item;
	while (std::getline(ss, item, ','))
		f.push_back(item);
	if (!line.empty() && line.back() == ',')
		f.emplace_back();
	return f;
}

inline std::vector<ResultRow> read_results_csv(std::istream &in, const std::string &what = "results")
{
	std::string line;
	if (!std::getline(in, line) || split_csv_line(line) != result_columns())
		throw FormatError(what + ": unexpected header");
	std::vector<ResultRow> rows;
	int n = 1;
	while (std::getline(in, line)) {
		++n;
		if (line.empty())
			continue;
		const auto f = split_csv_line(line);
		if (f.size() != result_columns().size())
			throw FormatError(what + ": line " + std::to_string(n) + " has " + std::to_string(f.size()) + " fields");
		try {
			ResultRow r;
			r.scenario = f[0];
			r.scheme = f[1];
			r.seed = std::stoull(f[2]);
			r.environment = f[3];
			r.days = std::stoi(f[4]);
			auto d = [](const std::string &s) { return s == "nan" ? std::nan("") : std::stod(s); };
			auto &s = r.summary;
			s.utility = d(f[5]);
			s.energy_wh = d(f[6]);
			s.reference_energy_wh = d(f[7]);
			s.energy_saved = d(f[8]);
			s.rsrp_avg_dbm = d(f[9]);
			s.rsrp_delta_db = d(f[10]);
			s.drop_rate = d(f[11]);
			s.asleep = d(f[12]);
			rows.push_back(std::move(r));
		} catch (const std::logic_error &) {
			throw FormatError(what + ": bad number on line " + std::to_string(n));
		}
	}
	return rows;
}

inline void save_results_csv(const std::string &path, const std::vector<ResultRow> &rows)
{
	std::ofstream out(path);
	write_results_csv(out, rows);
	if (!out)
		throw Error("cannot write '" + path + "'");
}

inline std::vector<ResultRow> load_results_csv(const std::string &path)
{
	std::ifstream in(path);
	if (!in)
		throw Error("cannot open '" + path + "'");
	return read_results_csv(in, path);
}

/// Rows of (scenario, scheme) for one seed; nullptr if absent.
inline const ResultRow *find_row(const std::vector<ResultRow> &rows, const std::string &scenario,
                                 const std::string &scheme, std::uint64_t seed)
{
	for (const auto &r : rows)
		if (r.scenario == scenario && r.scheme == scheme && r.seed == seed)
			return &r;
	return nullptr;
}

// ---------------------------------------------------------------------------

struct SummaryRow
{
	std::string scenario;
	std::string scheme;
	int seeds = 0;
	/// Medians over seeds.
	double utility = 0.0;
	double energy_saved = 0.0;
	double rsrp_delta_db = 0.0;
	double drop_rate = 0.0;
	double asleep = 0.0;
};

namespace detail {

inline double median_of(std::vector<double> v)
{
	v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
	if (v.empty())
		return std::nan("");
	std::sort(v.begin(), v.end());
	const std::size_t n = v.size();
	return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

/// Median over seeds per (scenario, scheme), in order of first appearance.
inline std::vector<SummaryRow> summary_table(const std::vector<ResultRow> &rows)
{
	std::vector<std::pair<std::string, std::string>> order;
	std::map<std::pair<std::string, std::string>, std::vector<const ResultRow *>> groups;
	for (const auto &r : rows) {
		const auto k = std::make_pair(r.scenario, r.scheme);
		if (!groups.count(k))
			order.push_back(k);
		groups[k].push_back(&r);
	}
	std::vector<SummaryRow> out;
	for (const auto &k : order) {
		const auto &g = groups[k];
		std::vector<double> u, e, d, dr, a;
		for (const auto *r : g) {
			u.push_back(r->summary.utility);
			e.push_back(r->summary.energy_saved);
			d.push_back(r->summary.rsrp_delta_db);
			dr.push_back(r->summary.drop_rate);
			a.push_back(r->summary.asleep);
		}
		out.push_back({k.first, k.second, static_cast<int>(g.size()), detail::median_of(u), detail::median_of(e),
		               detail::median_of(d), detail::median_of(dr), detail::median_of(a)});
	}
	return out;
}

inline void write_summary_csv(std::ostream &out, const std::vector<SummaryRow> &rows)
{
	out << "scenario,scheme,seeds,utility,energy_saved,rsrp_delta_db,drop_rate,asleep\n";
	for (const auto &r : rows)
		out << r.scenario << ',' << r.scheme << ',' << r.seeds << ',' << fmt(r.utility) << ',' << fmt(r.energy_saved)
		    << ',' << fmt(r.rsrp_delta_db) << ',' << fmt(r.drop_rate) << ',' << fmt(r.asleep) << '\n';
}

/// Fixed-width rendering for terminals.
inline std::string format_summary(const std::vector<SummaryRow> &rows)
{
	std::ostringstream out;
	char buf[160];
	std::snprintf(buf, sizeof buf, "%-12s %-16s %5s %9s %8s %8s %8s %7s\n", "scenario", "scheme", "seeds", "utility",
	              "saved%", "dRSRP", "drop%", "asleep");
	out << buf;
	for (const auto &r : rows) {
		std::snprintf(buf, sizeof buf, "%-12s %-16s %5d %9.4f %8.2f %8.2f %8.2f %7.2f\n", r.scenario.c_str(),
		              r.scheme.c_str(), r.seeds, r.utility, 100.0 * r.energy_saved, r.rsrp_delta_db,
		              100.0 * r.drop_rate, r.asleep);
		out << buf;
	}
	return out.str();
}

/**
 * Sanity envelope per (scenario, seed): no scheme uses less energy than
 * all-sleep, and a scheme that drops nobody has no higher mean RSRP than
 * always-on. Returns the violations, empty when the report is consistent.
 */
inline std::vector<std::string> envelope_violations(const std::vector<ResultRow> &rows, double tol = 1e-9)
{
	std::vector<std::string> bad;
	for (const auto &r : rows) {
		if (const auto *s = find_row(rows, r.scenario, "all_sleep", r.seed))
			if (r.summary.energy_wh < s->summary.energy_wh - tol)
				bad.push_back(r.scenario + "/" + r.scheme + "/" + std::to_string(r.seed) + ": energy below all-sleep");
		if (const auto *a = find_row(rows, r.scenario, "always_on", r.seed))
			if (r.summary.drop_rate == 0.0 && r.summary.rsrp_avg_dbm > a->summary.rsrp_avg_dbm + tol)
				bad.push_back(r.scenario + "/" + r.scheme + "/" + std::to_string(r.seed) + ": RSRP above always-on");
	}
	return bad;
}

} // namespace netwm::harness
