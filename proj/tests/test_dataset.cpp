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

#include <netwm/data/dataset.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace netwm;
using namespace netwm::data;

namespace {

const oracle::Oracle &hex()
{
	static const oracle::Oracle o(oracle::default_hex_scenario(1));
	return o;
}

} // namespace

TEST(Collect, OneDayOfTrafficGivesSevenSamplesOfTwelve)
{
	const auto d = collect_samples(hex(), SampleKind::traffic, 0, 1);
	ASSERT_EQ(d.size(), 7u);
	for (const auto &s : d.samples) {
		EXPECT_EQ(s.series.size(), 12u);
		EXPECT_EQ(s.condition.size(), static_cast<std::size_t>(condition_dim));
		EXPECT_EQ(s.mask.size(), 12u);
	}
	const auto u = collect_samples(hex(), SampleKind::users, 0, 1);
	EXPECT_EQ(u.size(), 36u);
	EXPECT_EQ(u.samples[0].series.size(), 24u);
}

TEST(Collect, RsrpSamplesCarryLinkConditions)
{
	CollectOptions opt;
	opt.rsrp_per_day = 16;
	const auto d = collect_samples(hex(), SampleKind::rsrp, 0, 2, opt);
	ASSERT_EQ(d.size(), 32u);
	for (const auto &s : d.samples) {
		const auto m = measure_rsrp(hex().config(), opt.ranges, s.day, s.entity);
		EXPECT_EQ(s.series.size(), 1u);
		EXPECT_EQ(s.series[0], m.rsrp_dbm);
		EXPECT_EQ(s.condition[9], m.tx_power_dbm);
		EXPECT_DOUBLE_EQ(s.condition[10], std::log10(m.freq_mhz));
		EXPECT_DOUBLE_EQ(s.condition[11], std::log10(m.distance_km));
		EXPECT_EQ(s.mask[0], 1);
	}
}

TEST(Collect, NormalizedTrainingSplitIsStandardized)
{
	CollectOptions opt;
	opt.n_days = 6;
	opt.rsrp_per_day = 20;
	for (const auto &b : collect_dataset(hex(), opt)) {
		double sum = 0.0, sq = 0.0;
		std::size_t n = 0;
		for (const auto &s : b.train.samples)
			for (double z : normalize(s.series, b.series_stats)) {
				sum += z;
				sq += z * z;
				++n;
			}
		const double mu = sum / n;
		EXPECT_LT(std::abs(mu), 1e-6) << to_string(b.kind);
		EXPECT_LT(std::abs(std::sqrt(sq / n - mu * mu) - 1.0), 1e-6) << to_string(b.kind);
		for (const auto &s : b.train.samples)
			for (double c : normalize_condition(s.condition, b.condition_stats)) {
				EXPECT_GE(c, -5.0);
				EXPECT_LE(c, 5.0);
			}
	}
}

TEST(Collect, StatsDependOnTrainingSplitOnly)
{
	CollectOptions opt;
	opt.n_days = 5;
	opt.kinds = {SampleKind::traffic};
	auto b = collect_dataset(hex(), opt).front();
	const auto before = b.series_stats;
	for (auto &s : b.test.samples)
		for (auto &v : s.series)
			v += 1000.0;
	fit_stats(b);
	EXPECT_EQ(b.series_stats.mean, before.mean);
	EXPECT_EQ(b.series_stats.std, before.std);
}

TEST(Collect, Errors)
{
	CollectOptions opt;
	opt.kinds.clear();
	EXPECT_THROW(collect_dataset(hex(), opt), ConfigError);
	opt = {};
	opt.n_days = 0;
	EXPECT_THROW(collect_dataset(hex(), opt), ConfigError);
}

TEST(Normalize, CenteringRoundTripAndFloor)
{
	NormalizationStats s{{3.5}, {2.0}};
	EXPECT_EQ(normalize({3.5}, s)[0], 0.0);
	std::vector<double> x = {-4.0, 0.1, 1e3, 7.25};
	const auto back = denormalize(normalize(x, s), s);
	for (std::size_t i = 0; i < x.size(); ++i)
		EXPECT_NEAR(back[i], x[i], 1e-9 * std::max(1.0, std::abs(x[i])));

	const std::vector<double> constant(10, 4.2);
	const auto st = compute_series_stats({&constant});
	EXPECT_EQ(st.std[0], std_floor);
	for (double z : normalize(constant, st))
		EXPECT_EQ(z, 0.0);
}

TEST(Mask, ShortAndLongTerm)
{
	const auto m = make_mask(Task::short_term_prediction, 12, 3);
	EXPECT_EQ(m, (std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1}));
	EXPECT_EQ(make_mask(Task::long_term_generation, 12, 0), std::vector<std::uint8_t>(12, 1));
	EXPECT_THROW(make_mask(Task::short_term_prediction, 12, 13), DomainError);
	EXPECT_THROW(make_mask(Task::short_term_prediction, 12, 0), DomainError);
}

TEST(Split, SizesDeterminismAndPartition)
{
	Dataset d;
	d.length = 1;
	for (int i = 0; i < 100; ++i)
		d.samples.push_back({{static_cast<double>(i)}, std::vector<double>(condition_dim, 0.0), {1}, SampleKind::rsrp, i, 0});
	const auto a = split_dataset(d, {0.8, 0.1, 0.1}, 5);
	EXPECT_EQ(a[0].size(), 80u);
	EXPECT_EQ(a[1].size(), 10u);
	EXPECT_EQ(a[2].size(), 10u);
	const auto b = split_dataset(d, {0.8, 0.1, 0.1}, 5);
	for (int k = 0; k < 3; ++k)
		for (std::size_t i = 0; i < a[static_cast<std::size_t>(k)].size(); ++i)
			EXPECT_EQ(a[static_cast<std::size_t>(k)].samples[i].entity, b[static_cast<std::size_t>(k)].samples[i].entity);
	std::multiset<int> seen;
	for (const auto &part : a)
		for (const auto &s : part.samples)
			seen.insert(s.entity);
	EXPECT_EQ(seen.size(), 100u);
	EXPECT_EQ(std::set<int>(seen.begin(), seen.end()).size(), 100u);
	EXPECT_THROW(split_dataset(d, {0.8, 0.3, 0.1}, 5), ConfigError);
	EXPECT_THROW(split_dataset(d, {1.2, -0.1, -0.1}, 5), ConfigError);
}

TEST(File, RoundTripTruncationVersion)
{
	CollectOptions opt;
	opt.n_days = 3;
	opt.rsrp_per_day = 8;
	for (const auto &b : collect_dataset(hex(), opt)) {
		std::stringstream ss;
		write_dataset(ss, b);
		const std::string bytes = ss.str();
		std::stringstream in(bytes);
		const auto r = read_dataset(in);
		EXPECT_EQ(r.kind, b.kind);
		EXPECT_EQ(r.length, b.length);
		EXPECT_EQ(r.series_stats.mean, b.series_stats.mean);
		EXPECT_EQ(r.condition_stats.std, b.condition_stats.std);
		ASSERT_EQ(r.train.size(), b.train.size());
		for (std::size_t i = 0; i < r.train.size(); ++i) {
			EXPECT_EQ(r.train.samples[i].series, b.train.samples[i].series);
			EXPECT_EQ(r.train.samples[i].condition, b.train.samples[i].condition);
			EXPECT_EQ(r.train.samples[i].mask, b.train.samples[i].mask);
			EXPECT_EQ(r.train.samples[i].day, b.train.samples[i].day);
		}
		EXPECT_EQ(r.test.size(), b.test.size());

		std::stringstream t(bytes.substr(0, bytes.size() - 5));
		EXPECT_THROW(read_dataset(t), FormatError);
		std::string wrong = bytes;
		wrong[8] = 2;
		std::stringstream w(wrong);
		try {
			read_dataset(w);
			FAIL();
		} catch (const FormatError &e) {
			EXPECT_NE(std::string(e.what()).find("expected 1, found 2"), std::string::npos);
		}
	}
}

TEST(File, LayoutMismatchIsExplicit)
{
	CollectOptions opt;
	opt.n_days = 1;
	opt.kinds = {SampleKind::traffic};
	auto b = collect_dataset(hex(), opt).front();
	std::stringstream ss;
	write_dataset(ss, b);
	std::string bytes = ss.str();
	const auto pos = bytes.find("\"D_c\":13");
	ASSERT_NE(pos, std::string::npos);
	bytes.replace(pos, 8, "\"D_c\":14");
	std::stringstream in(bytes);
	try {
		read_dataset(in);
		FAIL();
	} catch (const FormatError &e) {
		EXPECT_NE(std::string(e.what()).find("layout"), std::string::npos);
	}
}

TEST(Condition, LayoutIsPositionallyStable)
{
	ConditionInputs in;
	in.poi = oracle::PoiProfile::office;
	in.hour = 6.0;
	in.day = 9;
	in.density = 2.5;
	in.demand = 80.0;
	in.tx_power_dbm = 12.0;
	in.carrier_freq_mhz = 1800.0;
	in.distance_km = 0.5;
	in.sleep_fraction = 0.25;
	const auto c = encode_condition(in);
	ASSERT_EQ(c.size(), 13u);
	EXPECT_EQ(c[1], 1.0);
	EXPECT_EQ(c[0] + c[2] + c[3], 0.0);
	EXPECT_NEAR(c[4], 1.0, 1e-15);
	EXPECT_NEAR(c[5], 0.0, 1e-15);
	EXPECT_DOUBLE_EQ(c[6], 2.0 / 7.0);
	EXPECT_EQ(c[7], 2.5);
	EXPECT_EQ(c[8], 80.0);
	EXPECT_EQ(c[9], 12.0);
	EXPECT_DOUBLE_EQ(c[10], std::log10(1800.0));
	EXPECT_DOUBLE_EQ(c[11], std::log10(0.5));
	EXPECT_EQ(c[12], 0.25);
	EXPECT_EQ(std::string(condition_fields()[9]), "tx_power_dbm");
}
