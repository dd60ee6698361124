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
 * \file netwm/pipeline.hpp
 *
 * \brief The command-line stages. Stages exchange data only through files
 *        under the configured directories.
 *
 *   collect        -> <dataset>/{traffic,users,rsrp}.nwd
 *   train-wm       -> <worldmodel>/{*.ckpt,worldmodel.json}, <out>/worldmodel_loss.csv
 *   eval-gen       -> <out>/generation.csv
 *   optimize       -> <policies>/seed_<s>.ckpt, <policies>/curves.csv
 *   evaluate       -> <out>/evaluation.csv
 *   counterfactual -> <out>/counterfactual.csv, <out>/adaptation.csv
 *   report         -> <out>/report.csv, <out>/summary.csv, <out>/manifest.json
 */

#pragma once

#include <netwm/config.hpp>
#include <netwm/harness/report.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace netwm::pipeline {

namespace fs = std::filesystem;
using harness::ResultRow;

inline const std::string nominal = "nominal";

inline fs::path dataset_file(const RunConfig &c, data::SampleKind k)
{
	return c.dataset() / (data::to_string(k) + ".nwd");
}

inline fs::path policy_file(const RunConfig &c, std::uint64_t seed)
{
	return c.policies() / ("seed_" + std::to_string(seed) + ".ckpt");
}

inline void require_file(const fs::path &p, const std::string &stage)
{
	if (!fs::exists(p))
		throw Error("missing '" + p.string() + "' (run `" + stage + "` first)");
}

inline std::ofstream open_out(const fs::path &p)
{
	if (p.has_parent_path())
		fs::create_directories(p.parent_path());
	std::ofstream out(p);
	if (!out)
		throw Error("cannot write '" + p.string() + "'");
	return out;
}

/// Oracle traffic for `days` days from `first_day`: one row per (day, step, cell).
inline std::size_t simulate(const RunConfig &c, int first_day, int days, const fs::path &out_csv)
{
	if (days < 1)
		throw ConfigError("days", "must be >= 1");
	const auto o = oracle::build_scenario(c.scenario());
	const auto &s = o.config();
	auto out = open_out(out_csv);
	out << "day,step,hour,cell,load_mbps,load_fraction\n";
	std::size_t n = 0;
	for (int d = first_day; d < first_day + days; ++d)
		for (int k = 0; k < s.steps_per_day(); ++k)
			for (const auto &cell : s.cells) {
				const int t = d * 24 + k * s.traffic_step_hours;
				const double v = o.traffic_at(cell.id, t);
				out << d << ',' << k << ',' << k * s.traffic_step_hours << ',' << cell.id << ',' << harness::fmt(v)
				    << ',' << harness::fmt(v / cell.capacity_mbps) << '\n';
				++n;
			}
	return n;
}

inline std::vector<data::DatasetBundle> collect(const RunConfig &c)
{
	const auto o = oracle::build_scenario(c.scenario());
	auto bundles = data::collect_dataset(o, c.collect_options());
	fs::create_directories(c.dataset());
	for (const auto &b : bundles)
		data::save_dataset(dataset_file(c, b.kind).string(), b);
	return bundles;
}

inline std::vector<data::DatasetBundle> load_datasets(const RunConfig &c)
{
	std::vector<data::DatasetBundle> out;
	for (auto k : diffusion::WorldModel::kinds) {
		const auto p = dataset_file(c, k);
		require_file(p, "collect");
		out.push_back(data::load_dataset(p.string()));
	}
	return out;
}

inline diffusion::WorldModel train_worldmodel(const RunConfig &c, int jobs)
{
	const auto bundles = load_datasets(c);
	std::vector<std::vector<double>> curves;
	auto wm = diffusion::WorldModel::train(bundles, c.worldmodel, jobs, &curves);
	wm.save(c.worldmodel_path().string());
	auto out = open_out(c.output() / "worldmodel_loss.csv");
	out << "kind,step,loss\n";
	for (std::size_t i = 0; i < bundles.size(); ++i)
		for (std::size_t s = 0; s < curves[i].size(); ++s)
			out << data::to_string(bundles[i].kind) << ',' << s << ',' << harness::fmt(curves[i][s]) << '\n';
	return wm;
}

inline diffusion::WorldModel load_worldmodel(const RunConfig &c)
{
	require_file(c.worldmodel_path() / "worldmodel.json", "train-wm");
	auto wm = diffusion::WorldModel::load(c.worldmodel_path().string());
	wm.require_complete();
	return wm;
}

inline void write_generation_csv(std::ostream &out, const harness::GenerationReport &r)
{
	auto series = [&](const std::string &name, const harness::SeriesFidelity &f) {
		out << name << ",dynamic_range," << harness::fmt(f.dynamic_range) << '\n';
		out << name << ",mae," << harness::fmt(f.mae) << '\n';
		out << name << ",mae_relative," << harness::fmt(f.mae_relative()) << '\n';
		out << name << ",w1," << harness::fmt(f.w1) << '\n';
		out << name << ",w1_relative," << harness::fmt(f.w1_relative()) << '\n';
		out << name << ",acf_gap," << harness::fmt(f.acf_gap) << '\n';
	};
	out << "task,metric,value\n";
	series("traffic_long_term", r.long_term);
	series("traffic_short_term", r.short_term);
	series("users_long_term", r.users_long_term);
	out << "rsrp,spearman_tx_power," << harness::fmt(r.rsrp.rho_tx_power) << '\n';
	out << "rsrp,spearman_freq," << harness::fmt(r.rsrp.rho_freq) << '\n';
	out << "rsrp,spearman_distance," << harness::fmt(r.rsrp.rho_distance) << '\n';
}

inline harness::GenerationReport eval_generation(const RunConfig &c, int jobs)
{
	const auto wm = load_worldmodel(c);
	const auto o = oracle::build_scenario(c.scenario());
	const auto r = harness::generation_metrics(wm, o, c.generation, jobs);
	auto out = open_out(c.output() / "generation.csv");
	write_generation_csv(out, r);
	return r;
}

/// World model plus the forecaster and training environment built on it.
/// Holds the oracle the other two point to, so it is neither copied nor moved.
struct Substrate
{
	oracle::Oracle oracle;
	diffusion::WorldModel wm;
	std::unique_ptr<harness::Forecaster> forecast;
	std::unique_ptr<harness::WorldModelEnv> env;

	Substrate(const RunConfig &c, diffusion::WorldModel model, bool with_env, int jobs)
		: oracle(oracle::build_scenario(c.scenario())), wm(std::move(model))
	{
		forecast = std::make_unique<harness::Forecaster>(wm, oracle, c.forecast_samples, c.environment_seed, jobs);
		if (with_env)
			env = std::make_unique<harness::WorldModelEnv>(wm, oracle, c.environment, c.environment_seed, jobs);
	}
	Substrate(const Substrate &) = delete;
	Substrate &operator=(const Substrate &) = delete;
};

inline std::vector<harness::TrainedAgent> optimize(const RunConfig &c, int jobs)
{
	Substrate sub(c, load_worldmodel(c), true, jobs);
	fs::create_directories(c.policies());
	std::vector<harness::TrainedAgent> agents;
	for (auto seed : c.seeds) {
		agents.push_back(harness::run_training(*sub.env, *sub.forecast, c.agent, c.reward, seed, jobs));
		agents.back().save(policy_file(c, seed).string());
	}
	auto out = open_out(c.policies() / "curves.csv");
	out << "seed,update,mean_reward\n";
	for (std::size_t i = 0; i < agents.size(); ++i)
		for (std::size_t u = 0; u < agents[i].curve.size(); ++u)
			out << c.seeds[i] << ',' << u << ',' << harness::fmt(agents[i].curve[u]) << '\n';
	return agents;
}

inline std::vector<harness::TrainedAgent> load_policies(const RunConfig &c)
{
	std::vector<harness::TrainedAgent> out;
	for (auto seed : c.seeds) {
		const auto p = policy_file(c, seed);
		require_file(p, "optimize");
		out.push_back(harness::TrainedAgent::load(p.string()));
	}
	return out;
}

/// A learned controller: a policy with the forecaster its observations use.
struct AgentEntry
{
	std::string name;
	const harness::TrainedAgent *policy = nullptr;
	const harness::Forecaster *forecast = nullptr;
};

/// Every scheme over the evaluation days of the seed at `index`, on the oracle.
inline std::vector<ResultRow> evaluate_seed(const RunConfig &c, const oracle::Oracle &o, const std::string &scenario,
                                            std::size_t index, const std::vector<AgentEntry> &agents)
{
	using harness::Scheme;
	std::vector<harness::DayContext> days;
	for (int d : c.evaluation_days(index))
		days.push_back(harness::oracle_day(o, d));
	auto run = [&](const harness::Controller &ctl) {
		std::vector<harness::EpisodeResult> eps;
		for (const auto &d : days) {
			eps.push_back(harness::run_episode(o.config(), d, ctl, c.reward));
			eps.back().seed = c.seeds[index];
			eps.back().scenario = scenario;
		}
		return eps;
	};
	const auto ref = run(harness::oracle_controller(Scheme::always_on, o, c.baselines, c.reward));
	const auto seed = c.seeds[index];
	std::vector<ResultRow> rows;
	for (const auto &a : agents) {
		const auto eps = run(harness::oracle_controller(Scheme::agent, o, c.baselines, c.reward, a.policy, a.forecast));
		rows.push_back(harness::make_row(scenario, a.name, seed, eps, ref));
	}
	rows.push_back(harness::make_row(scenario, "always_on", seed, ref, ref));
	for (auto s : {Scheme::all_sleep, Scheme::empirical, Scheme::custom, Scheme::greedy})
		rows.push_back(harness::make_row(scenario, harness::to_string(s), seed,
		                                 run(harness::oracle_controller(s, o, c.baselines, c.reward)), ref));
	return rows;
}

inline std::vector<ResultRow> evaluate(const RunConfig &c, int jobs)
{
	const auto agents = load_policies(c);
	Substrate sub(c, load_worldmodel(c), false, jobs);
	std::vector<std::vector<ResultRow>> per_seed(c.seeds.size());
	parallel_for(c.seeds.size(), jobs, [&](std::size_t i) {
		per_seed[i] = evaluate_seed(c, sub.oracle, nominal, i, {{"agent", &agents[i], sub.forecast.get()}});
	});
	std::vector<ResultRow> rows;
	for (auto &r : per_seed)
		rows.insert(rows.end(), r.begin(), r.end());
	harness::save_results_csv((c.output() / "evaluation.csv").string(), rows);
	return rows;
}

/// Traffic-head accuracy on one counterfactual scenario, before and after adaptation.
struct AdaptationRow
{
	std::string scenario;
	std::uint64_t seed = 0;
	double mae_base = 0.0;
	double mae_adapted = 0.0;
	double dynamic_range = 0.0;
};

struct CounterfactualResult
{
	std::vector<ResultRow> rows;
	std::vector<AdaptationRow> adaptation;
};

/**
 * Per peak fraction: LoRA-adapt the traffic head on a short counterfactual
 * record, rebuild the forecaster and environment traffic from it, retrain
 * every seed's policy from its nominal parameters ("agent") and evaluate
 * it next to the unchanged nominal policy ("agent_zero_shot") and the
 * baselines on the counterfactual oracle.
 */
inline CounterfactualResult counterfactual(const RunConfig &c, int jobs)
{
	const auto nominal_agents = load_policies(c);
	Substrate sub(c, load_worldmodel(c), true, jobs);
	const auto &cc = c.counterfactual;
	const auto base = c.scenario();
	const double w = sub.wm.guidance_w();
	const auto &base_head = sub.wm.head(data::SampleKind::traffic);
	CounterfactualResult res;
	for (std::size_t k = 0; k < cc.fractions.size(); ++k) {
		const auto name = harness::counterfactual_name(cc.fractions[k]);
		const auto o = oracle::build_scenario(harness::counterfactual_scenario(base, cc.fractions[k]));
		const auto head = harness::adapt_traffic_head(base_head, o, cc, c.worldmodel.train);
		for (auto seed : c.seeds) {
			auto g = c.generation;
			g.seed = seed;
			const auto fb = harness::compare_series(harness::generated_vs_oracle(base_head, w, o, g, false, jobs));
			const auto fa = harness::compare_series(harness::generated_vs_oracle(head, w, o, g, false, jobs));
			res.adaptation.push_back({name, seed, fb.mae, fa.mae, fb.dynamic_range});
		}
		const auto forecast = sub.forecast->with_traffic(head, w, o, jobs);
		const auto env = sub.env->with_traffic(head, w, o, jobs);
		auto ac = c.agent;
		ac.updates = cc.retrain_updates;
		for (std::size_t i = 0; i < c.seeds.size(); ++i) {
			const auto key = seed_of({c.seeds[i], tag(Stream::counterfactual), k});
			const auto adapted = harness::run_training(env, forecast, ac, c.reward, key, jobs, &nominal_agents[i]);
			const auto rows = evaluate_seed(
			    c, o, name, i, {{"agent", &adapted, &forecast}, {"agent_zero_shot", &nominal_agents[i], &forecast}});
			res.rows.insert(res.rows.end(), rows.begin(), rows.end());
		}
	}
	harness::save_results_csv((c.output() / "counterfactual.csv").string(), res.rows);
	auto out = open_out(c.output() / "adaptation.csv");
	out << "scenario,seed,mae_base,mae_adapted,dynamic_range\n";
	for (const auto &a : res.adaptation)
		out << a.scenario << ',' << a.seed << ',' << harness::fmt(a.mae_base) << ',' << harness::fmt(a.mae_adapted)
		    << ',' << harness::fmt(a.dynamic_range) << '\n';
	return res;
}

struct Report
{
	std::vector<ResultRow> rows;
	std::vector<harness::SummaryRow> summary;
	std::vector<std::string> violations;
};

/// Aggregates evaluation.csv and (when present) counterfactual.csv.
inline Report report(const RunConfig &c)
{
	const auto eval = c.output() / "evaluation.csv";
	require_file(eval, "evaluate");
	Report r;
	r.rows = harness::load_results_csv(eval.string());
	std::vector<std::string> sources = {"evaluation.csv"};
	const auto cf = c.output() / "counterfactual.csv";
	if (fs::exists(cf)) {
		const auto more = harness::load_results_csv(cf.string());
		r.rows.insert(r.rows.end(), more.begin(), more.end());
		sources.push_back("counterfactual.csv");
	}
	r.summary = harness::summary_table(r.rows);
	r.violations = harness::envelope_violations(r.rows);
	{
		auto out = open_out(c.output() / "report.csv");
		harness::write_results_csv(out, r.rows);
	}
	{
		auto out = open_out(c.output() / "summary.csv");
		harness::write_summary_csv(out, r.summary);
	}
	const nlohmann::json manifest = {
	    {"config_hash", config_hash(c)},
	    {"seeds", c.seeds},
	    {"sources", sources},
	    {"envelope_violations", r.violations},
	    {"versions",
	     {{"netwm", version}, {"dataset_format", data::dataset_version}, {"checkpoint_format", nn::checkpoint_version}}}};
	auto out = open_out(c.output() / "manifest.json");
	out << manifest.dump(2) << '\n';
	return r;
}

} // namespace netwm::pipeline
