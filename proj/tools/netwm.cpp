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

// netwm command-line driver.
//
// Exit status: 0 on success, 1 on a configuration or runtime error (one
// diagnostic line on stderr), 2 on a usage error (unknown subcommand or flag).

#include <netwm/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

namespace {

struct Options
{
	std::string config;
	int jobs = 1;
	int days = 1;
	int first_day = 0;
	std::string out;
};

netwm::RunConfig load(const Options &o)
{
	return o.config.empty() ? netwm::config_from_json(nlohmann::json::object()) : netwm::parse_config(o.config);
}

void common(CLI::App *sub, Options &o)
{
	sub->add_option("-c,--config", o.config, "run configuration (JSON); defaults apply when omitted");
	sub->add_option("-j,--jobs", o.jobs, "worker threads")->check(CLI::Range(1, 256));
}

int run(const std::string &cmd, const Options &o)
{
	using namespace netwm;
	const auto cfg = load(o);
	std::cerr << "netwm " << cmd << " (config " << config_hash(cfg) << ", output " << cfg.output().string() << ")\n";
	if (cmd == "simulate") {
		const auto n = pipeline::simulate(cfg, o.first_day, o.days, o.out);
		std::cout << "wrote " << n << " rows to " << o.out << '\n';
	} else if (cmd == "collect") {
		for (const auto &b : pipeline::collect(cfg))
			std::cout << data::to_string(b.kind) << ": " << b.train.size() << " train, " << b.val.size() << " val, "
			          << b.test.size() << " test samples\n";
	} else if (cmd == "train-wm") {
		pipeline::train_worldmodel(cfg, o.jobs);
		std::cout << "world model saved to " << cfg.worldmodel_path().string() << '\n';
	} else if (cmd == "eval-gen") {
		const auto r = pipeline::eval_generation(cfg, o.jobs);
		std::printf("traffic long-term  MAE %.2f%%  W1 %.2f%% of range\n", 100 * r.long_term.mae_relative(),
		            100 * r.long_term.w1_relative());
		std::printf("traffic short-term MAE %.2f%%  W1 %.2f%% of range\n", 100 * r.short_term.mae_relative(),
		            100 * r.short_term.w1_relative());
		std::printf("RSRP Spearman: tx power %+.3f  carrier %+.3f  distance %+.3f\n", r.rsrp.rho_tx_power,
		            r.rsrp.rho_freq, r.rsrp.rho_distance);
	} else if (cmd == "optimize") {
		const auto agents = pipeline::optimize(cfg, o.jobs);
		for (std::size_t i = 0; i < agents.size(); ++i)
			std::printf("seed %llu: final mean reward %.4f\n", static_cast<unsigned long long>(cfg.seeds[i]),
			            agents[i].curve.back());
	} else if (cmd == "evaluate") {
		const auto rows = pipeline::evaluate(cfg, o.jobs);
		std::cout << harness::format_summary(harness::summary_table(rows));
	} else if (cmd == "counterfactual") {
		const auto r = pipeline::counterfactual(cfg, o.jobs);
		std::cout << harness::format_summary(harness::summary_table(r.rows));
	} else if (cmd == "report") {
		const auto r = pipeline::report(cfg);
		std::cout << harness::format_summary(r.summary);
		for (const auto &v : r.violations)
			std::cerr << "envelope violation: " << v << '\n';
	}
	return 0;
}

} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"World-model driven energy-saving experiments for small cellular networks", "netwm"};
	app.set_version_flag("--version", std::string(netwm::version));
	app.require_subcommand(1);
	Options o;

	auto *sim = app.add_subcommand("simulate", "write oracle traffic as CSV");
	common(sim, o);
	sim->add_option("--days", o.days, "number of days")->check(CLI::PositiveNumber);
	sim->add_option("--first-day", o.first_day, "first day")->check(CLI::NonNegativeNumber);
	sim->add_option("-o,--out", o.out, "output CSV")->required();

	common(app.add_subcommand("collect", "sample training data from the oracle"), o);
	common(app.add_subcommand("train-wm", "train the world model"), o);
	common(app.add_subcommand("eval-gen", "compare generated data with the oracle"), o);
	common(app.add_subcommand("optimize", "train one policy per seed in the world-model environment"), o);
	common(app.add_subcommand("evaluate", "evaluate policies and baselines on the oracle"), o);
	common(app.add_subcommand("counterfactual", "adapt, retrain and evaluate under peak-load scenarios"), o);
	common(app.add_subcommand("report", "aggregate result CSVs into a summary"), o);

	if (argc > 1 && argv[1][0] != '-' && !app.get_subcommand_no_throw(argv[1])) {
		std::cerr << "netwm: unknown command '" << argv[1] << "'\n\n" << app.help();
		return 2;
	}
	try {
		app.parse(argc, argv);
	} catch (const CLI::Success &e) {
		return app.exit(e);
	} catch (const CLI::ParseError &e) {
		std::cerr << "netwm: " << e.what() << "\n\n" << app.help();
		return 2;
	}

	try {
		return run(app.get_subcommands().front()->get_name(), o);
	} catch (const std::exception &e) {
		std::cerr << "netwm: " << e.what() << '\n';
		return 1;
	}
}
