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

#include <netwm/config.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace netwm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string config_error_field(const json &j)
{
	try {
		config_from_json(j);
	} catch (const ConfigError &e) {
		return e.field();
	}
	return "";
}

fs::path scratch(const std::string &name)
{
	auto p = fs::temp_directory_path() / ("netwm_cli_" + name);
	fs::remove_all(p);
	fs::create_directories(p);
	return p;
}

/// Runs the CLI; returns its exit status and captures stderr into `err`.
int cli(const std::string &args, std::string *err = nullptr, const fs::path &dir = fs::temp_directory_path())
{
	const auto errfile = dir / "stderr.txt";
	const std::string cmd = std::string(NETWM_CLI) + " " + args + " >/dev/null 2>" + errfile.string();
	const int st = std::system(cmd.c_str());
	if (err) {
		std::ifstream in(errfile);
		std::stringstream ss;
		ss << in.rdbuf();
		*err = ss.str();
	}
	return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

} // namespace

TEST(Config, EmptyObjectFillsDefaults)
{
	const auto c = config_from_json(json::object());
	EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
	EXPECT_EQ(c.output_dir, "runs/default");
	EXPECT_EQ(c.worldmodel.T, 100);
	EXPECT_EQ(c.scenario().n_cells(), 7);
	EXPECT_EQ(config_hash(c).size(), 16u);
}

TEST(Config, HashIgnoresKeyOrderAndExplicitDefaults)
{
	const auto a = json::parse(R"({"seeds": [3, 4], "agent": {"updates": 10, "lr": 0.01}, "output_dir": "x"})");
	const auto b = json::parse(R"({"output_dir": "x", "agent": {"lr": 0.01, "updates": 10}, "seeds": [3, 4]})");
	const auto c = json::parse(R"({"output_dir": "x", "agent": {"lr": 0.01, "updates": 10}, "seeds": [3, 4],
	                               "scenario": {"seed": 7}, "evaluation": {"days": 5}})");
	const auto ha = config_hash(config_from_json(a));
	EXPECT_EQ(ha, config_hash(config_from_json(b)));
	EXPECT_EQ(ha, config_hash(config_from_json(c)));
	EXPECT_NE(ha, config_hash(config_from_json(json::parse(R"({"seeds": [3, 5], "agent": {"updates": 10, "lr": 0.01},
	                                                             "output_dir": "x"})"))));
	EXPECT_EQ(ha, config_hash(config_from_json(to_json(config_from_json(a)))));
}

TEST(Config, HashIsFnv1aOfCanonicalDump)
{
	EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
	EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
	const auto c = config_from_json(json::object());
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
	EXPECT_EQ(config_hash(c), buf);
}

TEST(Config, UnknownKeysAreNamed)
{
	EXPECT_EQ(config_error_field(json::parse(R"({"foo": 1})")), "foo");
	EXPECT_EQ(config_error_field(json::parse(R"({"agent": {"foo": 1}})")), "agent.foo");
	EXPECT_EQ(config_error_field(json::parse(R"({"worldmodel": {"denoiser": {"foo": 1}}})")), "worldmodel.denoiser.foo");
}

TEST(Config, TypeMismatchNamesKey)
{
	EXPECT_EQ(config_error_field(json::parse(R"({"seeds": "one"})")), "seeds");
	EXPECT_EQ(config_error_field(json::parse(R"({"collect": {"n_days": "many"}})")), "collect.n_days");
	EXPECT_EQ(config_error_field(json::parse(R"({"agent": []})")), "agent");
}

TEST(Config, SemanticChecks)
{
	EXPECT_EQ(config_error_field(json::parse(R"({"seeds": []})")), "seeds");
	EXPECT_EQ(config_error_field(json::parse(R"({"scenario": {"path": "/nonexistent/s.json"}})")), "scenario.path");
	EXPECT_EQ(config_error_field(json::parse(R"({"collect": {"splits": [0.5, 0.5]}})")), "collect.splits");
	EXPECT_EQ(config_error_field(json::parse(R"({"counterfactual": {"fractions": [1.5]}})")), "counterfactual.fractions");
}

TEST(Config, RelativePathsResolveAgainstConfigDir)
{
	const auto dir = scratch("resolve");
	oracle::save_scenario(oracle::default_hex_scenario(3), (dir / "s.json").string());
	std::ofstream(dir / "run.json") << R"({"scenario": {"path": "s.json"}, "paths": {"dataset": "data"}})";
	const auto c = parse_config((dir / "run.json").string());
	EXPECT_EQ(c.dataset(), dir / "data");
	EXPECT_EQ(c.scenario().n_cells(), 7);
	fs::remove_all(dir);
}

TEST(Config, MalformedFileIsAConfigError)
{
	const auto dir = scratch("malformed");
	std::ofstream(dir / "bad.json") << "{ not json";
	EXPECT_THROW(parse_config((dir / "bad.json").string()), ConfigError);
	EXPECT_THROW(parse_config((dir / "missing.json").string()), ConfigError);
	fs::remove_all(dir);
}

TEST(Config, ShippedConfigsParse)
{
	for (const auto &e : fs::directory_iterator(NETWM_CONFIG_DIR)) {
		if (e.path().extension() != ".json" || e.path().filename().string().rfind("scenario", 0) == 0)
			continue;
		EXPECT_NO_THROW(parse_config(e.path().string())) << e.path();
	}
}

TEST(Cli, SimulateWritesOneRowPerCellAndStep)
{
	const auto dir = scratch("simulate");
	ASSERT_EQ(cli("simulate --days 1 --out " + (dir / "t.csv").string()), 0);
	std::ifstream in(dir / "t.csv");
	std::string line;
	std::getline(in, line);
	EXPECT_EQ(line, "day,step,hour,cell,load_mbps,load_fraction");
	int rows = 0;
	while (std::getline(in, line))
		++rows;
	EXPECT_EQ(rows, 7 * 12);
	fs::remove_all(dir);
}

TEST(Cli, UsageErrorsExitTwo)
{
	std::string err;
	EXPECT_EQ(cli("frobnicate", &err), 2);
	EXPECT_NE(err.find("unknown command 'frobnicate'"), std::string::npos);
	EXPECT_NE(err.find("simulate"), std::string::npos);
	EXPECT_EQ(cli("collect --no-such-flag", &err), 2);
	EXPECT_EQ(cli("", &err), 2);
	EXPECT_EQ(cli("simulate --days 1", &err), 2);
}

TEST(Cli, ConfigErrorsExitOneWithOneLine)
{
	const auto dir = scratch("badconfig");
	std::ofstream(dir / "c.json") << R"({"foo": 1})";
	std::string err;
	EXPECT_EQ(cli("collect -c " + (dir / "c.json").string(), &err, dir), 1);
	EXPECT_NE(err.find("[foo]"), std::string::npos);
	EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
	fs::remove_all(dir);
}

TEST(Cli, MissingInputsExitOne)
{
	const auto dir = scratch("missing");
	std::ofstream(dir / "c.json") << R"({"output_dir": ")" + (dir / "out").string() + R"("})";
	std::string err;
	EXPECT_EQ(cli("train-wm -c " + (dir / "c.json").string(), &err, dir), 1);
	EXPECT_FALSE(err.empty());
	fs::remove_all(dir);
}

TEST(Cli, VersionAndHelpExitZero)
{
	EXPECT_EQ(cli("--version"), 0);
	EXPECT_EQ(cli("--help"), 0);
	EXPECT_EQ(cli("evaluate --help"), 0);
}
