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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Criteria 4, 5, 6, 9, 10 share one default-config pipeline run in a scratch
// directory; criterion 11 runs a reduced config twice.

#include <netwm/pipeline.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace netwm;
using nn::Matrix;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
	return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int n, const std::string &name, bool ok, const std::string &detail)
{
	std::printf("criterion %2d %-34s %s  %s\n", n, name.c_str(), ok ? "PASS" : "FAIL", detail.c_str());
	std::fflush(stdout);
	failures += !ok;
}

template <typename... A>
std::string format(const char *f, A... a)
{
	char buf[512];
	std::snprintf(buf, sizeof buf, f, a...);
	return buf;
}

diffusion::DenoiseInput random_input(const diffusion::DenoiserConfig &c, int B, Rng &rng)
{
	diffusion::DenoiseInput in;
	in.x_t = nn::gaussian(c.length, B, 1.0, rng);
	in.cond = nn::gaussian(c.cond_dim, B, 1.0, rng);
	in.mask = Matrix::Ones(c.length, B);
	in.context = Matrix::Zero(c.length, B);
	for (int b = 0; b < B; ++b) {
		in.t.push_back(1 + static_cast<int>(rng() % 100));
		in.uncond.push_back(b % 3 == 0);
		if (b % 2)
			for (int l = 0; l < c.length / 2; ++l) {
				in.mask(l, b) = 0.0;
				in.context(l, b) = in.x_t(l, b);
			}
	}
	return in;
}

/// Widths of the traffic head under the default configuration.
diffusion::DenoiserConfig traffic_denoiser()
{
	auto c = RunConfig{}.worldmodel.denoiser;
	c.length = 12;
	c.cond_dim = data::condition_dim;
	return c;
}

void gradients()
{
	const auto t0 = Clock::now();
	const auto cfg = traffic_denoiser();
	const diffusion::Denoiser d(cfg);
	nn::ParamStore store;
	auto rng = make_rng({101});
	d.init(store, rng);
	for (auto &[name, p] : store)
		if (name.back() == 'b')
			p.value = nn::gaussian(p.value.rows(), p.value.cols(), 0.1, rng);
	const auto sched = diffusion::make_schedule();
	const int B = 4;
	const Matrix x0 = nn::gaussian(cfg.length, B, 1.0, rng);
	const Matrix cond = nn::gaussian(cfg.cond_dim, B, 1.0, rng);
	auto draws = diffusion::draw_training(sched, cfg.length, B, 0.0, 0.5, rng);
	draws.uncond = {0, 1, 0, 0};
	const auto in = diffusion::training_input(x0, cond, draws, sched);
	nn::Gradients g;
	d.loss(store, in, draws.eps, &g);
	const double e1 = nn::finite_difference_check(store, [&] { return d.loss(store, in, draws.eps).total; }, g);

	const int C = 7;
	const agent::Policy p(agent::observation_dim(C), C, {});
	nn::ParamStore ps;
	p.init(ps, rng);
	const Matrix obs = nn::gaussian(agent::observation_dim(C), 6, 0.5, rng);
	std::vector<std::vector<int>> ch;
	std::vector<double> adv;
	for (int b = 0; b < 6; ++b) {
		std::vector<int> c;
		for (int i = 0; i < C; ++i)
			c.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(p.n_choices())));
		ch.push_back(c);
		adv.push_back(std::normal_distribution<double>(0.0, 1.0)(rng));
	}
	nn::Gradients gp;
	p.surrogate_loss(ps, obs, ch, adv, 0.05, &gp);
	const double e2 = nn::finite_difference_check(ps, [&] { return p.surrogate_loss(ps, obs, ch, adv, 0.05, nullptr); }, gp);
	const double dt = seconds_since(t0);
	verdict(1, "gradient correctness", e1 < 1e-4 && e2 < 1e-4 && dt < 60.0,
	        format("denoiser %.2e, policy %.2e (max rel err), %.1f s", e1, e2, dt));
}

void mixture_structure()
{
	const auto cfg = traffic_denoiser();
	const diffusion::Denoiser d(cfg);
	nn::ParamStore store;
	auto rng = make_rng({102});
	d.init(store, rng);
	double worst = 0.0, gate = 0.0;
	for (int trial = 0; trial < 100; ++trial) {
		const auto in = random_input(cfg, 1, rng);
		const Matrix out = d.forward(store, in);
		const Matrix h = d.features(store, in);
		const Matrix g = nn::softmax(d.gate().forward(store, h));
		Matrix expect = Matrix::Zero(cfg.length, 1);
		for (int i = 0; i < cfg.experts; ++i)
			expect += g(i, 0) * d.expert(i).forward(store, h);
		worst = std::max(worst, (out - expect).cwiseAbs().maxCoeff());
		gate = std::max(gate, std::abs(g.col(0).sum() - 1.0));
	}
	verdict(2, "gate-weighted expert sum", worst <= 1e-12 && gate <= 1e-12,
	        format("max |out - sum| %.1e, max |gate sum - 1| %.1e", worst, gate));
}

void forward_endpoints()
{
	auto rng = make_rng({103});
	const Matrix x0 = nn::gaussian(12, 8, 1.0, rng);
	const Matrix eps = nn::gaussian(12, 8, 1.0, rng);
	const bool at_one = diffusion::q_sample_at(x0, 1.0, eps) == x0;
	const bool at_zero = diffusion::q_sample_at(x0, 0.0, eps) == eps;
	const auto s = diffusion::make_schedule();
	bool monotone = true;
	for (std::size_t t = 1; t < s.alpha_bar.size(); ++t)
		monotone = monotone && s.alpha_bar[t] < s.alpha_bar[t - 1];
	verdict(3, "forward-process endpoints", at_one && at_zero && monotone,
	        format("x0 at 1: %s, eps at 0: %s, alpha_bar decreasing: %s, alpha_bar(T) %.4f", at_one ? "exact" : "no",
	               at_zero ? "exact" : "no", monotone ? "yes" : "no", s.alpha_bar.back()));
}

void inpainting(const diffusion::WorldModel &wm, const oracle::Oracle &o, const harness::GenerationOptions &g)
{
	const auto es = harness::generated_vs_oracle(wm.head(data::SampleKind::traffic), wm.guidance_w(), o, g, true);
	const auto revealed = static_cast<std::size_t>(12 - g.horizon);
	double worst = 0.0;
	std::size_t n = 0;
	for (const auto &e : es)
		for (std::size_t i = 0; i < e.generated.size(); ++i)
			for (std::size_t l = 0; l < revealed; ++l, ++n)
				worst = std::max(worst, std::abs(e.generated[i][l] - e.reference[i / static_cast<std::size_t>(g.samples)][l]));
	verdict(6, "inpainting fidelity", worst <= 1e-9, format("max |gen - history| %.1e Mbps over %zu positions", worst, n));
}

void lora_contracts(const diffusion::WorldModel &wm)
{
	auto h = wm.head(data::SampleKind::traffic);
	const auto &cfg = h.denoiser().config();
	auto rng = make_rng({104});
	const auto in = random_input(cfg, 16, rng);
	const Matrix base = h.denoiser().forward(h.store(), in);
	std::map<std::string, Matrix> frozen;
	for (const auto &[name, p] : h.store())
		frozen[name] = p.value;
	h.denoiser().attach_lora(h.store(), {"expert", "cond"}, {4, 8.0}, rng);
	const bool zero_init = h.denoiser().forward(h.store(), in) == base;
	const Matrix x0 = nn::gaussian(cfg.length, 32, 1.0, rng);
	const Matrix cond = nn::gaussian(cfg.cond_dim, 32, 1.0, rng);
	for (int i = 0; i < 20; ++i)
		h.train_step(x0, cond, diffusion::draw_training(h.schedule(), cfg.length, 32, 0.1, 0.5, rng), {});
	bool immutable = true;
	for (const auto &[name, v] : frozen)
		immutable = immutable && h.store().value(name) == v;
	const Matrix adapted = h.denoiser().forward(h.store(), in);
	const double moved = (adapted - base).cwiseAbs().maxCoeff();
	h.denoiser().merge_lora(h.store());
	const double merge = (h.denoiser().forward(h.store(), in) - adapted).cwiseAbs().maxCoeff();
	verdict(7, "LoRA contracts", zero_init && immutable && merge < 1e-10 && moved > 0.0,
	        format("zero-init %s, frozen base %s, merge diff %.1e (adapter moved output by %.1e)",
	               zero_init ? "bit-identical" : "differs", immutable ? "bit-exact" : "changed", merge, moved));
}

void prompt_retrieval(const diffusion::WorldModel &wm)
{
	Matrix keys = wm.head(data::SampleKind::traffic).store().value("prompt.keys");
	bool exact = true;
	for (Eigen::Index i = 0; i < keys.cols(); ++i)
		exact = exact && diffusion::prompt_retrieve(keys, keys.col(i), 2).ranked.front() == i;
	keys.col(9) = keys.col(4);
	const Eigen::VectorXd q = keys.col(4);
	const auto r = diffusion::prompt_retrieve(keys, q, 3);
	const bool tie = r.ranked[0] == 4 && r.ranked[1] == 9;
	bool same = true;
	for (int k = 0; k < 10; ++k)
		same = same && diffusion::prompt_retrieve(keys, q, 3).ranked == r.ranked;
	verdict(8, "prompt retrieval", exact && tie && same,
	        format("exact-key top-1 %s over %d keys, tie -> lower index %s, repeat %s", exact ? "yes" : "no",
	               static_cast<int>(keys.cols()), tie ? "yes" : "no", same ? "identical" : "differs"));
}

const harness::ResultRow &row(const std::vector<harness::ResultRow> &rows, const std::string &scenario,
                              const std::string &scheme, std::uint64_t seed)
{
	const auto *r = harness::find_row(rows, scenario, scheme, seed);
	if (!r)
		throw LookupError("no result for " + scenario + "/" + scheme);
	return *r;
}

double median(std::vector<double> v)
{
	return harness::median(std::move(v));
}

void optimization(const RunConfig &c, const std::vector<harness::ResultRow> &rows, double elapsed)
{
	int wins = 0;
	std::vector<double> saved, delta;
	for (auto seed : c.seeds) {
		const auto &a = row(rows, pipeline::nominal, "agent", seed).summary;
		bool win = true;
		for (const char *b : {"empirical", "custom", "greedy"})
			win = win && a.utility >= row(rows, pipeline::nominal, b, seed).summary.utility;
		wins += win;
		saved.push_back(a.energy_saved);
		delta.push_back(a.rsrp_delta_db);
	}
	const double s = median(saved), d = median(delta);
	const int need = static_cast<int>(c.seeds.size()) - 1;
	verdict(9, "optimization ordinal claim", wins >= need && s >= 0.20 && d >= -3.0 && elapsed <= 600.0,
	        format("agent beats all baselines on %d/%zu seeds, saved %.1f%%, RSRP %+.2f dB, %.0f s end-to-end", wins,
	               c.seeds.size(), 100.0 * s, d, elapsed));
}

void counterfactual(const RunConfig &c, const pipeline::CounterfactualResult &r, double elapsed)
{
	bool ok = true;
	std::string detail;
	const int need = static_cast<int>(c.seeds.size()) - 1;
	for (double f : c.counterfactual.fractions) {
		const auto name = harness::counterfactual_name(f);
		int wins = 0, lora = 0;
		for (auto seed : c.seeds) {
			const auto &a = row(r.rows, name, "agent", seed).summary;
			wins += a.drop_rate <= row(r.rows, name, "greedy", seed).summary.drop_rate &&
			        a.utility >= row(r.rows, name, "empirical", seed).summary.utility &&
			        a.utility >= row(r.rows, name, "custom", seed).summary.utility;
		}
		std::vector<double> base, adapted;
		for (const auto &a : r.adaptation)
			if (a.scenario == name) {
				lora += a.mae_adapted < a.mae_base;
				base.push_back(a.mae_base);
				adapted.push_back(a.mae_adapted);
			}
		ok = ok && wins >= need && lora == static_cast<int>(base.size());
		detail += format("%.1f: %d/%zu seeds, MAE %.3f -> %.3f; ", f, wins, c.seeds.size(), median(base), median(adapted));
	}
	verdict(10, "counterfactual robustness", ok, detail + format("%.0f s", elapsed));
}

std::string slurp(const fs::path &p)
{
	std::ifstream in(p, std::ios::binary);
	std::stringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

RunConfig reduced(const fs::path &out)
{
	const auto j = nlohmann::json::parse(R"({
		"collect": {"n_days": 8, "rsrp_per_day": 8},
		"worldmodel": {"T": 20, "denoiser": {"hidden": 32}, "train": {"steps": 60, "batch": 32}},
		"forecast_samples": 2,
		"environment": {"pool_days": 4, "rsrp_slots": 2},
		"agent": {"hidden": [16], "updates": 8, "episodes_per_update": 4},
		"evaluation": {"days": 1},
		"generation": {"n_days": 1, "samples": 2, "users": false, "rsrp_samples": 2},
		"counterfactual": {"fractions": [0.8], "n_days": 2, "lora": {"steps": 10}, "retrain_updates": 4},
		"seeds": [1, 2]})");
	auto c = config_from_json(j);
	c.output_dir = out.string();
	return c;
}

void full_run(const RunConfig &c, int jobs)
{
	pipeline::collect(c);
	pipeline::train_worldmodel(c, jobs);
	pipeline::eval_generation(c, jobs);
	pipeline::optimize(c, jobs);
	pipeline::evaluate(c, jobs);
	pipeline::counterfactual(c, jobs);
	pipeline::report(c);
}

void reproducibility(const fs::path &root)
{
	const auto t0 = Clock::now();
	// Same output_dir for both runs so that the config hashes agree.
	const auto c = reduced(root / "repro");
	full_run(c, 1);
	const auto hash = config_hash(c);
	fs::rename(c.output(), root / "repro_first");
	full_run(c, 2);
	const auto again = config_from_json(to_json(c));
	bool same = config_hash(again) == hash;
	int files = 0;
	for (const char *f :
	     {"report.csv", "summary.csv", "evaluation.csv", "counterfactual.csv", "adaptation.csv", "generation.csv"}) {
		const auto first = slurp(root / "repro_first" / f);
		same = same && !first.empty() && first == slurp(c.output() / f);
		++files;
	}
	verdict(11, "reproducibility", same,
	        format("%d CSVs %s across two runs (jobs 1 and 2), hash %s, %.0f s", files,
	               same ? "byte-identical" : "differ", hash.c_str(), seconds_since(t0)));
}

} // namespace

int main(int argc, char **argv)
{
	const auto start = Clock::now();
	const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "netwm_acceptance";
	fs::remove_all(root);
	fs::create_directories(root);
	try {
		gradients();
		mixture_structure();
		forward_endpoints();

		auto c = config_from_json(nlohmann::json::object());
		c.output_dir = (root / "default").string();
		// Repeated generation metrics skip the users task; the CLI default keeps it.
		c.generation.users = false;
		const auto o = oracle::build_scenario(c.scenario());

		auto t0 = Clock::now();
		pipeline::collect(c);
		const auto wm = pipeline::train_worldmodel(c, 1);
		const double train = seconds_since(t0);
		const auto gen = pipeline::eval_generation(c, 1);
		const double mae = std::max(gen.long_term.mae_relative(), gen.short_term.mae_relative());
		const double w1 = std::max(gen.long_term.w1_relative(), gen.short_term.w1_relative());
		verdict(4, "generation fidelity", mae <= 0.15 && w1 <= 0.20 && train <= 180.0,
		        format("MAE long %.2f%% short %.2f%%, W1 long %.2f%% short %.2f%% of range, training %.0f s",
		               100 * gen.long_term.mae_relative(), 100 * gen.short_term.mae_relative(),
		               100 * gen.long_term.w1_relative(), 100 * gen.short_term.w1_relative(), train));
		verdict(5, "RSRP controllability", gen.rsrp.rho_tx_power >= 0.9 && gen.rsrp.rho_distance <= -0.9,
		        format("Spearman tx power %+.3f, distance %+.3f (carrier %+.3f)", gen.rsrp.rho_tx_power,
		               gen.rsrp.rho_distance, gen.rsrp.rho_freq));
		inpainting(wm, o, c.generation);
		lora_contracts(wm);
		prompt_retrieval(wm);

		const double before_opt = train;
		t0 = Clock::now();
		pipeline::optimize(c, 1);
		const auto rows = pipeline::evaluate(c, 1);
		pipeline::report(c);
		optimization(c, rows, before_opt + seconds_since(t0));

		t0 = Clock::now();
		const auto cf = pipeline::counterfactual(c, 1);
		pipeline::report(c);
		counterfactual(c, cf, seconds_since(t0));

		reproducibility(root);
	} catch (const std::exception &e) {
		std::printf("acceptance aborted: %s\n", e.what());
		return 2;
	}
	std::printf("%d of 11 criteria failed, %.0f s total\n", failures, seconds_since(start));
	fs::remove_all(root);
	return failures ? 1 : 0;
}
