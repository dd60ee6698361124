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

#include <netwm/nn/checkpoint.hpp>
#include <netwm/nn/layers.hpp>
#include <netwm/nn/optim.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace netwm;
using namespace netwm::nn;

namespace {

/// Loss 0.5 * ||mlp(x) - y||^2 / B with gradients.
double regression_loss(const Mlp &mlp, const ParamStore &store, const Matrix &x, const Matrix &y, Gradients *g)
{
	Mlp::Cache cache;
	const Matrix out = mlp.forward(store, x, &cache);
	const Matrix diff = out - y;
	if (g)
		mlp.backward(store, cache, diff / static_cast<double>(x.cols()), *g);
	return 0.5 * diff.squaredNorm() / static_cast<double>(x.cols());
}

} // namespace

TEST(Mlp, IdentityInitReturnsInput)
{
	Mlp mlp("m", {{3, 3}, Activation::relu, Activation::linear});
	ParamStore store;
	store.add("m.0.W", Matrix::Identity(3, 3));
	store.add("m.0.b", Matrix::Zero(3, 1));
	Matrix x(3, 2);
	x << 1, -2, 3, 4, -5, 6;
	EXPECT_EQ(mlp.forward(store, x), x);
}

TEST(Mlp, ZeroWeightsGiveActivationOfBias)
{
	Mlp mlp("m", {{2, 3}, Activation::relu, Activation::tanh});
	ParamStore store;
	store.add("m.0.W", Matrix::Zero(3, 2));
	Matrix b(3, 1);
	b << 0.5, -1.0, 2.0;
	store.add("m.0.b", b);
	const Matrix y = mlp.forward(store, Matrix::Random(2, 4));
	for (int j = 0; j < 4; ++j)
		for (int i = 0; i < 3; ++i)
			EXPECT_DOUBLE_EQ(y(i, j), std::tanh(b(i, 0)));
}

TEST(Mlp, TwoLayerHandComputed)
{
	Mlp mlp("m", {{2, 2, 1}, Activation::relu, Activation::linear});
	ParamStore store;
	Matrix w1(2, 2), b1(2, 1), w2(1, 2), b2(1, 1);
	w1 << 1, -1, 2, 0.5;
	b1 << 0.5, -3;
	w2 << 2, -1;
	b2 << 0.25;
	store.add("m.0.W", w1);
	store.add("m.0.b", b1);
	store.add("m.1.W", w2);
	store.add("m.1.b", b2);
	Matrix x(2, 1);
	x << 1, 2;
	// h = relu([1-2+0.5, 2+1-3]) = relu([-0.5, 0]) = [0, 0]; y = 0.25
	EXPECT_DOUBLE_EQ(mlp.forward(store, x)(0, 0), 0.25);
	x << 3, 1;
	// h = relu([2.5, 3.5]) -> y = 5 - 3.5 + 0.25
	EXPECT_DOUBLE_EQ(mlp.forward(store, x)(0, 0), 1.75);
}

TEST(Mlp, ShapeErrorNamesLayer)
{
	Mlp mlp("policy", {{4, 8, 2}});
	ParamStore store;
	auto rng = make_rng({1});
	mlp.init(store, rng);
	try {
		mlp.forward(store, Matrix::Zero(5, 1));
		FAIL();
	} catch (const ShapeError &e) {
		EXPECT_NE(std::string(e.what()).find("policy.0"), std::string::npos);
	}
}

TEST(Backward, MatchesFiniteDifferencesOn200ParamNet)
{
	// 6*12+12 + 12*8+8 + 8*1+1 = 197 scalars
	Mlp mlp("m", {{6, 12, 8, 1}, Activation::tanh, Activation::linear});
	ParamStore store;
	auto rng = make_rng({2});
	mlp.init(store, rng);
	for (auto &[name, p] : store)
		if (name.back() == 'b')
			p.value = gaussian(p.value.rows(), 1, 0.3, rng);
	EXPECT_GE(store.scalar_count(), 190u);
	const Matrix x = gaussian(6, 5, 1.0, rng);
	const Matrix y = gaussian(1, 5, 1.0, rng);
	Gradients g;
	regression_loss(mlp, store, x, y, &g);
	const double err = finite_difference_check(
	    store, [&] { return regression_loss(mlp, store, x, y, nullptr); }, g, 1e-5);
	EXPECT_LT(err, 1e-4);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients)
{
	Mlp mlp("m", {{3, 4, 2}});
	ParamStore store;
	auto rng = make_rng({3});
	mlp.init(store, rng);
	Mlp::Cache cache;
	mlp.forward(store, gaussian(3, 7, 1.0, rng), &cache);
	Gradients g;
	const Matrix dx = mlp.backward(store, cache, Matrix::Zero(2, 7), g);
	EXPECT_EQ(dx.norm(), 0.0);
	for (const auto &[_, m] : g)
		EXPECT_EQ(m.norm(), 0.0);
}

TEST(Backward, StaleCacheIsRejected)
{
	Mlp mlp("m", {{3, 2}});
	ParamStore store;
	auto rng = make_rng({4});
	mlp.init(store, rng);
	Mlp::Cache cache;
	mlp.forward(store, gaussian(3, 2, 1.0, rng), &cache);
	store.mutable_at("m.0.W").value(0, 0) += 1.0;
	Gradients g;
	EXPECT_THROW(mlp.backward(store, cache, Matrix::Ones(2, 2), g), UsageError);
	EXPECT_THROW(mlp.backward(store, Mlp::Cache{}, Matrix::Ones(2, 2), g), UsageError);
}

TEST(Backward, FrozenTensorGradientIsComputedButNotApplied)
{
	Mlp mlp("m", {{3, 4, 1}});
	ParamStore store;
	auto rng = make_rng({5});
	mlp.init(store, rng);
	store.set_trainable("m.0.W", false);
	const Matrix before = store.value("m.0.W");
	Gradients g;
	regression_loss(mlp, store, gaussian(3, 4, 1.0, rng), gaussian(1, 4, 1.0, rng), &g);
	ASSERT_TRUE(g.contains("m.0.W"));
	EXPECT_GT(g.at("m.0.W").norm(), 0.0);
	adam_step(store, g, {});
	EXPECT_EQ(store.value("m.0.W"), before);
}

TEST(GradCheck, QuadraticLoss)
{
	ParamStore store;
	auto rng = make_rng({6});
	store.add("theta", gaussian(5, 3, 1.0, rng));
	Gradients g;
	g.accumulate("theta", 2.0 * store.value("theta"));
	const double err = finite_difference_check(
	    store, [&] { return store.value("theta").squaredNorm(); }, g, 1e-5);
	EXPECT_LT(err, 1e-7);
}

TEST(GradCheck, CorruptedBackwardIsDetected)
{
	Mlp mlp("m", {{4, 6, 1}, Activation::tanh, Activation::linear});
	ParamStore store;
	auto rng = make_rng({7});
	mlp.init(store, rng);
	const Matrix x = gaussian(4, 3, 1.0, rng);
	const Matrix y = gaussian(1, 3, 1.0, rng);
	Gradients g;
	regression_loss(mlp, store, x, y, &g);
	g.mutable_at("m.0.W")(1, 2) *= 1.5;
	const double err = finite_difference_check(
	    store, [&] { return regression_loss(mlp, store, x, y, nullptr); }, g, 1e-5);
	EXPECT_GT(err, 1e-2);
}

TEST(Adam, FirstStepMovesByLearningRate)
{
	ParamStore store;
	Matrix v(2, 2);
	v << 1, 2, 3, 4;
	store.add("w", v);
	Gradients g;
	Matrix grad(2, 2);
	grad << 0.5, -2.0, 1e-3, -7.0;
	g.accumulate("w", grad);
	AdamConfig cfg;
	cfg.lr = 0.01;
	adam_step(store, g, cfg);
	// m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
	for (int i = 0; i < 4; ++i) {
		const double expect = v.data()[i] - cfg.lr * grad.data()[i] / (std::abs(grad.data()[i]) + cfg.eps);
		EXPECT_NEAR(store.value("w").data()[i], expect, 1e-15);
		EXPECT_NEAR(std::abs(store.value("w").data()[i] - v.data()[i]), cfg.lr, 1e-7);
	}
}

TEST(Adam, ZeroGradientZeroUpdateAndFrozenUntouched)
{
	ParamStore store;
	auto rng = make_rng({8});
	store.add("a", gaussian(3, 3, 1.0, rng));
	store.add("b", gaussian(3, 1, 1.0, rng), false);
	const Matrix a0 = store.value("a"), b0 = store.value("b");
	Gradients g;
	g.accumulate("a", Matrix::Zero(3, 3));
	g.accumulate("b", Matrix::Ones(3, 1));
	adam_step(store, g, {});
	EXPECT_EQ(store.value("a"), a0);
	EXPECT_EQ(store.value("b"), b0);
}

TEST(Adam, NonFiniteGradientFailsFast)
{
	ParamStore store;
	store.add("a", Matrix::Zero(2, 1));
	Gradients g;
	Matrix bad = Matrix::Zero(2, 1);
	bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
	g.accumulate("a", bad);
	EXPECT_THROW(adam_step(store, g, {}), TrainingError);
}

TEST(Adam, DeterministicTrajectory)
{
	auto run = [] {
		Mlp mlp("m", {{3, 5, 1}});
		ParamStore store;
		auto rng = make_rng({9});
		mlp.init(store, rng);
		const Matrix x = gaussian(3, 8, 1.0, rng), y = gaussian(1, 8, 1.0, rng);
		for (int i = 0; i < 50; ++i) {
			Gradients g;
			regression_loss(mlp, store, x, y, &g);
			adam_step(store, g, {});
		}
		return store.value("m.0.W");
	};
	EXPECT_EQ(run(), run());
}

TEST(Lora, ZeroInitMergeAndScale)
{
	Dense d("l", 6, 5, Activation::linear);
	ParamStore store;
	auto rng = make_rng({10});
	d.init(store, rng);
	const Matrix x = gaussian(6, 4, 1.0, rng);
	const Matrix base = d.forward(store, x);
	const Matrix w0 = store.value("l.W");
	d.attach_lora(store, {2, 4.0}, rng);
	EXPECT_EQ(d.forward(store, x), base);
	EXPECT_FALSE(store.at("l.W").trainable);

	store.mutable_at("l.lora_B").value = gaussian(5, 2, 0.5, rng);
	const Matrix delta = d.lora_delta(store, x);
	Dense doubled = d;
	doubled.restore_lora(LoraSpec{2, 8.0});
	EXPECT_LT((doubled.lora_delta(store, x) - 2.0 * delta).cwiseAbs().maxCoeff(), 1e-12);

	const Matrix adapted = d.forward(store, x);
	EXPECT_EQ(store.value("l.W"), w0);
	d.merge_lora(store);
	EXPECT_FALSE(store.contains("l.lora_A"));
	EXPECT_LT((d.forward(store, x) - adapted).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lora, RankTooLargeIsConfigError)
{
	Dense d("l", 3, 8, Activation::linear);
	ParamStore store;
	auto rng = make_rng({11});
	d.init(store, rng);
	EXPECT_THROW(d.attach_lora(store, {4, 1.0}, rng), ConfigError);
}

TEST(Lora, AdapterGradientsMatchFiniteDifferences)
{
	Mlp mlp("m", {{4, 6, 2}, Activation::tanh, Activation::linear});
	ParamStore store;
	auto rng = make_rng({12});
	mlp.init(store, rng);
	store.freeze_all();
	for (auto &l : mlp.layers())
		l.attach_lora(store, {2, 3.0}, rng);
	for (auto &l : mlp.layers())
		store.mutable_at(l.lora_b_name()).value = gaussian(l.out(), 2, 0.3, rng);
	const Matrix x = gaussian(4, 3, 1.0, rng), y = gaussian(2, 3, 1.0, rng);
	Gradients g;
	regression_loss(mlp, store, x, y, &g);
	EXPECT_LT(finite_difference_check(store, [&] { return regression_loss(mlp, store, x, y, nullptr); }, g), 1e-4);
}

TEST(Softmax, RowsSumToOneAndGradient)
{
	auto rng = make_rng({13});
	const Matrix logits = gaussian(5, 20, 3.0, rng);
	const Matrix p = softmax(logits);
	for (int j = 0; j < 20; ++j)
		EXPECT_NEAR(p.col(j).sum(), 1.0, 1e-12);
	EXPECT_LT((log_softmax(logits).array().exp().matrix() - p).cwiseAbs().maxCoeff(), 1e-12);

	ParamStore store;
	store.add("z", logits.leftCols(1));
	const Matrix w = gaussian(5, 1, 1.0, rng);
	Gradients g;
	g.accumulate("z", softmax_backward(softmax(store.value("z")), w));
	EXPECT_LT(finite_difference_check(store, [&] { return softmax(store.value("z")).col(0).dot(w.col(0)); }, g),
	          1e-6);
}

TEST(Checkpoint, RoundTripTruncationAndVersion)
{
	ParamStore store;
	auto rng = make_rng({14});
	store.add("a", gaussian(3, 4, 1.0, rng));
	store.add("b", gaussian(1, 2, 1.0, rng), false);
	std::stringstream ss;
	write_checkpoint(ss, store, {{"hello", 1}});
	const std::string bytes = ss.str();

	std::stringstream in(bytes);
	const auto ck = read_checkpoint(in);
	EXPECT_EQ(ck.manifest["hello"], 1);
	EXPECT_EQ(ck.store.value("a"), store.value("a"));
	EXPECT_FALSE(ck.store.at("b").trainable);

	for (std::size_t cut : {std::size_t{3}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
		std::stringstream t(bytes.substr(0, cut));
		EXPECT_THROW(read_checkpoint(t), FormatError) << cut;
	}
	std::string wrong = bytes;
	wrong[8] = 9;
	std::stringstream w(wrong);
	try {
		read_checkpoint(w);
		FAIL();
	} catch (const FormatError &e) {
		EXPECT_NE(std::string(e.what()).find("expected 1, found 9"), std::string::npos);
	}

	ParamStore other;
	other.add("a", Matrix::Zero(4, 3));
	other.add("b", Matrix::Zero(1, 2));
	EXPECT_THROW(assign_checked(other, ck.store), FormatError);
}
