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
 * \file netwm/common.hpp
 *
 * \brief Error types and counter-based seeding shared by every module.
 */

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace netwm {

inline constexpr const char *version = "0.1.0";

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

/// Invalid configuration. `field()` names the offending key.
class ConfigError : public Error
{
public:
	ConfigError(std::string field, const std::string &what)
		: Error("configuration error [" + field + "]: " + what), m_field(std::move(field))
	{
	}
	const std::string &field() const noexcept { return m_field; }

private:
	std::string m_field;
};

class LookupError : public Error
{
public:
	explicit LookupError(const std::string &what) : Error("lookup error: " + what) {}
};

class DomainError : public Error
{
public:
	explicit DomainError(const std::string &what) : Error("domain error: " + what) {}
};

class ShapeError : public Error
{
public:
	explicit ShapeError(const std::string &what) : Error("shape error: " + what) {}
};

class TrainingError : public Error
{
public:
	explicit TrainingError(const std::string &what) : Error("training error: " + what) {}
};

class FormatError : public Error
{
public:
	explicit FormatError(const std::string &what) : Error("format error: " + what) {}
};

class ModelError : public Error
{
public:
	explicit ModelError(const std::string &what) : Error("model error: " + what) {}
};

class UsageError : public Error
{
public:
	explicit UsageError(const std::string &what) : Error("usage error: " + what) {}
};

class CellAsleepError : public Error
{
public:
	explicit CellAsleepError(int cell) : Error("cell asleep: " + std::to_string(cell)) {}
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
	z += 0x9e3779b97f4a7c15ULL;
	z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
	z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
	return z ^ (z >> 31);
}

/// Folds a key tuple into one seed. Every random query in the library derives
/// its generator from such a key, so results never depend on evaluation order.
inline std::uint64_t seed_of(std::initializer_list<std::uint64_t> key) noexcept
{
	std::uint64_t h = 0x6a09e667f3bcc908ULL;
	for (auto k : key)
		h = mix64(h ^ mix64(k));
	return h;
}

/// Generator used throughout.
using Rng = std::mt19937_64;

inline Rng make_rng(std::initializer_list<std::uint64_t> key) { return Rng(seed_of(key)); }

/// Stream tags keep independent random streams apart.
enum class Stream : std::uint64_t {
	traffic_noise = 1,
	users = 2,
	user_position = 3,
	shadowing = 4,
	dataset = 5,
	split = 6,
	training = 7,
	sampling = 8,
	init = 9,
	policy = 10,
	episode = 11,
	rsrp_table = 12,
	measurement = 13,
	forecast = 14,
	pool = 15,
	evaluation = 16,
	metrics = 17,
	counterfactual = 18,
};

constexpr std::uint64_t tag(Stream s) noexcept { return static_cast<std::uint64_t>(s); }

} // namespace netwm
