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
 * \file netwm/jsonutil.hpp
 *
 * \brief Strict JSON field access used by every config parser.
 */

#pragma once

#include <netwm/common.hpp>

#include <json.hpp>

#include <initializer_list>
#include <string>

namespace netwm::jsonutil {

inline void require_object(const nlohmann::json &j, const std::string &field)
{
	if (!j.is_object())
		throw ConfigError(field.empty() ? "<root>" : field, "must be a JSON object");
}

inline void reject_unknown(const nlohmann::json &j, std::initializer_list<const char *> allowed,
                           const std::string &prefix)
{
	for (auto it = j.begin(); it != j.end(); ++it) {
		bool ok = false;
		for (const char *a : allowed)
			ok = ok || it.key() == a;
		if (!ok)
			throw ConfigError(prefix + it.key(), "unknown key");
	}
}

template <typename T>
void get_to(const nlohmann::json &j, const char *key, T &out, const std::string &prefix)
{
	if (!j.contains(key))
		return;
	try {
		out = j.at(key).get<T>();
	} catch (const nlohmann::json::exception &) {
		throw ConfigError(prefix + key, "type mismatch");
	}
}

} // namespace netwm::jsonutil

