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
 * \file netwm/nn/checkpoint.hpp
 *
 * \brief Versioned binary container for named tensors plus a JSON manifest.
 *
 * Layout (little-endian):
 *
 *   magic "NWMCKPT\0" | u32 version | u64 manifest bytes | manifest |
 *   u64 tensor count | per tensor: u32 name bytes, name, u8 trainable,
 *   i64 rows, i64 cols, rows*cols doubles (column-major)
 *
 * Adam moments are not stored; a loaded model starts with fresh moments.
 */

#pragma once

#include <netwm/common.hpp>
#include <netwm/io.hpp>
#include <netwm/nn/params.hpp>

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace netwm::nn {

inline constexpr char checkpoint_magic[8] = {'N', 'W', 'M', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t checkpoint_version = 1;


inline void write_checkpoint(std::ostream &out, const ParamStore &store, const nlohmann::json &manifest)
{
	using io::put;
	out.write(checkpoint_magic, 8);
	put(out, checkpoint_version);
	io::put_string64(out, manifest.dump());
	put(out, static_cast<std::uint64_t>(store.size()));
	for (const auto &[name, p] : store) {
		io::put_string32(out, name);
		put(out, static_cast<std::uint8_t>(p.trainable ? 1 : 0));
		put(out, static_cast<std::int64_t>(p.value.rows()));
		put(out, static_cast<std::int64_t>(p.value.cols()));
		io::put_doubles(out, p.value.data(), static_cast<std::size_t>(p.value.size()));
	}
	if (!out)
		throw FormatError("write failed");
}

struct Checkpoint
{
	ParamStore store;
	nlohmann::json manifest;
};

inline Checkpoint read_checkpoint(std::istream &in)
{
	using io::take;
	char magic[8];
	if (!in.read(magic, 8) || std::memcmp(magic, checkpoint_magic, 8) != 0)
		throw FormatError("not a checkpoint (bad magic)");
	const auto version = take<std::uint32_t>(in, "version");
	if (version != checkpoint_version)
		throw FormatError("checkpoint version mismatch: expected " + std::to_string(checkpoint_version) + ", found " +
		                  std::to_string(version));
	Checkpoint ck;
	const std::string m = io::take_string64(in, "manifest");
	try {
		ck.manifest = nlohmann::json::parse(m);
	} catch (const nlohmann::json::exception &e) {
		throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
	}
	const auto count = take<std::uint64_t>(in, "tensor count");
	for (std::uint64_t i = 0; i < count; ++i) {
		const std::string name = io::take_string32(in, "tensor name");
		const bool trainable = take<std::uint8_t>(in, "trainable flag") != 0;
		const auto rows = take<std::int64_t>(in, "rows");
		const auto cols = take<std::int64_t>(in, "cols");
		if (rows < 0 || cols < 0)
			throw FormatError("negative shape for tensor '" + name + "'");
		if (static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) > io::remaining(in) / sizeof(double))
			throw FormatError("truncated file while reading tensor '" + name + "'");
		Matrix v(rows, cols);
		io::take_doubles(in, v.data(), static_cast<std::size_t>(v.size()), "tensor '" + name + "'");
		if (ck.store.contains(name))
			throw FormatError("duplicate tensor '" + name + "'");
		ck.store.add(name, std::move(v), trainable);
	}
	return ck;
}

inline void save_checkpoint(const std::string &path, const ParamStore &store, const nlohmann::json &manifest)
{
	std::ofstream out(path, std::ios::binary);
	if (!out)
		throw FormatError("cannot write '" + path + "'");
	write_checkpoint(out, store, manifest);
}

inline Checkpoint load_checkpoint(const std::string &path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw FormatError("cannot open '" + path + "'");
	return read_checkpoint(in);
}

/// Copies values from `loaded` into `target`, requiring identical names and shapes.
inline void assign_checked(ParamStore &target, const ParamStore &loaded)
{
	if (target.size() != loaded.size())
		throw FormatError("checkpoint has " + std::to_string(loaded.size()) + " tensors, model expects " +
		                  std::to_string(target.size()));
	for (const auto &[name, p] : loaded) {
		if (!target.contains(name))
			throw FormatError("unexpected tensor '" + name + "' in checkpoint");
		const auto &t = target.at(name).value;
		if (t.rows() != p.value.rows() || t.cols() != p.value.cols())
			throw FormatError("shape mismatch for '" + name + "': expected " + std::to_string(t.rows()) + "x" +
			                  std::to_string(t.cols()) + ", found " + std::to_string(p.value.rows()) + "x" +
			                  std::to_string(p.value.cols()));
	}
	for (const auto &[name, p] : loaded) {
		Param &dst = target.mutable_at(name);
		dst.value = p.value;
		dst.trainable = p.trainable;
	}
}

} // namespace netwm::nn
