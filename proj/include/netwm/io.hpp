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
 * \file netwm/io.hpp
 *
 * \brief Little-endian binary read/write helpers with truncation checks.
 */

#pragma once

#include <netwm/common.hpp>

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace netwm::io {

template <typename T> void put(std::ostream &out, const T &v)
{
	out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

inline void put_string32(std::ostream &out, const std::string &s)
{
	put(out, static_cast<std::uint32_t>(s.size()));
	out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_string64(std::ostream &out, const std::string &s)
{
	put(out, static_cast<std::uint64_t>(s.size()));
	out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

/// Bytes left between the read position and the end of the stream.
inline std::uint64_t remaining(std::istream &in)
{
	const auto here = in.tellg();
	in.seekg(0, std::ios::end);
	const auto end = in.tellg();
	in.seekg(here);
	return here < 0 || end < here ? 0 : static_cast<std::uint64_t>(end - here);
}

template <typename T> T take(std::istream &in, const std::string &what)
{
	T v{};
	if (!in.read(reinterpret_cast<char *>(&v), sizeof(T)))
		throw FormatError("truncated file while reading " + what);
	return v;
}

inline std::string take_bytes(std::istream &in, std::uint64_t n, const std::string &what)
{
	if (n > remaining(in))
		throw FormatError("truncated file while reading " + what);
	std::string s(static_cast<std::size_t>(n), '\0');
	if (n && !in.read(s.data(), static_cast<std::streamsize>(n)))
		throw FormatError("truncated file while reading " + what);
	return s;
}

inline std::string take_string32(std::istream &in, const std::string &what)
{
	return take_bytes(in, take<std::uint32_t>(in, what + " length"), what);
}

inline std::string take_string64(std::istream &in, const std::string &what)
{
	return take_bytes(in, take<std::uint64_t>(in, what + " length"), what);
}

inline void put_doubles(std::ostream &out, const double *p, std::size_t n)
{
	out.write(reinterpret_cast<const char *>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void take_doubles(std::istream &in, double *p, std::size_t n, const std::string &what)
{
	if (n * sizeof(double) > remaining(in) ||
	    !in.read(reinterpret_cast<char *>(p), static_cast<std::streamsize>(n * sizeof(double))))
		throw FormatError("truncated file while reading " + what);
}

} // namespace netwm::io
