// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace rtopf {

using json = nlohmann::json;

json load_json(const std::string& path);

// Writes via a temporary file followed by rename so readers never observe a
// partially written artifact.
void atomic_write(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

bool file_exists(const std::string& path);

void ensure_parent_dir(const std::string& path);

// FNV-1a over the canonical (sorted-key) dump; used to pair outputs with the
// exact configuration that produced them.
std::uint64_t config_hash(const json& j);

std::string hash_hex(std::uint64_t h);

// %.17g formatting: shortest text that round-trips an IEEE double exactly.
std::string format_double(double v);

}  // namespace rtopf
