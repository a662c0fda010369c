#pragma once

#include <cstdint>
#include <string>

#include "dspec/model.hpp"

namespace dspec {

// Reads a JSON or TOML configuration.  TOML is chosen by the .toml extension.
json load_config_file(const std::string& path);
json parse_config_text(const std::string& text, bool toml);

OperatorSpec load_spec(const std::string& path);

// Sorted keys, no whitespace.
std::string canonical_dump(const json& j);
std::uint64_t fnv1a64(const std::string& bytes);
// Hash of the canonical dump with every number read as a double.
std::string config_hash(const json& cfg);

}  // namespace dspec
