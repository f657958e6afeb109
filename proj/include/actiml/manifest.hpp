#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace actiml {

// FNV-1a, 64-bit. Fast, dependency-free content fingerprint for manifests
// and run directory names; not a cryptographic hash.
std::uint64_t fnv1a64(std::string_view data);

// 16 lowercase hex digits of fnv1a64.
std::string fnv1a64_hex(std::string_view data);

std::string hash_file(const std::filesystem::path& path);

// Current wall-clock time as "YYYY-MM-DDTHH:MM:SSZ". The one value in a run
// manifest that is not reproducible.
std::string utc_timestamp();

} // namespace actiml
