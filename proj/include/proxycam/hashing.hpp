#pragma once

#include <cstdint>
#include <string>

namespace proxycam {

/// 64-bit FNV-1a. Not cryptographic; used for provenance stamps on emitted
/// files and the config echo.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hash_hex(std::uint64_t h);

} // namespace proxycam
