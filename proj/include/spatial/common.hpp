#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spatial {

// Invalid user-supplied configuration (bad config key, impossible geometry, ...).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing or malformed data files.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken internal contract; indicates a bug, not user error.
class ContractError : public std::logic_error {
public:
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

[[noreturn]] inline void config_fail(const std::string& msg) { throw ConfigError(msg); }
[[noreturn]] inline void data_fail(const std::string& msg) { throw DataError(msg); }
[[noreturn]] inline void contract_fail(const std::string& msg) { throw ContractError(msg); }

#define SPATIAL_CHECK_CONFIG(cond, msg) \
  do {                                  \
    if (!(cond)) ::spatial::config_fail(msg); \
  } while (0)

#define SPATIAL_CHECK(cond, msg) \
  do {                           \
    if (!(cond)) ::spatial::contract_fail(msg); \
  } while (0)

// FNV-1a, used for config hashes, manifest hashes and parameter digests.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
  return fnv1a(s.data(), s.size(), h);
}

std::string hex64(std::uint64_t v);

}  // namespace spatial
