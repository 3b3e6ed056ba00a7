#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fignet {

// Error taxonomy. The CLI maps these onto categorized exit messages;
// library code throws and never prints.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config: " + msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape: " + msg) {}
};

struct LoadError : std::runtime_error {
    explicit LoadError(const std::string& msg) : std::runtime_error("load: " + msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error("numeric: " + msg) {}
};

struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error("input: " + msg) {}
};

// FNV-1a over raw bytes; used for parameter freeze assertions and
// corpus byte comparisons.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace fignet
