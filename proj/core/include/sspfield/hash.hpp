#pragma once

#include <string>

#include "sspfield/params.hpp"

namespace sspfield {

/// SHA-256 of a byte buffer, lowercase hex.
std::string sha256_hex(const void* data, std::size_t len);

/// Hash of the exact 64-bit value bytes of every parameter whose name starts
/// with `prefix`, in store order. Bitwise-identical values, identical hash.
std::string hash_params(const ParameterStore& store, const std::string& prefix);

}  // namespace sspfield
