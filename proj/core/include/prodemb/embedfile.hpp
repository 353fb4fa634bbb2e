#pragma once

#include <string>
#include <utility>
#include <vector>

#include "prodemb/error.hpp"

namespace prodemb {

/// Embeddings file: magic + header (count, dim), then id-prefixed
/// 64-bit-real vectors. Byte-stable for identical inputs, so downstream
/// evaluation can run on precomputed embeddings.
void write_embeddings(
    const std::vector<std::pair<std::string, std::vector<double>>>& entries,
    const std::string& path);

std::vector<std::pair<std::string, std::vector<double>>> read_embeddings(
    const std::string& path);

} // namespace prodemb
