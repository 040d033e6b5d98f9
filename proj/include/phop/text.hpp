#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace phop {

/// FNV-1a, the 64-bit variant with the standard offset basis and prime.
std::uint64_t fnv1a64(std::string_view token);

/// Bag-of-words hashing: lowercase, split on non-alphanumerics, count tokens
/// per bucket, L2-normalize. Empty text yields the zero vector.
std::vector<double> hash_text_features(std::string_view text,
                                       std::size_t buckets);

}  // namespace phop
