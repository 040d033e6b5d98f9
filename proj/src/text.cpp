#include "phop/text.hpp"

#include <cctype>
#include <cmath>

#include "phop/errors.hpp"

namespace phop {

std::uint64_t fnv1a64(std::string_view token) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<double> hash_text_features(std::string_view text,
                                       std::size_t buckets) {
  if (buckets < 1) throw DataError("hash_text_features: buckets must be >= 1");
  std::vector<double> counts(buckets, 0.0);
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      counts[fnv1a64(token) % buckets] += 1.0;
      token.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isalnum(c))
      token.push_back(char(std::tolower(c)));
    else
      flush();
  }
  flush();

  double norm_sq = 0.0;
  for (double v : counts) norm_sq += v * v;
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : counts) v *= inv;
  }
  return counts;
}

}  // namespace phop
