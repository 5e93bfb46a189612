#include "vapt/rng.hpp"

#include <string>

#include "vapt/crypto.hpp"

namespace vapt {

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  std::string material = std::to_string(master);
  material.push_back('/');
  material.append(label);
  crypto::Digest d = crypto::sha256(material);
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out |= static_cast<std::uint64_t>(d[i]) << (8 * i);
  return out;
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Rejection sampling on the top of the range keeps the draw unbiased.
  std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

}  // namespace vapt
