#include "cpstir/rng.hpp"

namespace cpstir {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// Separates text components from integer components in the key schedule.
constexpr std::uint64_t kTextTag = 0x6a09e667f3bcc908ULL;
constexpr std::uint64_t kIndexTag = 0xbb67ae8584caa73bULL;

std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : label) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

SeededStream::SeededStream(std::uint64_t master_seed, std::string_view label)
    : master_seed_(master_seed),
      key_(mix(mix(master_seed + kTextTag) ^ mix(hash_label(label)))) {}

SeededStream SeededStream::child(std::string_view label) const {
  return {master_seed_, mix(key_ ^ mix(hash_label(label) + kTextTag)), 0};
}

SeededStream SeededStream::child(std::uint64_t index) const {
  return {master_seed_, mix(key_ ^ mix(index + kIndexTag)), 0};
}

}  // namespace cpstir
