#include "domainrank/fingerprint.hpp"

#include <bit>
#include <cstring>

#include "domainrank/errors.hpp"
#include "domainrank/parallel.hpp"

namespace domainrank {

Fingerprint::Fingerprint(int n_bits) : n_bits_(n_bits) {
  if (n_bits <= 0 || n_bits % 8 != 0)
    throw DomainError("fingerprint length must be a positive multiple of 8, got " +
                      std::to_string(n_bits));
  bytes_.assign(static_cast<std::size_t>(n_bits / 8), 0);
}

static int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

Fingerprint Fingerprint::from_hex(std::string_view hex) {
  if (hex.empty() || hex.size() % 2 != 0)
    throw IngestError("fingerprint hex string must have even nonzero length, got " +
                      std::to_string(hex.size()) + " characters");
  Fingerprint fp(static_cast<int>(hex.size()) * 4);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = hex_nibble(hex[i]);
    const int lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0)
      throw IngestError(std::string("invalid hex character '") +
                        hex[hi < 0 ? i : i + 1] + "' in fingerprint");
    fp.bytes_[i / 2] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return fp;
}

std::string Fingerprint::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes_.size() * 2);
  for (std::uint8_t b : bytes_) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

void Fingerprint::set(int j, bool value) {
  auto& byte = bytes_[static_cast<std::size_t>(j) >> 3];
  const std::uint8_t mask = static_cast<std::uint8_t>(1u << (7 - (j & 7)));
  if (value)
    byte |= mask;
  else
    byte &= static_cast<std::uint8_t>(~mask);
}

namespace {

inline std::uint64_t load_word(const std::uint8_t* p, std::size_t n) {
  std::uint64_t w = 0;
  std::memcpy(&w, p, n);
  return w;
}

// Popcounts of (a AND b, a OR b) over nb bytes, 8 bytes at a time.
inline void intersect_union(const std::uint8_t* a, const std::uint8_t* b,
                            std::size_t nb, int& inter, int& uni) {
  int ic = 0, uc = 0;
  std::size_t i = 0;
  for (; i + 8 <= nb; i += 8) {
    const std::uint64_t wa = load_word(a + i, 8);
    const std::uint64_t wb = load_word(b + i, 8);
    ic += std::popcount(wa & wb);
    uc += std::popcount(wa | wb);
  }
  if (i < nb) {
    const std::uint64_t wa = load_word(a + i, nb - i);
    const std::uint64_t wb = load_word(b + i, nb - i);
    ic += std::popcount(wa & wb);
    uc += std::popcount(wa | wb);
  }
  inter = ic;
  uni = uc;
}

}  // namespace

std::size_t FingerprintHash::operator()(const Fingerprint& fp) const {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : fp.bytes()) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int Fingerprint::popcount() const {
  int inter = 0, uni = 0;
  intersect_union(bytes_.data(), bytes_.data(), bytes_.size(), inter, uni);
  return uni;
}

double tanimoto_distance(const Fingerprint& a, const Fingerprint& b) {
  if (a.bits() != b.bits())
    throw DimensionError("fingerprint length mismatch: " + std::to_string(a.bits()) +
                         " vs " + std::to_string(b.bits()));
  int inter = 0, uni = 0;
  intersect_union(a.bytes().data(), b.bytes().data(), a.bytes().size(), inter, uni);
  if (uni == 0) return 0.0;
  return static_cast<double>(uni - inter) / static_cast<double>(uni);
}

double setwise_distance(const Fingerprint& x, std::span<const Fingerprint> refs) {
  if (refs.empty()) throw DomainError("setwise distance over an empty reference set");
  double best = 1.0;
  const auto* xb = x.bytes().data();
  const auto nb = x.bytes().size();
  for (const Fingerprint& r : refs) {
    if (r.bits() != x.bits())
      throw DimensionError("fingerprint length mismatch: " + std::to_string(x.bits()) +
                           " vs " + std::to_string(r.bits()));
    int inter = 0, uni = 0;
    intersect_union(xb, r.bytes().data(), nb, inter, uni);
    const double d = uni == 0 ? 0.0
                              : static_cast<double>(uni - inter) /
                                    static_cast<double>(uni);
    if (d < best) {
      best = d;
      if (best == 0.0) break;
    }
  }
  return best;
}

std::vector<double> batch_setwise_distances(std::span<const Fingerprint> queries,
                                            std::span<const Fingerprint> refs) {
  if (refs.empty()) throw DomainError("setwise distance over an empty reference set");
  std::vector<double> out(queries.size());
  parallel_for(queries.size(),
               [&](std::size_t i) { out[i] = setwise_distance(queries[i], refs); });
  return out;
}

}  // namespace domainrank
