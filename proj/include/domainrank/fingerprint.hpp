#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace domainrank {

// Fixed-length binary substructure fingerprint, byte-packed. Bit j lives in
// byte j/8 at position (7 - j%8), i.e. most-significant-bit first within each
// byte; the hex text form is two lowercase digits per byte in byte order.
class Fingerprint {
 public:
  Fingerprint() = default;

  // Zero fingerprint of n_bits; n_bits must be a positive multiple of 8.
  explicit Fingerprint(int n_bits);

  static Fingerprint from_hex(std::string_view hex);
  std::string to_hex() const;

  int bits() const { return n_bits_; }
  int n_bytes() const { return n_bits_ / 8; }

  bool test(int j) const {
    return (bytes_[static_cast<std::size_t>(j) >> 3] >> (7 - (j & 7))) & 1u;
  }
  void set(int j, bool value = true);

  int popcount() const;

  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::uint8_t* data() { return bytes_.data(); }

  bool operator==(const Fingerprint&) const = default;

 private:
  int n_bits_ = 0;
  std::vector<std::uint8_t> bytes_;
};

struct FingerprintHash {
  std::size_t operator()(const Fingerprint& fp) const;
};

// 1 - |a AND b| / |a OR b| on the set bits. Two all-zero vectors are treated
// as identical (distance 0). Popcounts are integers, so the quotient is a
// single correctly-rounded binary64 division.
double tanimoto_distance(const Fingerprint& a, const Fingerprint& b);

// min over refs of tanimoto_distance(x, ref). refs must be nonempty.
double setwise_distance(const Fingerprint& x, std::span<const Fingerprint> refs);

// Element i is setwise_distance(queries[i], refs). Evaluated as a data-parallel
// map over queries; the result is a pure function of the inputs.
std::vector<double> batch_setwise_distances(std::span<const Fingerprint> queries,
                                            std::span<const Fingerprint> refs);

}  // namespace domainrank
