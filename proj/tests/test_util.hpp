#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "domainrank/fingerprint.hpp"
#include "domainrank/rng.hpp"

namespace testutil {

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    dir_ = std::filesystem::temp_directory_path() /
           ("domainrank_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

inline domainrank::Fingerprint random_fp(domainrank::Rng& rng, int p,
                                         double density = 0.5) {
  domainrank::Fingerprint fp(p);
  for (int j = 0; j < p; ++j)
    if (rng.uniform() < density) fp.set(j);
  return fp;
}

inline std::vector<domainrank::Fingerprint> random_fps(domainrank::Rng& rng, int n,
                                                       int p, double density = 0.5) {
  std::vector<domainrank::Fingerprint> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(random_fp(rng, p, density));
  return out;
}

// Bit-level Tanimoto reference, independent of the word-packed kernel.
inline double naive_tanimoto(const domainrank::Fingerprint& a,
                             const domainrank::Fingerprint& b) {
  int inter = 0, uni = 0;
  for (int j = 0; j < a.bits(); ++j) {
    const bool ba = a.test(j), bb = b.test(j);
    if (ba && bb) ++inter;
    if (ba || bb) ++uni;
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testutil
