#ifndef OPDYN_CSV_HPP
#define OPDYN_CSV_HPP

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>

namespace opdyn {

// Floats in exported files carry 17 significant digits so round-trips are
// bit exact.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Every output file starts with this comment line; config hash plus seed are
// enough to reproduce it exactly.
inline void write_provenance(std::ostream& os, std::uint64_t config_hash,
                             std::uint64_t seed) {
  char buf[80];
  std::snprintf(buf, sizeof(buf), "# config_hash=%016llx seed=%llu",
                static_cast<unsigned long long>(config_hash),
                static_cast<unsigned long long>(seed));
  os << buf << '\n';
}

// FNV-1a over the canonical config text.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace opdyn

#endif  // OPDYN_CSV_HPP
