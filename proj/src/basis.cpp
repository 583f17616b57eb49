#include "ladderflux/basis.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace ladderflux {

namespace {

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (a > std::numeric_limits<std::uint64_t>::max() - b) {
    throw std::overflow_error("sector dimension exceeds 64-bit range");
  }
  return a + b;
}

// suffix[s][n]: configurations of s sites summing to n, occupations < d.
std::vector<std::vector<std::uint64_t>> suffix_counts(int n_sites, int local_dim, int total_n) {
  std::vector<std::vector<std::uint64_t>> t(n_sites + 1,
                                            std::vector<std::uint64_t>(total_n + 1, 0));
  t[0][0] = 1;
  for (int s = 1; s <= n_sites; ++s) {
    for (int n = 0; n <= total_n; ++n) {
      std::uint64_t acc = 0;
      for (int d = 0; d < local_dim && d <= n; ++d) {
        acc = checked_add(acc, t[s - 1][n - d]);
      }
      t[s][n] = acc;
    }
  }
  return t;
}

}  // namespace

SectorBasis::SectorBasis(int n_sites, int local_dim, int total_n)
    : n_sites_(n_sites), local_dim_(local_dim), total_n_(total_n) {
  if (n_sites < 1) throw std::invalid_argument("n_sites must be >= 1");
  if (local_dim < 2 || local_dim > 4) throw std::invalid_argument("local_dim must be in [2,4]");
  if (total_n < 0 || total_n > n_sites * (local_dim - 1)) {
    throw std::invalid_argument("total_n = " + std::to_string(total_n) +
                                " not reachable with " + std::to_string(n_sites) + " sites");
  }
  bits_ = (local_dim <= 2) ? 1 : 2;
  if (bits_ * n_sites > 64) throw std::invalid_argument("configuration does not fit in 64 bits");
  mask_ = (1ull << bits_) - 1;
  suffix_ = suffix_counts(n_sites, local_dim, total_n);
  dim_ = suffix_[n_sites][total_n];

  // Enumerate in lexicographic tuple order by walking digits greedily; this
  // is the same order rank() assumes.
  configs_.reserve(dim_);
  for (std::uint64_t idx = 0; idx < dim_; ++idx) {
    std::uint64_t rem = idx;
    int n = total_n;
    std::uint64_t cfg = 0;
    for (int site = 0; site < n_sites; ++site) {
      const int sites_left = n_sites - site - 1;
      int d = 0;
      for (; d < local_dim; ++d) {
        if (d > n) break;
        const std::uint64_t block = suffix_[sites_left][n - d];
        if (rem < block) break;
        rem -= block;
      }
      cfg |= static_cast<std::uint64_t>(d) << (bits_ * site);
      n -= d;
    }
    configs_.push_back(cfg);
  }
}

std::uint64_t SectorBasis::config(std::uint64_t index) const {
  if (index >= dim_) throw std::out_of_range("basis index out of range");
  return configs_[index];
}

std::uint64_t SectorBasis::rank(std::uint64_t config) const {
  std::uint64_t r = 0;
  int n = total_n_;
  for (int site = 0; site < n_sites_; ++site) {
    const int d = occ(config, site);
    if (d >= local_dim_) throw std::invalid_argument("occupation exceeds local_dim");
    const int sites_left = n_sites_ - site - 1;
    for (int lower = 0; lower < d; ++lower) {
      if (n - lower >= 0) r += suffix_[sites_left][n - lower];
    }
    n -= d;
    if (n < 0) throw std::invalid_argument("configuration is not in this sector");
  }
  if (n != 0) throw std::invalid_argument("configuration is not in this sector");
  return r;
}

std::uint64_t SectorBasis::pack(const std::vector<int>& occupations) const {
  if (static_cast<int>(occupations.size()) != n_sites_) {
    throw std::invalid_argument("occupation list length mismatch");
  }
  std::uint64_t cfg = 0;
  for (int i = 0; i < n_sites_; ++i) {
    if (occupations[i] < 0 || occupations[i] >= local_dim_) {
      throw std::invalid_argument("occupation out of range at site " + std::to_string(i));
    }
    cfg |= static_cast<std::uint64_t>(occupations[i]) << (bits_ * i);
  }
  return cfg;
}

std::vector<int> SectorBasis::unpack(std::uint64_t config) const {
  std::vector<int> occ_list(n_sites_);
  for (int i = 0; i < n_sites_; ++i) occ_list[i] = occ(config, i);
  return occ_list;
}

std::uint64_t sector_dimension(int n_sites, int local_dim, int total_n) {
  if (n_sites < 1) throw std::invalid_argument("n_sites must be >= 1");
  if (local_dim < 2) throw std::invalid_argument("local_dim must be >= 2");
  if (total_n < 0 || total_n > n_sites * (local_dim - 1)) return 0;
  // Same DP as SectorBasis but without the 64-site packing restriction.
  std::vector<std::uint64_t> row(total_n + 1, 0);
  row[0] = 1;
  for (int s = 1; s <= n_sites; ++s) {
    for (int n = total_n; n >= 0; --n) {
      std::uint64_t acc = 0;
      for (int d = 0; d < local_dim && d <= n; ++d) acc = checked_add(acc, row[n - d]);
      row[n] = acc;
    }
  }
  return row[total_n];
}

SectorBasis build_sector(int n_sites, int local_dim, int total_n) {
  return SectorBasis(n_sites, local_dim, total_n);
}

}  // namespace ladderflux
