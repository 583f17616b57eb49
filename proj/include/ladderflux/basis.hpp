#pragma once

#include <cstdint>
#include <vector>

namespace ladderflux {

// Basis of one fixed-total-particle-number sector. Site occupations live in
// {0, ..., local_dim-1}; a configuration is packed into a u64 with
// bits_per_site bits per site, site 0 in the lowest bits. The enumeration is
// lexicographic in the occupation tuple (site 0 compared first), and rank()
// inverts it in O(n_sites) arithmetic from precomputed suffix counts.
class SectorBasis {
 public:
  SectorBasis(int n_sites, int local_dim, int total_n);

  int n_sites() const { return n_sites_; }
  int local_dim() const { return local_dim_; }
  int total_n() const { return total_n_; }
  std::uint64_t dimension() const { return dim_; }

  int occ(std::uint64_t config, int site) const {
    return static_cast<int>((config >> (bits_ * site)) & mask_);
  }
  std::uint64_t with_occ(std::uint64_t config, int site, int value) const {
    const int sh = bits_ * site;
    return (config & ~(mask_ << sh)) | (static_cast<std::uint64_t>(value) << sh);
  }

  std::uint64_t config(std::uint64_t index) const;        // unrank
  std::uint64_t rank(std::uint64_t config) const;         // inverse, no search
  const std::vector<std::uint64_t>& configs() const { return configs_; }

  std::uint64_t pack(const std::vector<int>& occupations) const;
  std::vector<int> unpack(std::uint64_t config) const;

 private:
  int n_sites_, local_dim_, total_n_, bits_;
  std::uint64_t mask_, dim_;
  // suffix_[s][n] = number of ways `s` trailing sites can hold `n` particles.
  std::vector<std::vector<std::uint64_t>> suffix_;
  std::vector<std::uint64_t> configs_;
};

// Number of configurations of n_sites sites with occupations < local_dim
// summing to total_n. Throws std::overflow_error if the count exceeds u64.
std::uint64_t sector_dimension(int n_sites, int local_dim, int total_n);

SectorBasis build_sector(int n_sites, int local_dim, int total_n);

}  // namespace ladderflux
