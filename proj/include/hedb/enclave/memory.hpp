#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>

namespace hedb {

// Page accounting for the simulated secure memory. Allocations past the
// budget stay resident but slow everything down through the multiplier.
class SecureMemory {
 public:
  using AllocId = std::uint64_t;

  SecureMemory(std::uint64_t budget_bytes, double slope, double cap);

  AllocId allocate(std::uint64_t bytes, std::string tag);
  void release(AllocId id);
  void touch(AllocId id, std::uint64_t tick);
  bool contains(AllocId id) const;

  std::uint64_t budget() const { return budget_; }
  std::uint64_t resident_bytes() const;
  std::size_t allocation_count() const;
  double overflow_fraction() const;
  double paging_multiplier() const;
  // Multiplier for a hypothetical resident size.
  double multiplier_at(std::uint64_t resident) const;

  // Recomputes the resident total from the page table; "" when consistent.
  std::string audit() const;

 private:
  struct Allocation {
    std::uint64_t bytes = 0;
    std::uint64_t last_touch = 0;
    std::string tag;
  };

  std::uint64_t budget_;
  double slope_;
  double cap_;
  mutable std::mutex mu_;
  std::map<AllocId, Allocation> table_;
  std::uint64_t resident_ = 0;
  AllocId next_id_ = 1;
};

}  // namespace hedb
