#include "hedb/enclave/memory.hpp"

#include <algorithm>

#include "hedb/common/error.hpp"

namespace hedb {

SecureMemory::SecureMemory(std::uint64_t budget_bytes, double slope, double cap)
    : budget_(budget_bytes), slope_(slope), cap_(cap) {
  if (budget_bytes == 0) throw Error(ErrorCode::kInvalidArgument, "secure memory budget must be positive");
}

SecureMemory::AllocId SecureMemory::allocate(std::uint64_t bytes, std::string tag) {
  std::lock_guard lock(mu_);
  AllocId id = next_id_++;
  table_.emplace(id, Allocation{bytes, 0, std::move(tag)});
  resident_ += bytes;
  return id;
}

void SecureMemory::release(AllocId id) {
  std::lock_guard lock(mu_);
  auto it = table_.find(id);
  if (it == table_.end()) throw Error(ErrorCode::kNotFound, "release of unknown allocation");
  resident_ -= it->second.bytes;
  table_.erase(it);
}

void SecureMemory::touch(AllocId id, std::uint64_t tick) {
  std::lock_guard lock(mu_);
  auto it = table_.find(id);
  if (it == table_.end()) throw Error(ErrorCode::kNotFound, "touch of unknown allocation");
  it->second.last_touch = tick;
}

bool SecureMemory::contains(AllocId id) const {
  std::lock_guard lock(mu_);
  return table_.count(id) != 0;
}

std::uint64_t SecureMemory::resident_bytes() const {
  std::lock_guard lock(mu_);
  return resident_;
}

std::size_t SecureMemory::allocation_count() const {
  std::lock_guard lock(mu_);
  return table_.size();
}

double SecureMemory::overflow_fraction() const {
  std::uint64_t r = resident_bytes();
  return r <= budget_ ? 0.0 : static_cast<double>(r - budget_) / static_cast<double>(budget_);
}

double SecureMemory::multiplier_at(std::uint64_t resident) const {
  if (resident <= budget_) return 1.0;
  double over = static_cast<double>(resident - budget_) / static_cast<double>(budget_);
  return std::min(cap_, 1.0 + slope_ * over);
}

double SecureMemory::paging_multiplier() const { return multiplier_at(resident_bytes()); }

std::string SecureMemory::audit() const {
  std::lock_guard lock(mu_);
  std::uint64_t sum = 0;
  for (const auto& [id, a] : table_) sum += a.bytes;
  if (sum != resident_) return "resident bytes " + std::to_string(resident_) + " != page table sum " + std::to_string(sum);
  return "";
}

}  // namespace hedb
