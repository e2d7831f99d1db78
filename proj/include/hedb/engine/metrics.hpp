#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <ostream>
#include <vector>

#include "hedb/common/udf.hpp"

namespace hedb {

struct UdfMetric {
  double timestamp = 0.0;  // virtual micros at dispatch
  UdfKind kind = UdfKind::kCompare;
  Path path = Path::kSoftware;
  double micros = 0.0;
  std::uint64_t session = 0;
};

// Bounded ring of per-call records plus unbounded per-(kind, path) totals.
class MetricsSink {
 public:
  explicit MetricsSink(std::size_t capacity = 1 << 16);

  void record(const UdfMetric& m);
  std::vector<UdfMetric> snapshot() const;  // oldest first
  std::uint64_t count(UdfKind kind, Path path) const;
  double micros(UdfKind kind, Path path) const;
  std::uint64_t total() const;
  void clear();

  // CSV: timestamp,op,path,micros
  void write_csv(std::ostream& out) const;

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::vector<UdfMetric> ring_;
  std::size_t head_ = 0;
  std::array<std::array<std::uint64_t, 2>, kUdfKindCount> counts_{};
  std::array<std::array<double, 2>, kUdfKindCount> micros_{};
  std::uint64_t total_ = 0;
};

}  // namespace hedb
