#pragma once

#include <gtest/gtest.h>

#include <functional>

#include "hedb/common/error.hpp"

namespace hedb::testing_util {

inline void expect_code(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
    ADD_FAILURE() << "expected error " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace hedb::testing_util
