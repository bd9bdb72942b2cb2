#pragma once

#include <functional>

#include <gtest/gtest.h>

#include "gmraim/error.hpp"

namespace gmraim::testing {

/// Code of the Error thrown by fn; records a failure if nothing is thrown.
inline ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIo;
}

}  // namespace gmraim::testing
