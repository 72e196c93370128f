#pragma once

// Small shared utilities for the test suites.

#include <optional>
#include <utility>

#include "q4/model.hpp"

namespace testutil {

/// Runs f and reports the q4 error code it threw, if any.
template <typename F>
std::optional<q4::ErrorCode> error_code(F&& f) {
    try {
        std::forward<F>(f)();
    } catch (const q4::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

}  // namespace testutil
