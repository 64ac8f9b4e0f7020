#pragma once

#include <string>

#include "doctest.h"
#include "phmmw/error.hpp"

// Runs `expr` and returns the error code it threw, or "" if it did not throw.
template <typename F>
std::string error_code_of(F&& f) {
    try {
        f();
    } catch (const phmmw::Error& e) {
        return e.code();
    }
    return "";
}

#define CHECK_ERROR_CODE(expr, code) CHECK(error_code_of([&] { (void)(expr); }) == std::string(code))
