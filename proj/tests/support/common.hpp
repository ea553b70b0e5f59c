#pragma once

#include <catch_amalgamated.hpp>

#include <initializer_list>

#include <flownet/error.hpp>
#include <flownet/types.hpp>

namespace testing {

/// Code of the flownet::Error thrown by fn; fails the test if none is.
inline flownet::ErrorCode code_of(auto &&fn)
{
    try {
        fn();
    } catch (const flownet::Error &e) {
        return e.code();
    }
    FAIL("no error thrown");
    return flownet::ErrorCode::IoError;
}

inline flownet::Vector vec(std::initializer_list<double> v)
{
    flownet::Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

} // namespace testing
