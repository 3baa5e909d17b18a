#pragma once

#include <charconv>
#include <stdexcept>
#include <string>

namespace nmfs {

/// Shortest decimal string that round-trips the exact double value.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return {buf, ptr};
}

}  // namespace nmfs
