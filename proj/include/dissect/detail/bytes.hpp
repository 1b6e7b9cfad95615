#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>

namespace dissect::detail {

// std::byteswap is C++23; this covers any trivially copyable scalar.
template <typename T>
T byteswap(T value) {
    auto raw = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
    std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
}

}  // namespace dissect::detail
