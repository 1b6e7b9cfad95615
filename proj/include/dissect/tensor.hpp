#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace dissect {

enum class ElementType { Float32, Float64, Int16 };

std::size_t element_size(ElementType type) noexcept;

/// Dense row-major tensor with 1 to 4 dimensions.
class Tensor {
public:
    using Storage = std::variant<std::vector<float>, std::vector<double>, std::vector<std::int16_t>>;

    Tensor() = default;

    /// Throws InvariantViolation when the shape is empty, longer than 4, has a
    /// zero extent, or disagrees with the element count.
    Tensor(std::vector<std::size_t> shape, Storage data);

    static Tensor zeros(std::vector<std::size_t> shape, ElementType type);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept;
    ElementType element_type() const noexcept;
    const Storage& storage() const noexcept { return data_; }

    template <typename T>
    std::span<const T> values() const {
        return std::get<std::vector<T>>(data_);
    }

    template <typename T>
    std::span<T> mutable_values() {
        return std::get<std::vector<T>>(data_);
    }

    /// Element-wise copy converted to float; int16 and float32 are exact.
    std::vector<float> to_float() const;

    /// Raw little-endian element bytes in row-major order.
    std::vector<std::byte> bytes() const;

    friend bool operator==(const Tensor& a, const Tensor& b);

private:
    std::vector<std::size_t> shape_;
    Storage data_;
};

std::size_t shape_product(std::span<const std::size_t> shape) noexcept;

}  // namespace dissect
