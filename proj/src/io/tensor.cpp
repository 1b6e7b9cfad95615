#include "dissect/tensor.hpp"

#include <cstring>
#include <string>

#include "dissect/error.hpp"

namespace dissect {

std::size_t element_size(ElementType type) noexcept {
    switch (type) {
        case ElementType::Float32: return 4;
        case ElementType::Float64: return 8;
        case ElementType::Int16: return 2;
    }
    return 0;
}

std::size_t shape_product(std::span<const std::size_t> shape) noexcept {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || shape_.size() > 4) {
        throw Error(ErrorKind::InvariantViolation,
                    "tensor rank must be in [1, 4], got " + std::to_string(shape_.size()));
    }
    for (auto d : shape_) {
        if (d == 0) throw Error(ErrorKind::InvariantViolation, "tensor dimensions must be positive");
    }
    const auto count = std::visit([](const auto& v) { return v.size(); }, data_);
    if (count != shape_product(shape_)) {
        throw Error(ErrorKind::InvariantViolation, "element count " + std::to_string(count) +
                                                       " does not match shape product " +
                                                       std::to_string(shape_product(shape_)));
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, ElementType type) {
    const auto n = shape_product(shape);
    switch (type) {
        case ElementType::Float32: return Tensor(std::move(shape), std::vector<float>(n));
        case ElementType::Float64: return Tensor(std::move(shape), std::vector<double>(n));
        case ElementType::Int16: return Tensor(std::move(shape), std::vector<std::int16_t>(n));
    }
    throw Error(ErrorKind::UnsupportedElementType, "unknown element type");
}

std::size_t Tensor::size() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, data_);
}

ElementType Tensor::element_type() const noexcept {
    switch (data_.index()) {
        case 0: return ElementType::Float32;
        case 1: return ElementType::Float64;
        default: return ElementType::Int16;
    }
}

std::vector<float> Tensor::to_float() const {
    return std::visit(
        [](const auto& v) {
            std::vector<float> out(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
            return out;
        },
        data_);
}

std::vector<std::byte> Tensor::bytes() const {
    return std::visit(
        [](const auto& v) {
            std::vector<std::byte> out(v.size() * sizeof(v[0]));
            if (!out.empty()) std::memcpy(out.data(), v.data(), out.size());
            return out;
        },
        data_);
}

bool operator==(const Tensor& a, const Tensor& b) {
    if (a.shape_ != b.shape_ || a.data_.index() != b.data_.index()) return false;
    // Bitwise so that NaN payloads compare equal to themselves.
    return a.bytes() == b.bytes();
}

}  // namespace dissect
