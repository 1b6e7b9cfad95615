#include "dissect/npy.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "dissect/detail/bytes.hpp"
#include "dissect/error.hpp"

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace dissect::npy {
namespace {

constexpr std::byte kMagic[] = {std::byte{0x93}, std::byte{'N'}, std::byte{'U'},
                                std::byte{'M'},  std::byte{'P'}, std::byte{'Y'}};
constexpr std::size_t kPreludeSize = 10;  // magic + version + u16 length
constexpr std::size_t kAlign = 64;
constexpr std::size_t kGrowthAxisMaxDigits = 21;

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::MalformedHeader, what); }

struct Header {
    ElementType type{};
    bool big_endian = false;
    bool fortran_order = false;
    std::vector<std::size_t> shape;
};

// Minimal scanner for the python-literal dict numpy writes.
class HeaderScanner {
public:
    explicit HeaderScanner(std::string_view text) : text_(text) {}

    Header parse() {
        std::optional<std::string> descr;
        std::optional<bool> fortran;
        std::optional<std::vector<std::size_t>> shape;

        expect('{');
        while (true) {
            skip_ws();
            if (peek() == '}') {
                ++pos_;
                break;
            }
            const auto key = string_literal();
            expect(':');
            if (key == "descr") {
                descr = string_literal();
            } else if (key == "fortran_order") {
                fortran = boolean();
            } else if (key == "shape") {
                shape = tuple();
            } else {
                malformed("unexpected header key '" + key + "'");
            }
            skip_ws();
            if (peek() == ',') {
                ++pos_;
            } else if (peek() != '}') {
                malformed("expected ',' or '}' in header dict");
            }
        }
        skip_ws();
        if (pos_ != text_.size()) malformed("trailing characters after header dict");
        if (!descr || !fortran || !shape) malformed("header dict misses descr, fortran_order or shape");

        Header h;
        h.fortran_order = *fortran;
        h.shape = std::move(*shape);
        const auto& d = *descr;
        if (d.size() != 3 || (d[0] != '<' && d[0] != '>' && d[0] != '|')) {
            throw Error(ErrorKind::UnsupportedElementType, "descr '" + d + "'");
        }
        h.big_endian = d[0] == '>';
        const auto code = d.substr(1);
        if (code == "f4") {
            h.type = ElementType::Float32;
        } else if (code == "f8") {
            h.type = ElementType::Float64;
        } else if (code == "i2") {
            h.type = ElementType::Int16;
        } else {
            throw Error(ErrorKind::UnsupportedElementType, "descr '" + d + "'");
        }
        if (d[0] == '|') throw Error(ErrorKind::UnsupportedElementType, "descr '" + d + "'");
        return h;
    }

private:
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n')) ++pos_;
    }

    void expect(char c) {
        skip_ws();
        if (peek() != c) malformed(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string string_literal() {
        skip_ws();
        const char quote = peek();
        if (quote != '\'' && quote != '"') malformed("expected string literal");
        ++pos_;
        const auto end = text_.find(quote, pos_);
        if (end == std::string_view::npos) malformed("unterminated string literal");
        std::string s(text_.substr(pos_, end - pos_));
        pos_ = end + 1;
        return s;
    }

    bool boolean() {
        skip_ws();
        if (text_.substr(pos_, 4) == "True") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "False") {
            pos_ += 5;
            return false;
        }
        malformed("expected True or False");
    }

    std::vector<std::size_t> tuple() {
        expect('(');
        std::vector<std::size_t> dims;
        while (true) {
            skip_ws();
            if (peek() == ')') {
                ++pos_;
                break;
            }
            std::size_t value = 0;
            std::size_t digits = 0;
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
                if (value > (std::numeric_limits<std::size_t>::max() - 9) / 10) malformed("dimension overflow");
                value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
                ++pos_;
                ++digits;
            }
            // numpy may emit 'L' suffixes from python 2 writers
            if (peek() == 'L') ++pos_;
            if (digits == 0) malformed("expected integer in shape tuple");
            dims.push_back(value);
            skip_ws();
            if (peek() == ',') {
                ++pos_;
            } else if (peek() != ')') {
                malformed("expected ',' or ')' in shape tuple");
            }
        }
        return dims;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

template <typename T>
std::vector<T> decode_payload(std::span<const std::byte> payload, std::size_t count, bool swap) {
    std::vector<T> out(count);
    if (count == 0) return out;
    std::memcpy(out.data(), payload.data(), count * sizeof(T));
    if (swap) {
        for (auto& v : out) v = detail::byteswap(v);
    }
    return out;
}

template <typename T>
std::vector<T> fortran_to_c(const std::vector<T>& src, const std::vector<std::size_t>& shape) {
    const std::size_t rank = shape.size();
    std::vector<T> dst(src.size());
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t linear = 0; linear < dst.size(); ++linear) {
        std::size_t offset = 0;
        std::size_t stride = 1;
        for (std::size_t d = 0; d < rank; ++d) {
            offset += idx[d] * stride;
            stride *= shape[d];
        }
        dst[linear] = src[offset];
        for (std::size_t d = rank; d-- > 0;) {
            if (++idx[d] < shape[d]) break;
            idx[d] = 0;
        }
    }
    return dst;
}

std::string shape_repr(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) s += ", ";
        s += std::to_string(shape[i]);
    }
    if (shape.size() == 1) s += ",";
    s += ")";
    return s;
}

std::string descr_of(ElementType type) {
    switch (type) {
        case ElementType::Float32: return "<f4";
        case ElementType::Float64: return "<f8";
        case ElementType::Int16: return "<i2";
    }
    return {};
}

}  // namespace

Tensor read(std::span<const std::byte> bytes) {
    if (bytes.size() < kPreludeSize || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        malformed("missing NPY magic");
    }
    const auto major = static_cast<unsigned>(bytes[6]);
    const auto minor = static_cast<unsigned>(bytes[7]);
    if (major != 1 || minor != 0) {
        malformed("unsupported NPY version " + std::to_string(major) + "." + std::to_string(minor));
    }
    const std::size_t header_len =
        static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
    if (bytes.size() < kPreludeSize + header_len) malformed("header extends past end of buffer");

    const auto* text_begin = reinterpret_cast<const char*>(bytes.data() + kPreludeSize);
    std::string_view text(text_begin, header_len);
    for (char c : text) {
        if (static_cast<unsigned char>(c) >= 0x80) malformed("non-ASCII header");
    }
    auto header = HeaderScanner(text).parse();
    if (header.shape.empty() || header.shape.size() > 4) {
        malformed("tensor rank " + std::to_string(header.shape.size()) + " outside [1, 4]");
    }

    const auto esize = element_size(header.type);
    std::size_t count = 1;
    for (auto d : header.shape) {
        if (d == 0) malformed("zero-length dimension");
        if (count > std::numeric_limits<std::size_t>::max() / d) malformed("shape overflow");
        count *= d;
    }
    const auto payload = bytes.subspan(kPreludeSize + header_len);
    if (count > payload.size() / esize) {
        throw Error(ErrorKind::TruncatedPayload, "need " + std::to_string(count) + " elements, buffer holds " +
                                                     std::to_string(payload.size() / esize));
    }

    auto build = [&](auto tag) -> Tensor {
        using T = decltype(tag);
        auto values = decode_payload<T>(payload, count, header.big_endian);
        if (header.fortran_order && header.shape.size() > 1) values = fortran_to_c(values, header.shape);
        return Tensor(header.shape, std::move(values));
    };
    switch (header.type) {
        case ElementType::Float32: return build(float{});
        case ElementType::Float64: return build(double{});
        case ElementType::Int16: return build(std::int16_t{});
    }
    throw Error(ErrorKind::UnsupportedElementType, "unreachable");
}

std::vector<std::byte> write(const Tensor& tensor) {
    if (tensor.rank() == 0) throw Error(ErrorKind::InvariantViolation, "tensor has empty shape");

    std::string dict = "{'descr': '" + descr_of(tensor.element_type()) +
                       "', 'fortran_order': False, 'shape': " + shape_repr(tensor.shape()) + ", }";
    const auto leading = std::to_string(tensor.shape().front()).size();
    dict.append(kGrowthAxisMaxDigits - std::min(leading, kGrowthAxisMaxDigits), ' ');
    const std::size_t unpadded = kPreludeSize + dict.size() + 1;
    // numpy pads a full block when already aligned
    dict.append(kAlign - unpadded % kAlign, ' ');
    dict.push_back('\n');

    const auto payload = tensor.bytes();
    std::vector<std::byte> out(kPreludeSize + dict.size() + payload.size());
    std::memcpy(out.data(), kMagic, sizeof(kMagic));
    out[6] = std::byte{1};
    out[7] = std::byte{0};
    out[8] = static_cast<std::byte>(dict.size() & 0xFF);
    out[9] = static_cast<std::byte>((dict.size() >> 8) & 0xFF);
    std::memcpy(out.data() + kPreludeSize, dict.data(), dict.size());
    if (!payload.empty()) std::memcpy(out.data() + kPreludeSize + dict.size(), payload.data(), payload.size());
    return out;
}

}  // namespace dissect::npy
