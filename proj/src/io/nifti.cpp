#include "dissect/nifti.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>

#include "dissect/detail/bytes.hpp"
#include "dissect/error.hpp"

namespace dissect::nifti {
namespace {

constexpr std::int16_t kInt16 = 4;
constexpr std::int16_t kFloat32 = 16;
constexpr std::size_t kSingleFileOffset = 352;

class HeaderView {
public:
    HeaderView(std::span<const std::byte> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    template <typename T>
    T get(std::size_t offset) const {
        std::array<std::byte, sizeof(T)> raw{};
        std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
        if (swap_) std::reverse(raw.begin(), raw.end());
        return std::bit_cast<T>(raw);
    }

    float f32(std::size_t offset) const { return get<float>(offset); }
    std::int16_t i16(std::size_t offset) const { return get<std::int16_t>(offset); }

private:
    std::span<const std::byte> bytes_;
    bool swap_;
};

class HeaderWriter {
public:
    HeaderWriter() : bytes_(kSingleFileOffset, std::byte{0}) {}

    template <typename T>
    void put(std::size_t offset, T value) {
        std::memcpy(bytes_.data() + offset, &value, sizeof(T));
    }

    void put_text(std::size_t offset, std::string_view text, std::size_t capacity) {
        std::memcpy(bytes_.data() + offset, text.data(), std::min(text.size(), capacity));
    }

    std::vector<std::byte> take() { return std::move(bytes_); }

private:
    std::vector<std::byte> bytes_;
};

Mat3 quaternion_to_rotation(double b, double c, double d, double qfac) {
    double a = 1.0 - (b * b + c * c + d * d);
    if (a < 1e-7) {
        // 180 degree rotation: renormalize (b, c, d) as the NIfTI reference does
        const double len = std::sqrt(b * b + c * c + d * d);
        if (len == 0.0) throw Error(ErrorKind::NonInvertibleOrientation, "zero quaternion");
        b /= len;
        c /= len;
        d /= len;
        a = 0.0;
    } else {
        a = std::sqrt(a);
    }
    Mat3 r = Mat3::from_columns({a * a + b * b - c * c - d * d, 2 * (b * c + a * d), 2 * (b * d - a * c)},
                                {2 * (b * c - a * d), a * a + c * c - b * b - d * d, 2 * (c * d + a * b)},
                                {2 * (b * d + a * c), 2 * (c * d - a * b), a * a + d * d - c * c - b * b});
    if (qfac < 0) r.col[2] = -1.0 * r.col[2];
    return r;
}

// Proper rotation part and qfac for a direction matrix.
std::array<double, 4> rotation_to_quaternion(Mat3 m) {
    double qfac = 1.0;
    if (m.determinant() < 0) {
        qfac = -1.0;
        m.col[2] = -1.0 * m.col[2];
    }
    const double r11 = m.at(0, 0), r12 = m.at(0, 1), r13 = m.at(0, 2);
    const double r21 = m.at(1, 0), r22 = m.at(1, 1), r23 = m.at(1, 2);
    const double r31 = m.at(2, 0), r32 = m.at(2, 1), r33 = m.at(2, 2);
    double a = r11 + r22 + r33 + 1.0;
    double b, c, d;
    if (a > 0.5) {
        a = 0.5 * std::sqrt(a);
        b = 0.25 * (r32 - r23) / a;
        c = 0.25 * (r13 - r31) / a;
        d = 0.25 * (r21 - r12) / a;
    } else {
        const double xd = 1.0 + r11 - (r22 + r33);
        const double yd = 1.0 + r22 - (r11 + r33);
        const double zd = 1.0 + r33 - (r11 + r22);
        if (xd > 1.0) {
            b = 0.5 * std::sqrt(xd);
            c = 0.25 * (r12 + r21) / b;
            d = 0.25 * (r13 + r31) / b;
            a = 0.25 * (r32 - r23) / b;
        } else if (yd > 1.0) {
            c = 0.5 * std::sqrt(yd);
            b = 0.25 * (r12 + r21) / c;
            d = 0.25 * (r23 + r32) / c;
            a = 0.25 * (r13 - r31) / c;
        } else {
            d = 0.5 * std::sqrt(zd);
            b = 0.25 * (r13 + r31) / d;
            c = 0.25 * (r23 + r32) / d;
            a = 0.25 * (r21 - r12) / d;
        }
        if (a < 0.0) {
            b = -b;
            c = -c;
            d = -d;
        }
    }
    return {b, c, d, qfac};
}

Mat3 orthonormalize(Mat3 m) {
    Vec3 c0 = m.col[0] / norm(m.col[0]);
    Vec3 c1 = m.col[1] - dot(m.col[1], c0) * c0;
    c1 = c1 / norm(c1);
    Vec3 c2 = m.col[2] - dot(m.col[2], c0) * c0 - dot(m.col[2], c1) * c1;
    c2 = c2 / norm(c2);
    return Mat3::from_columns(c0, c1, c2);
}

struct ParsedHeader {
    std::array<std::size_t, 3> dims{};
    std::int16_t datatype = 0;
    std::size_t vox_offset = 0;
    double slope = 0.0;
    double inter = 0.0;
    Vec3 spacing{};
    Vec3 origin{};
    Mat3 directions;
    bool single_file = true;
    bool swap = false;
    std::string descrip;
};

ParsedHeader parse_header(std::span<const std::byte> bytes) {
    if (bytes.size() < kHeaderSize) throw Error(ErrorKind::TruncatedPayload, "NIfTI header shorter than 348 bytes");

    std::int32_t sizeof_hdr = 0;
    std::memcpy(&sizeof_hdr, bytes.data(), 4);
    bool swap = false;
    if (sizeof_hdr != 348) {
        if (detail::byteswap(sizeof_hdr) != 348) throw Error(ErrorKind::MalformedHeader, "sizeof_hdr is not 348");
        swap = true;
    }
    const HeaderView h(bytes, swap);

    const auto* magic = reinterpret_cast<const char*>(bytes.data() + 344);
    ParsedHeader p;
    if (std::memcmp(magic, "n+1\0", 4) == 0) {
        p.single_file = true;
    } else if (std::memcmp(magic, "ni1\0", 4) == 0) {
        p.single_file = false;
    } else {
        throw Error(ErrorKind::BadMagic, "expected 'n+1' or 'ni1'");
    }

    const auto ndim = h.i16(40);
    if (ndim < 3 || ndim > 7) throw Error(ErrorKind::MalformedHeader, "dim[0] = " + std::to_string(ndim));
    for (int d = 0; d < 3; ++d) {
        const auto extent = h.i16(42 + 2 * d);
        if (extent <= 0) throw Error(ErrorKind::MalformedHeader, "non-positive dimension");
        p.dims[d] = static_cast<std::size_t>(extent);
    }
    for (int d = 3; d < ndim; ++d) {
        if (h.i16(42 + 2 * d) > 1) throw Error(ErrorKind::MalformedHeader, "only 3D volumes are supported");
    }

    p.datatype = h.i16(70);
    if (p.datatype != kInt16 && p.datatype != kFloat32) {
        throw Error(ErrorKind::UnsupportedDatatype, "datatype code " + std::to_string(p.datatype));
    }

    const float vox_offset = h.f32(108);
    if (!std::isfinite(vox_offset) || vox_offset < 0 || vox_offset > 1e9f) {
        throw Error(ErrorKind::MalformedHeader, "invalid vox_offset");
    }
    p.vox_offset = static_cast<std::size_t>(vox_offset);
    if (p.single_file && p.vox_offset < kHeaderSize) {
        throw Error(ErrorKind::MalformedHeader, "vox_offset inside header");
    }

    p.slope = h.f32(112);
    p.inter = h.f32(116);
    if (!std::isfinite(p.slope) || !std::isfinite(p.inter)) {
        p.slope = 0.0;
        p.inter = 0.0;
    }

    const float qfac_raw = h.f32(76);
    for (int d = 0; d < 3; ++d) {
        const double s = std::abs(static_cast<double>(h.f32(80 + 4 * d)));
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw Error(ErrorKind::NonInvertibleOrientation, "pixdim must be positive and finite");
        }
        p.spacing[d] = s;
    }

    const auto qform_code = h.i16(252);
    const auto sform_code = h.i16(254);
    if (sform_code > 0) {
        Mat3 affine;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) affine.col[c][r] = h.f32(280 + 16 * r + 4 * c);
            p.origin[r] = h.f32(280 + 16 * r + 12);
        }
        for (int c = 0; c < 3; ++c) {
            const double len = norm(affine.col[c]);
            if (!(len > 1e-12) || !std::isfinite(len)) {
                throw Error(ErrorKind::NonInvertibleOrientation, "sform has a zero column");
            }
            affine.col[c] = affine.col[c] / len;
        }
        if (std::abs(affine.determinant()) < 1e-6) {
            throw Error(ErrorKind::NonInvertibleOrientation, "sform direction matrix is singular");
        }
        p.directions = orthonormalize(affine);
    } else if (qform_code > 0) {
        const double b = h.f32(256), c = h.f32(260), d = h.f32(264);
        if (!std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d)) {
            throw Error(ErrorKind::NonInvertibleOrientation, "non-finite quaternion");
        }
        p.directions = quaternion_to_rotation(b, c, d, qfac_raw < 0 ? -1.0 : 1.0);
        p.origin = {h.f32(268), h.f32(272), h.f32(276)};
    }
    for (int d = 0; d < 3; ++d) {
        if (!std::isfinite(p.origin[d])) throw Error(ErrorKind::NonInvertibleOrientation, "non-finite origin");
    }

    const auto* descrip = reinterpret_cast<const char*>(bytes.data() + 148);
    p.descrip.assign(descrip, strnlen(descrip, 80));

    p.vox_offset = p.single_file ? p.vox_offset : 0;
    p.swap = swap;
    return p;
}

Volume decode(const ParsedHeader& p, std::span<const std::byte> image, IntensityUnit unit) {
    const bool swap = p.swap;
    const auto datatype = p.datatype;
    const std::size_t count = p.dims[0] * p.dims[1] * p.dims[2];
    const std::size_t esize = datatype == kInt16 ? 2 : 4;
    if (image.size() < count * esize) {
        throw Error(ErrorKind::TruncatedPayload, "image holds " + std::to_string(image.size()) + " bytes, need " +
                                                     std::to_string(count * esize));
    }

    const bool scaled = p.slope != 0.0 && !(p.slope == 1.0 && p.inter == 0.0);
    std::vector<float> voxels(count);
    for (std::size_t n = 0; n < count; ++n) {
        double raw = 0.0;
        if (datatype == kInt16) {
            std::int16_t v;
            std::memcpy(&v, image.data() + 2 * n, 2);
            if (swap) v = detail::byteswap(v);
            raw = v;
            voxels[n] = scaled ? static_cast<float>(raw * p.slope + p.inter) : static_cast<float>(v);
        } else {
            std::uint32_t bits;
            std::memcpy(&bits, image.data() + 4 * n, 4);
            if (swap) bits = detail::byteswap(bits);
            const float v = std::bit_cast<float>(bits);
            voxels[n] = scaled ? static_cast<float>(static_cast<double>(v) * p.slope + p.inter) : v;
        }
    }

    Volume vol;
    vol.tensor = Tensor({p.dims[2], p.dims[1], p.dims[0]}, std::move(voxels));
    vol.spacing_mm = p.spacing;
    vol.origin_mm = p.origin;
    vol.directions = p.directions;
    vol.intensity_unit = unit;
    if (p.descrip == "intensity=normalized") {
        vol.intensity_unit = IntensityUnit::Normalized;
    } else if (p.descrip == "intensity=raw") {
        vol.intensity_unit = IntensityUnit::Raw;
    } else if (p.descrip == "intensity=HU") {
        vol.intensity_unit = IntensityUnit::HU;
    }
    return vol;
}

}  // namespace

Volume read(std::span<const std::byte> bytes, IntensityUnit unit) {
    const auto header = parse_header(bytes);
    if (!header.single_file) throw Error(ErrorKind::BadMagic, "'ni1' header needs the separate image file");
    if (header.vox_offset > bytes.size()) throw Error(ErrorKind::TruncatedPayload, "vox_offset past end of file");
    return decode(header, bytes.subspan(header.vox_offset), unit);
}

Volume read_pair(std::span<const std::byte> header_bytes, std::span<const std::byte> image, IntensityUnit unit) {
    const auto header = parse_header(header_bytes);
    if (header.single_file) return read(header_bytes, unit);
    return decode(header, image, unit);
}

std::vector<std::byte> write(const Volume& volume) {
    volume.validate();
    for (std::size_t d = 0; d < 3; ++d) {
        if (volume.tensor.shape()[d] > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max())) {
            throw Error(ErrorKind::InvariantViolation, "volume extent exceeds NIfTI-1 limit");
        }
    }

    HeaderWriter w;
    w.put<std::int32_t>(0, 348);
    w.put<char>(38, 'r');
    const std::array<std::int16_t, 8> dim{3,
                                          static_cast<std::int16_t>(volume.nx()),
                                          static_cast<std::int16_t>(volume.ny()),
                                          static_cast<std::int16_t>(volume.nz()),
                                          1, 1, 1, 1};
    for (int d = 0; d < 8; ++d) w.put<std::int16_t>(40 + 2 * d, dim[d]);
    w.put<std::int16_t>(70, kFloat32);
    w.put<std::int16_t>(72, 32);

    const auto quat = rotation_to_quaternion(volume.directions);
    const std::array<float, 8> pixdim{static_cast<float>(quat[3]),
                                      static_cast<float>(volume.spacing_mm.x),
                                      static_cast<float>(volume.spacing_mm.y),
                                      static_cast<float>(volume.spacing_mm.z),
                                      1.0f, 1.0f, 1.0f, 1.0f};
    for (int d = 0; d < 8; ++d) w.put<float>(76 + 4 * d, pixdim[d]);
    w.put<float>(108, static_cast<float>(kSingleFileOffset));
    w.put<float>(112, 0.0f);
    w.put<float>(116, 0.0f);
    w.put<char>(123, 2);  // xyzt_units: millimetres
    w.put_text(148, "intensity=" + std::string(to_string(volume.intensity_unit)), 79);

    w.put<std::int16_t>(252, 1);
    w.put<std::int16_t>(254, 1);
    w.put<float>(256, static_cast<float>(quat[0]));
    w.put<float>(260, static_cast<float>(quat[1]));
    w.put<float>(264, static_cast<float>(quat[2]));
    w.put<float>(268, static_cast<float>(volume.origin_mm.x));
    w.put<float>(272, static_cast<float>(volume.origin_mm.y));
    w.put<float>(276, static_cast<float>(volume.origin_mm.z));
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            w.put<float>(280 + 16 * r + 4 * c, static_cast<float>(volume.directions.at(r, c) * volume.spacing_mm[c]));
        }
        w.put<float>(280 + 16 * r + 12, static_cast<float>(volume.origin_mm[r]));
    }
    w.put_text(344, std::string_view("n+1\0", 4), 4);

    auto out = w.take();
    const auto payload = volume.tensor.bytes();
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

}  // namespace dissect::nifti
