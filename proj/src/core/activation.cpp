#include "dissect/activation.hpp"

#include <cmath>

#include "dissect/error.hpp"
#include "dissect/file_util.hpp"
#include "dissect/npy.hpp"

namespace dissect {

ActivationVolume::ActivationVolume(std::string sample_id, std::size_t units, std::array<std::size_t, 3> spatial,
                                   std::vector<float> values)
    : sample_id_(std::move(sample_id)), units_(units), spatial_(spatial), values_(std::move(values)) {
    if (units_ == 0 || voxels() == 0) {
        throw Error(ErrorKind::InvariantViolation, "activation volume needs K >= 1 and a non-empty grid");
    }
    if (values_.size() != units_ * voxels()) {
        throw Error(ErrorKind::InvariantViolation, "activation value count does not match K x D x H x W");
    }
    for (float v : values_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvariantViolation, "non-finite activation in sample '" + sample_id_ + "'");
        }
    }
}

ActivationVolume ActivationVolume::from_tensor(std::string sample_id, const Tensor& tensor) {
    if (tensor.rank() != 4) {
        throw Error(ErrorKind::ShapeMismatch, "activation tensor for '" + sample_id + "' has rank " +
                                                  std::to_string(tensor.rank()) + ", expected (K, D, H, W)");
    }
    const auto& s = tensor.shape();
    return ActivationVolume(std::move(sample_id), s[0], {s[1], s[2], s[3]}, tensor.to_float());
}

Tensor ActivationVolume::to_tensor() const {
    return Tensor({units_, spatial_[0], spatial_[1], spatial_[2]}, values_);
}

std::span<const float> ActivationVolume::unit(std::size_t k) const {
    if (k >= units_) throw Error(ErrorKind::DimensionMismatch, "unit index out of range");
    return std::span<const float>(values_).subspan(k * voxels(), voxels());
}

std::span<float> ActivationVolume::mutable_unit(std::size_t k) {
    if (k >= units_) throw Error(ErrorKind::DimensionMismatch, "unit index out of range");
    return std::span<float>(values_).subspan(k * voxels(), voxels());
}

ActivationVolume load_activation(const DatasetIndex& dataset, const SampleEntry& entry) {
    const auto bytes = read_file(dataset.activation_file(entry));
    return ActivationVolume::from_tensor(entry.sample_id, npy::read(bytes));
}

std::shared_ptr<const ActivationVolume> ManifestActivationSource::load(std::size_t i) const {
    return std::make_shared<const ActivationVolume>(load_activation(*dataset_, dataset_->entries().at(i)));
}

std::shared_ptr<const ActivationVolume> MemoryActivationSource::load(std::size_t i) const {
    // aliasing constructor: no ownership, the span outlives the source's users
    return std::shared_ptr<const ActivationVolume>(std::shared_ptr<const ActivationVolume>(), &volumes_[i]);
}

}  // namespace dissect
