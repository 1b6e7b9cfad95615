#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dissect/manifest.hpp"
#include "dissect/tensor.hpp"

namespace dissect {

/// One sample's final-layer activations, stored channel-first (K, D, H, W).
class ActivationVolume {
public:
    ActivationVolume() = default;
    /// Throws InvariantViolation on K == 0, an empty grid, a size mismatch or
    /// a non-finite value.
    ActivationVolume(std::string sample_id, std::size_t units, std::array<std::size_t, 3> spatial,
                     std::vector<float> values);

    /// Accepts a rank-4 tensor of any supported element type.
    static ActivationVolume from_tensor(std::string sample_id, const Tensor& tensor);
    Tensor to_tensor() const;

    const std::string& sample_id() const noexcept { return sample_id_; }
    std::size_t units() const noexcept { return units_; }
    const std::array<std::size_t, 3>& spatial() const noexcept { return spatial_; }
    std::size_t voxels() const noexcept { return spatial_[0] * spatial_[1] * spatial_[2]; }

    std::span<const float> unit(std::size_t k) const;
    std::span<float> mutable_unit(std::size_t k);
    std::span<const float> values() const noexcept { return values_; }

private:
    std::string sample_id_;
    std::size_t units_ = 0;
    std::array<std::size_t, 3> spatial_{};
    std::vector<float> values_;
};

/// Random access to the activation volumes of an ordered sample list.
/// `load` must be safe to call concurrently.
class ActivationSource {
public:
    virtual ~ActivationSource() = default;
    virtual std::size_t size() const = 0;
    virtual const std::string& sample_id(std::size_t i) const = 0;
    virtual std::shared_ptr<const ActivationVolume> load(std::size_t i) const = 0;
};

/// Reads `<activation_path>` NPY files of a manifest on demand.
class ManifestActivationSource final : public ActivationSource {
public:
    explicit ManifestActivationSource(const DatasetIndex& dataset) : dataset_(&dataset) {}
    std::size_t size() const override { return dataset_->size(); }
    const std::string& sample_id(std::size_t i) const override { return dataset_->entries()[i].sample_id; }
    std::shared_ptr<const ActivationVolume> load(std::size_t i) const override;

private:
    const DatasetIndex* dataset_;
};

/// Non-owning view over volumes already in memory.
class MemoryActivationSource final : public ActivationSource {
public:
    explicit MemoryActivationSource(std::span<const ActivationVolume> volumes) : volumes_(volumes) {}
    std::size_t size() const override { return volumes_.size(); }
    const std::string& sample_id(std::size_t i) const override { return volumes_[i].sample_id(); }
    std::shared_ptr<const ActivationVolume> load(std::size_t i) const override;

private:
    std::span<const ActivationVolume> volumes_;
};

ActivationVolume load_activation(const DatasetIndex& dataset, const SampleEntry& entry);

}  // namespace dissect
