#pragma once

#include <specinpaint/core.hpp>

#include <vector>

namespace specinpaint {

/// Bucketed spatial index over the sampled pixels of a mask, answering
/// exact k-nearest queries by expanding rings of cells. Distances are
/// Euclidean on integer pixel coordinates; equal distances are ordered by
/// row-major pixel index.
class SampleGrid
{
public:
    explicit SampleGrid(const SamplingMask& mask);

    struct Neighbor
    {
        Index sample;       ///< observation column
        Index distance_sq;  ///< squared pixel distance
    };

    /// The k nearest samples to (row, col), closest first.
    std::vector<Neighbor> nearest(Index row, Index col, Index k) const;

private:
    const SamplingMask* mask_;
    Index cell_;
    Index cells_y_;
    Index cells_x_;
    std::vector<std::vector<Index>> buckets_; // sample ordinals, ascending
};

/// Each unsampled pixel copies the spectrum of its nearest sampled pixel.
SpectrumImage nn_reconstruct(const Observation& y);

/// Each unsampled pixel is the inverse-distance weighted mean of its k
/// nearest sampled spectra.
SpectrumImage weighted_nn_reconstruct(const Observation& y, Index k = 4);

} // namespace specinpaint
