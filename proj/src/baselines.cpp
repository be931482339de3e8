#include <specinpaint/baselines.hpp>

#include <algorithm>
#include <cmath>

namespace specinpaint {

SampleGrid::SampleGrid(const SamplingMask& mask)
    : mask_(&mask)
{
    // About two samples per cell on average.
    const double area = 2.0 * double(mask.pixels()) / double(mask.sampled_count());
    cell_ = std::max<Index>(1, static_cast<Index>(std::ceil(std::sqrt(area))));
    cells_y_ = (mask.height() + cell_ - 1) / cell_;
    cells_x_ = (mask.width() + cell_ - 1) / cell_;
    buckets_.resize(static_cast<std::size_t>(cells_y_ * cells_x_));
    const auto& idx = mask.indices();
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const Index r = idx[j] / mask.width(), c = idx[j] % mask.width();
        buckets_[static_cast<std::size_t>((r / cell_) * cells_x_ + c / cell_)].push_back(static_cast<Index>(j));
    }
}

std::vector<SampleGrid::Neighbor> SampleGrid::nearest(Index row, Index col, Index k) const
{
    const auto& idx = mask_->indices();
    const Index width = mask_->width();
    k = std::min<Index>(k, mask_->sampled_count());

    // Sample ordinals grow with pixel index, so ordering ties by ordinal is
    // the same as ordering by row-major position.
    auto closer = [](const Neighbor& a, const Neighbor& b) {
        return a.distance_sq != b.distance_sq ? a.distance_sq < b.distance_sq : a.sample < b.sample;
    };
    std::vector<Neighbor> best;
    best.reserve(static_cast<std::size_t>(k) + 1);
    auto offer = [&](Index j) {
        const Index dr = idx[j] / width - row, dc = idx[j] % width - col;
        const Neighbor n{j, dr * dr + dc * dc};
        if (static_cast<Index>(best.size()) == k && !closer(n, best.back())) return;
        best.insert(std::upper_bound(best.begin(), best.end(), n, closer), n);
        if (static_cast<Index>(best.size()) > k) best.pop_back();
    };

    const Index cy = row / cell_, cx = col / cell_;
    const Index max_ring = std::max(cells_y_, cells_x_);
    for (Index ring = 0; ring <= max_ring; ++ring) {
        for (Index y = cy - ring; y <= cy + ring; ++y) {
            if (y < 0 || y >= cells_y_) continue;
            const bool edge_row = (y == cy - ring || y == cy + ring);
            for (Index x = cx - ring; x <= cx + ring; x += (edge_row || ring == 0) ? 1 : 2 * ring) {
                if (x < 0 || x >= cells_x_) continue;
                for (Index j : buckets_[static_cast<std::size_t>(y * cells_x_ + x)]) offer(j);
            }
        }
        // Anything in the next ring is at least ring * cell + 1 away.
        const Index bound = ring * cell_ + 1;
        if (static_cast<Index>(best.size()) == k && best.back().distance_sq < bound * bound) break;
    }
    return best;
}

SpectrumImage nn_reconstruct(const Observation& y)
{
    return weighted_nn_reconstruct(y, 1);
}

SpectrumImage weighted_nn_reconstruct(const Observation& y, Index k)
{
    const auto& mask = y.mask();
    if (k < 1 || k > mask.sampled_count()) {
        throw InvalidArgument("weighted_nn_reconstruct: k = " + std::to_string(k) + " outside [1, " +
                              std::to_string(mask.sampled_count()) + "]");
    }
    const SampleGrid grid(mask);
    CubeMatrix data(y.bands(), mask.pixels());
    const auto& idx = mask.indices();
    for (std::size_t j = 0; j < idx.size(); ++j) {
        data.col(idx[j]) = y.values().col(static_cast<Index>(j));
    }
    for (Index p = 0; p < mask.pixels(); ++p) {
        if (mask.is_sampled(p)) continue;
        const auto nbrs = grid.nearest(p / mask.width(), p % mask.width(), k);
        if (nbrs.size() == 1) {
            data.col(p) = y.values().col(nbrs.front().sample);
            continue;
        }
        double total = 0.0;
        for (const auto& n : nbrs) total += 1.0 / std::sqrt(double(n.distance_sq));
        data.col(p).setZero();
        for (const auto& n : nbrs) {
            data.col(p) += (1.0 / std::sqrt(double(n.distance_sq)) / total) * y.values().col(n.sample);
        }
    }
    return SpectrumImage(mask.height(), mask.width(), std::move(data));
}

} // namespace specinpaint
