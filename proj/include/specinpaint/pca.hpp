#pragma once

#include <specinpaint/core.hpp>

#include <Eigen/Core>

#include <span>
#include <vector>

namespace specinpaint {

/// Mean spectrum plus orthonormal spectral components, sorted by
/// decreasing eigenvalue of the sample covariance.
struct PcaModel
{
    Eigen::VectorXd mean;        ///< B
    Eigen::MatrixXd components;  ///< B x K, orthonormal columns
    Eigen::VectorXd eigenvalues; ///< K, non-negative, descending

    Index bands() const { return components.rows(); }
    Index rank() const { return components.cols(); }
};

/// Fits on the N observed spectra only. K = min(B, N - 1). The covariance
/// eigenproblem is solved in dimension min(B, N). Each component's
/// largest-magnitude entry is made positive.
PcaModel pca_fit(const Observation& y);

/// Replaces each spectrum by its first `t` centered principal coordinates.
Observation pca_project(const Observation& y, const PcaModel& model, Index t);

/// Inverse of pca_project on an image whose bands are principal coordinates.
SpectrumImage pca_backproject(const SpectrumImage& coords, const PcaModel& model);

/// Whiteness criterion: sqrt of the summed squares of the normalized
/// circular 2D autocorrelation at every nonzero lag. Large for spatially
/// structured planes, about 1 for white noise. Invariant to offset and
/// positive scaling. Throws on a constant plane.
double whiteness_score(const Eigen::Ref<const Eigen::MatrixXd>& plane);

/// Whiteness of each principal-coordinate plane of the zero-embedded
/// observation. Components whose eigenvalue is below 1e-10 of the leading
/// one carry no signal at all and score 0.
std::vector<double> component_whiteness(const Observation& y, const PcaModel& model);

/// Smallest T such that every score after index T sits at or below
/// median + 3 * MAD of the trailing quarter (MAD scaled to a normal sigma).
/// Clamped to [1, scores.size()]; fewer than three scores yield 1.
Index select_threshold(std::span<const double> scores);

/// select_threshold(component_whiteness(y, model)).
Index auto_threshold(const Observation& y, const PcaModel& model);

} // namespace specinpaint
