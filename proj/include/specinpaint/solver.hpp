#pragma once

#include <specinpaint/core.hpp>
#include <specinpaint/pca.hpp>

#include <optional>
#include <utility>
#include <vector>

namespace specinpaint {

/// Controls for FISTA and the regularization search.
struct SolverConfig
{
    /// Fixed regularization weight; nullopt selects it by lambda_search.
    std::optional<double> lambda;
    int max_iters = 1000;
    double rel_tol = 1e-5;
    /// Data-fidelity value the search aims for (typically 0.5 sigma^2 B N).
    std::optional<double> target_residual;
    /// Search bracket; default (1e-6, 1e2) * ||Y||_F.
    std::optional<std::pair<double, double>> lambda_bracket;
    double search_tol = 0.1;
    int max_probes = 30;

    void validate() const;
};

struct SolverReport
{
    int iterations_run = 0;
    std::vector<double> objective_trace; ///< f + g after each iteration
    double final_objective = 0.0;
    double final_data_fidelity = 0.0;
    double final_regularizer = 0.0; ///< unweighted ||X Psi||_{2,1}
    double chosen_lambda = 0.0;
    bool converged = false;
};

struct ObjectiveTerms
{
    double f; ///< 0.5 ||Y - X Phi||_F^2
    double g; ///< lambda ||X Psi||_{2,1}

    double total() const { return f + g; }
};

/// Data fidelity and weighted l2,1 penalty of the band-DCT coefficients.
ObjectiveTerms objective(const SpectrumImage& x, const Observation& y, double lambda);

/// (X Phi - Y) Phi^T: residual at sampled pixels, zero elsewhere.
SpectrumImage grad_f(const SpectrumImage& x, const Observation& y);

/// Column-wise group soft-threshold. Column j becomes 0 when its norm is
/// below tau and is scaled by (1 - tau / norm) otherwise.
template <typename Derived>
typename Derived::PlainObject prox_l21(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar tau)
{
    using Scalar = typename Derived::Scalar;
    if (!(tau >= Scalar(0))) throw InvalidArgument("prox_l21: tau must be non-negative");
    typename Derived::PlainObject out = v;
    if (tau == Scalar(0)) return out;
    const auto norms = v.colwise().norm().eval();
    for (Index j = 0; j < v.cols(); ++j) {
        const Scalar nj = norms(j);
        if (nj < tau) {
            out.col(j).setZero();
        } else {
            out.col(j) *= Scalar(1) - tau / nj;
        }
    }
    return out;
}

/// Proximal operator of tau ||. Psi||_{2,1} for the orthonormal band DCT Psi.
SpectrumImage prox_g(const SpectrumImage& x, double tau);

struct Reconstruction
{
    SpectrumImage image;
    SolverReport report;
};

/// FISTA with constant step 1/L, L = ||Phi Phi^T|| = 1. Starts from
/// `initial` when given, otherwise from embed(y). Stops when the relative
/// iterate change drops below rel_tol or after max_iters. Throws
/// NonFiniteError if an iterate blows up.
Reconstruction fista(const Observation& y, double lambda, const SolverConfig& config,
                     const std::optional<SpectrumImage>& initial = std::nullopt);

/// ||X - prox_{g/L}(X - grad f(X) / L)||_F / max(||X||_F, 1).
double fixed_point_residual(const SpectrumImage& x, const Observation& y, double lambda);

/// Thrown by lambda_search when the target fidelity lies outside the bracket.
struct UnreachableTarget : Error
{
    enum class End
    {
        Low, ///< fidelity at the lower bracket end already exceeds the target
        High ///< fidelity at the upper bracket end is still below the target
    };
    UnreachableTarget(End end, const std::string& what) : Error(what), end(end) {}
    End end;
};

struct LambdaSearchResult
{
    double lambda;
    SpectrumImage image;
    SolverReport report;
    int probes;
};

/// Bisection on log10(lambda) until the data fidelity lands within
/// target * (1 +- search_tol). Each probe warm-starts from the previous
/// solution. Returns the closest probe if the probe budget runs out.
LambdaSearchResult lambda_search(const Observation& y, const SolverConfig& config);

/// Default noise-energy target 0.5 sigma^2 * bands * N.
double noise_residual_target(double sigma, const Observation& y);

struct ClsOptions
{
    bool use_pca = true;
    /// Number of principal components; nullopt selects it from whiteness.
    std::optional<Index> components;
    SolverConfig solver;
    /// Noise standard deviation per band value; sets the target of the
    /// automatic lambda when solver.target_residual is absent.
    std::optional<double> noise_sigma;
};

struct ClsResult
{
    SpectrumImage image;
    SolverReport report;
    Index components_used; ///< 0 when solved in the full band space
};

/// Full pipeline: optional PCA reduction, FISTA (fixed or searched lambda),
/// back-projection.
ClsResult cls_reconstruct(const Observation& y, const ClsOptions& options);

} // namespace specinpaint
