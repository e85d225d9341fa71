#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <trajflow/geometry.hpp>

namespace trajflow {

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Cov2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  double det() const noexcept { return xx * yy - xy * xy; }
  bool positive_definite() const noexcept { return xx > 0.0 && det() > 0.0; }
  /// Eigenvalues, larger first.
  std::pair<double, double> eigenvalues() const noexcept;
  /// Projection onto {S : lambda_min(S) >= floor} keeping the eigenvectors.
  Cov2 floored(double floor) const noexcept;

  friend bool operator==(const Cov2&, const Cov2&) = default;
};

struct GaussianComponent {
  double weight = 1.0;
  PlanarPoint mean;
  Cov2 cov;
};

struct MixtureModel {
  std::vector<GaussianComponent> components;
  double train_log_likelihood = 0.0;
  std::size_t n_train = 0;

  std::size_t k() const noexcept { return components.size(); }
};

enum class BicPenalty {
  free_parameters,  // 6k - 1
  bare_k,           // k
};

struct EmConfig {
  int max_iter = 300;
  double tol = 1e-6;  // relative change of the log-likelihood
  int n_restarts = 5;
  double cov_floor = 1.0;  // m^2, lower bound on covariance eigenvalues
  std::uint64_t seed = 0;
  BicPenalty penalty = BicPenalty::free_parameters;
};

/// Throws std::domain_error when the covariance is not positive definite.
double gaussian_log_pdf(PlanarPoint p, const GaussianComponent& c);
double mixture_log_pdf(PlanarPoint p, const MixtureModel& m);
double log_likelihood(std::span<const PlanarPoint> points, const MixtureModel& m);

/// Posterior component probabilities of one point.
std::vector<double> responsibilities(PlanarPoint p, const MixtureModel& m);

/// Maximum-likelihood mixture of k bivariate normals by EM.
///
/// Each restart seeds the means k-means++ style from the data, then alternates
/// E and M steps until the relative log-likelihood change drops below
/// cfg.tol. The M-step covariance is the weighted scatter matrix with its
/// eigenvalues raised to cfg.cov_floor, which is the exact constrained
/// maximizer, so the likelihood never decreases. The best restart wins.
///
/// If `trace` is given it receives the log-likelihood of every iterate of the
/// winning restart, ending with the returned model's value.
MixtureModel em_fit(std::span<const PlanarPoint> points, int k, const EmConfig& cfg,
                    std::vector<double>* trace = nullptr);

/// Closed-form single-Gaussian fit: sample mean and (floored) sample covariance.
MixtureModel fit_single(std::span<const PlanarPoint> points, double cov_floor);

int bic_parameter_count(int k, BicPenalty penalty = BicPenalty::free_parameters) noexcept;
/// -2 ln L + n_params(k) ln n. Lower is better.
double bic(double log_likelihood, int k, std::size_t n, BicPenalty penalty = BicPenalty::free_parameters);

/// Fits every k in [k_min, k_max] and returns the BIC minimizer (ties go to
/// the smaller k). Throws std::domain_error on an empty range or when k_max
/// exceeds the number of points.
MixtureModel select_k(std::span<const PlanarPoint> points, int k_min, int k_max, const EmConfig& cfg,
                      unsigned threads = 1);

}  // namespace trajflow
