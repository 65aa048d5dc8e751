#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace randnla {

/// Cholesky hit a non-positive pivot. `pivot` is the zero-based failing index.
class NotPositiveDefinite : public std::runtime_error {
  public:
    explicit NotPositiveDefinite(std::ptrdiff_t pivot, const std::string& where = "chol")
        : std::runtime_error(where + ": matrix is not numerically positive definite (pivot " +
                             std::to_string(pivot) + ")"),
          pivot_(pivot) {}
    [[nodiscard]] std::ptrdiff_t pivot() const noexcept { return pivot_; }

  private:
    std::ptrdiff_t pivot_;
};

/// A factor required to have full rank did not.
class RankDeficient : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// PCG encountered a direction with <p, (G + mu I) p> <= 0.
class NegativeCurvature : public std::runtime_error {
  public:
    explicit NegativeCurvature(int iteration, double curvature)
        : std::runtime_error("pcg: non-positive curvature " + std::to_string(curvature) + " at iteration " +
                             std::to_string(iteration) + "; operator is not positive semidefinite"),
          iteration_(iteration) {}
    [[nodiscard]] int iteration() const noexcept { return iteration_; }

  private:
    int iteration_;
};

/// A scalar function used in quadrature was evaluated outside its domain.
class DomainError : public std::domain_error {
  public:
    DomainError(const std::string& what, double node) : std::domain_error(what), node_(node) {}
    [[nodiscard]] double node() const noexcept { return node_; }

  private:
    double node_;
};

}  // namespace randnla
