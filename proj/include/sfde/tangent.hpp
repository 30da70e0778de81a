#pragma once

#include <span>
#include <vector>

#include "sfde/model.hpp"
#include "sfde/path.hpp"

namespace sfde {

/// Z(., s) for one perturbation node s: d x d matrices over all path nodes,
/// zero before s and on the history, identity at s.
class TangentColumn {
public:
    TangentColumn(int n_nodes, int d, int s_node)
        : d_(d), s_node_(s_node), z_(static_cast<size_t>(n_nodes) * d * d, 0.0) {}

    int dim() const { return d_; }
    int s_node() const { return s_node_; }
    const double* mat(int node) const { return z_.data() + static_cast<size_t>(node) * d_ * d_; }
    double* mat(int node) { return z_.data() + static_cast<size_t>(node) * d_ * d_; }
    double at(int node, int row, int col) const { return mat(node)[row * d_ + col]; }

private:
    int d_;
    int s_node_;
    std::vector<double> z_;
};

/// Left-point Euler recursion of the variational equation along the path,
/// seeded with the identity at node s.
TangentColumn tangent_z(const ModelSpec& model, const PathRecord& path, double s_time);

/// Phi(t, s) = Z(t, s) A(s, X_s), the density of the Malliavin derivative in
/// its time argument. d x m, column i for the i-th driving component; zero
/// for s > t.
std::vector<double> malliavin_derivative(const ModelSpec& model, const PathRecord& path,
                                         const TangentColumn& col, double t);

struct CovMatrix {
    int n = 0;                  // side length
    std::vector<double> a;      // row-major n x n
    std::vector<double> times;  // the node times this matrix refers to

    double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
    double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
};

CovMatrix covariance_single(const ModelSpec& model, const PathRecord& path, double t);

/// Block (j,k) = left-Riemann sum of Phi(t_j, s) Phi(t_k, s)^T over s-cells.
CovMatrix covariance_joint(const ModelSpec& model, const PathRecord& path,
                           std::span<const double> times);

struct AveragedFunctional;

/// Scalar Malliavin covariance of the time-average functional (d = m = 1).
double covariance_average(const ModelSpec& model, const PathRecord& path,
                          const ScalarFn& f, double t);

/// Cyclic Jacobi on a symmetric matrix; eigenvalues ascending.
std::vector<double> jacobi_eigenvalues(const CovMatrix& matrix);

double min_eigenvalue(const CovMatrix& matrix);
double determinant_from_eigenvalues(const CovMatrix& matrix);

} // namespace sfde
