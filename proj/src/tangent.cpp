#include "sfde/tangent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "sfde/solver.hpp"

namespace sfde {

namespace {

// Direction view over one column of a TangentColumn, shaped like a history
// segment of d-vectors.
SegView column_segment(const TangentColumn& col, int anchor_node, int n_hist, int c) {
    const int d = col.dim();
    return SegView{col.mat(anchor_node - n_hist) + c, n_hist + 1, d, d * d, d};
}

void step_general(const GeneralSfdeModel& g, const PathRecord& path, TangentColumn& col,
                  int node, int step) {
    const int d = g.d;
    const double t = path.grid.time_at(node);
    const double dt = path.grid.dt();
    const SegView base = path.segment(node);

    double* next = col.mat(node + 1);
    std::memcpy(next, col.mat(node), sizeof(double) * d * d);

    const bool any_grad = static_cast<bool>(g.grad_drift) || !g.grad_diffusion.empty();
    if (!any_grad) return;

    std::vector<double> out(d);
    for (int c = 0; c < d; ++c) {
        const SegView dir = column_segment(col, node, path.grid.n_hist(), c);
        if (g.grad_drift) {
            g.grad_drift(t, base, dir, out);
            for (int rrow = 0; rrow < d; ++rrow) next[rrow * d + c] += out[rrow] * dt;
        }
        for (int i = 0; i < g.m; ++i) {
            if (static_cast<int>(g.grad_diffusion.size()) <= i || !g.grad_diffusion[i])
                continue;
            g.grad_diffusion[i](t, base, dir, out);
            const double dw = path.inc(step, i);
            for (int rrow = 0; rrow < d; ++rrow) next[rrow * d + c] += out[rrow] * dw;
        }
    }
}

void step_delayed_bs(const DelayedBsModel& bs, const PathRecord& path, TangentColumn& col,
                     int node, int step) {
    const double dt = path.grid.dt();
    const double dw = path.inc(step);
    const int lag_node = path.grid.delayed_node(node);
    const double lag = path.value(lag_node);
    const double x = path.value(node);
    const double z = col.at(node, 0, 0);
    const double z_lag = lag_node >= 0 ? col.at(lag_node, 0, 0) : 0.0;
    const double a0 = bs.a0(lag), a0p = bs.a0.deriv(lag);
    const double a1 = bs.a1(lag), a1p = bs.a1.deriv(lag);
    col.mat(node + 1)[0] =
        z + (a0p * z_lag * x + a0 * z) * dt + (a1p * z_lag * x + a1 * z) * dw;
}

void step_lifted(const Lifted2dModel& lf, const PathRecord& path, TangentColumn& col,
                 int node, int step) {
    const double dt = path.grid.dt();
    const double dw = path.inc(step);
    const int lag_node = path.grid.delayed_node(node);
    const double xt_lag = path.value(lag_node, 0);
    const double ex = std::exp(path.value(node, 0));
    const double a = lf.a1_tilde(xt_lag);
    const double ap = lf.a1_tilde_deriv(xt_lag);

    const double* z = col.mat(node);
    const double* zl = lag_node >= 0 ? col.mat(lag_node) : nullptr;
    double zl00 = zl ? zl[0] : 0.0, zl01 = zl ? zl[1] : 0.0;

    double* next = col.mat(node + 1);
    // d1A1 = [[ap, 0], [0, 0]], d1A0 = [[-a*ap, 0], [0, 0]], d2A0 = [[0,0],[ex,0]]
    next[0] = z[0] + ap * zl00 * dw - a * ap * zl00 * dt;
    next[1] = z[1] + ap * zl01 * dw - a * ap * zl01 * dt;
    next[2] = z[2] + ex * z[0] * dt;
    next[3] = z[3] + ex * z[1] * dt;
}

} // namespace

TangentColumn tangent_z(const ModelSpec& model, const PathRecord& path, double s_time) {
    const int s_node = path.grid.node_of(s_time);
    if (s_node < path.grid.n_hist())
        throw GridError("tangent_z: s must be a node with t >= 0");
    const int d = dim_of(model);
    TangentColumn col(path.grid.n_nodes(), d, s_node);
    double* seed = col.mat(s_node);
    for (int k = 0; k < d; ++k) seed[k * d + k] = 1.0;

    const int last = path.grid.n_nodes() - 1;
    for (int node = s_node; node < last; ++node) {
        const int step = path.grid.fwd_index(node);
        if (const auto* g = std::get_if<GeneralSfdeModel>(&model))
            step_general(*g, path, col, node, step);
        else if (const auto* bs = std::get_if<DelayedBsModel>(&model))
            step_delayed_bs(*bs, path, col, node, step);
        else
            step_lifted(std::get<Lifted2dModel>(model), path, col, node, step);
        const double* next = col.mat(node + 1);
        for (int k = 0; k < d * d; ++k)
            if (!std::isfinite(next[k]))
                throw PathAbort(step, next[k], "tangent_z: non-finite entry");
    }
    return col;
}

std::vector<double> malliavin_derivative(const ModelSpec& model, const PathRecord& path,
                                         const TangentColumn& col, double t) {
    const int d = dim_of(model);
    const int m = wdim_of(model);
    const int t_node = path.grid.node_of(t);
    std::vector<double> phi(static_cast<size_t>(d) * m, 0.0);
    if (col.s_node() > t_node) return phi;

    const double s = path.grid.time_at(col.s_node());
    const SegView seg = path.segment(col.s_node());
    const double* z = col.mat(t_node);
    std::vector<double> a(d);
    for (int i = 1; i <= m; ++i) {
        evaluate_coefficient(model, i, s, seg, a);
        for (int row = 0; row < d; ++row) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += z[row * d + k] * a[k];
            phi[row * m + (i - 1)] = acc;
        }
    }
    return phi;
}

CovMatrix covariance_joint(const ModelSpec& model, const PathRecord& path,
                           std::span<const double> times) {
    if (times.empty()) throw ModelError("covariance_joint: need at least one time");
    const int d = dim_of(model);
    const int m = wdim_of(model);
    const int nt = static_cast<int>(times.size());
    std::vector<int> t_nodes(nt);
    for (int j = 0; j < nt; ++j) {
        t_nodes[j] = path.grid.node_of(times[j]);
        if (t_nodes[j] <= path.grid.n_hist())
            throw ModelError("covariance_joint: times must be forward nodes");
        if (j > 0 && t_nodes[j] <= t_nodes[j - 1])
            throw ModelError("covariance_joint: times must be strictly increasing");
    }

    const int nd = nt * d;
    CovMatrix cov;
    cov.n = nd;
    cov.a.assign(static_cast<size_t>(nd) * nd, 0.0);
    cov.times.assign(times.begin(), times.end());

    const double dt = path.grid.dt();
    const int max_node = t_nodes.back();
    std::vector<std::vector<double>> phi(nt);

    for (int s_node = path.grid.n_hist(); s_node < max_node; ++s_node) {
        const TangentColumn col = tangent_z(model, path, path.grid.time_at(s_node));
        for (int j = 0; j < nt; ++j)
            phi[j] = s_node < t_nodes[j]
                         ? malliavin_derivative(model, path, col, times[j])
                         : std::vector<double>();
        for (int j = 0; j < nt; ++j) {
            if (phi[j].empty()) continue;
            for (int k = j; k < nt; ++k) {
                if (phi[k].empty()) continue;
                for (int rj = 0; rj < d; ++rj)
                    for (int rk = 0; rk < d; ++rk) {
                        double acc = 0.0;
                        for (int i = 0; i < m; ++i)
                            acc += phi[j][rj * m + i] * phi[k][rk * m + i];
                        cov.at(j * d + rj, k * d + rk) += acc * dt;
                    }
            }
        }
    }
    for (int i = 0; i < nd; ++i)
        for (int j = 0; j < i; ++j) cov.at(i, j) = cov.at(j, i);
    return cov;
}

CovMatrix covariance_single(const ModelSpec& model, const PathRecord& path, double t) {
    const double times[1] = {t};
    return covariance_joint(model, path, times);
}

double covariance_average(const ModelSpec& model, const PathRecord& path,
                          const ScalarFn& f, double t) {
    if (dim_of(model) != 1 || wdim_of(model) != 1)
        throw ModelError("covariance_average: requires d = m = 1");
    const int t_node = path.grid.node_of(t);
    const int zero = path.grid.n_hist();
    if (t_node <= zero) throw ModelError("covariance_average: t must be a forward node");
    const double dt = path.grid.dt();

    double v = 0.0;
    std::vector<double> a1(1);
    for (int u_node = zero; u_node < t_node; ++u_node) {
        const TangentColumn col = tangent_z(model, path, path.grid.time_at(u_node));
        double inner = 0.0;
        for (int s_node = u_node; s_node < t_node; ++s_node)
            inner += f.deriv(path.value(s_node)) * col.at(s_node, 0, 0) * dt;
        evaluate_coefficient(model, 1, path.grid.time_at(u_node), path.segment(u_node), a1);
        const double g = inner / t * a1[0];
        v += g * g * dt;
    }
    return v;
}

std::vector<double> jacobi_eigenvalues(const CovMatrix& matrix) {
    const int n = matrix.n;
    std::vector<double> a = matrix.a;
    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) s += a[i * n + j] * a[i * n + j];
        return std::sqrt(s);
    };
    double fro = 0.0;
    for (double v : a) fro += v * v;
    fro = std::sqrt(fro);
    const double tol = 1e-12 * (fro > 0 ? fro : 1.0);

    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::fabs(apq) <= tol / (n * n)) continue;
                const double app = a[p * n + p], aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t_ = (theta >= 0 ? 1.0 : -1.0) /
                                  (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t_ * t_ + 1.0);
                const double s = t_ * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = a[i * n + i];
    std::sort(eig.begin(), eig.end());
    return eig;
}

double min_eigenvalue(const CovMatrix& matrix) {
    return jacobi_eigenvalues(matrix).front();
}

double determinant_from_eigenvalues(const CovMatrix& matrix) {
    double det = 1.0;
    for (double e : jacobi_eigenvalues(matrix)) det *= e;
    return det;
}

} // namespace sfde
