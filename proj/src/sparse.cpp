#include "perfhom/sparse.hpp"

#include <cmath>

namespace perfhom {

void CsrMatrix::mul(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += vals[k] * x[cols[k]];
        y[i] = s;
    }
}

double CsrMatrix::diag(std::size_t i) const {
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        if (cols[k] == i) return vals[k];
    return 0.0;
}

SolveInfo pcg_solve(const CsrMatrix& A, const std::vector<double>& rhs,
                    const std::vector<std::uint8_t>& free_mask, const SolverParams& params,
                    std::vector<double>& u) {
    const std::size_t n = A.n;
    u.assign(n, 0.0);
    SolveInfo info;

    std::vector<double> inv_diag(n, 1.0);
    if (params.precond == SolverParams::Precond::jacobi) {
        for (std::size_t i = 0; i < n; ++i) {
            double d = A.diag(i);
            if (free_mask[i] && d > 0.0) inv_diag[i] = 1.0 / d;
        }
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    double b_norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = free_mask[i] ? rhs[i] : 0.0;
        b_norm2 += r[i] * r[i];
    }
    if (b_norm2 == 0.0) {
        info.converged = true;
        return info;
    }
    const double tol2 = params.rel_tol * params.rel_tol * b_norm2;

    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = free_mask[i] ? inv_diag[i] * r[i] : 0.0;
        rz += r[i] * z[i];
        p[i] = z[i];
    }

    double r_norm2 = b_norm2;
    for (int it = 0; it < params.max_iter; ++it) {
        A.mul(p, q);
        double pq = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (free_mask[i]) pq += p[i] * q[i];
        if (!(pq > 0.0)) {
            info.iterations = it;
            info.rel_residual = std::sqrt(r_norm2 / b_norm2);
            info.failure = "indefinite or singular operator (p^T A p <= 0)";
            return info;
        }
        double alpha = rz / pq;
        r_norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!free_mask[i]) continue;
            u[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            r_norm2 += r[i] * r[i];
        }
        info.iterations = it + 1;
        if (r_norm2 <= tol2) {
            info.converged = true;
            info.rel_residual = std::sqrt(r_norm2 / b_norm2);
            return info;
        }
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!free_mask[i]) continue;
            z[i] = inv_diag[i] * r[i];
            rz_new += r[i] * z[i];
        }
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = free_mask[i] ? z[i] + beta * p[i] : 0.0;
    }
    info.rel_residual = std::sqrt(r_norm2 / b_norm2);
    return info;
}

} // namespace perfhom
