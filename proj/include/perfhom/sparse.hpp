#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace perfhom {

// Symmetric sparse matrix in CSR form. Rows of constrained dofs are kept as
// assembled; the solver masks them instead of eliminating.
struct CsrMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;

    void mul(const std::vector<double>& x, std::vector<double>& y) const;
    double diag(std::size_t i) const;
};

struct SolverParams {
    double rel_tol = 1e-8;
    int max_iter = 50000;
    enum class Precond { none, jacobi } precond = Precond::jacobi;
};

struct SolveInfo {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
    std::string failure;  // non-empty on breakdown (e.g. indefinite operator)
};

// Preconditioned conjugate gradients restricted to free dofs
// (free_mask[i] != 0). Entries of u at masked dofs stay at 0. Returns the
// convergence record; never throws on non-convergence.
SolveInfo pcg_solve(const CsrMatrix& A, const std::vector<double>& rhs,
                    const std::vector<std::uint8_t>& free_mask, const SolverParams& params,
                    std::vector<double>& u);

} // namespace perfhom
