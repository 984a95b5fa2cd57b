#include "lapack.hpp"
#include "svph/errors.hpp"
#include "svph/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace svph {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

VectorXcd start_vector(Index n, std::uint64_t salt) {
    std::mt19937_64 rng(0x5eed0000u + salt);
    std::normal_distribution<double> g;
    VectorXcd v(n);
    for (Index i = 0; i < n; ++i) v[i] = complex{g(rng), g(rng)};
    return v.normalized();
}

// Schur form T = U^H H U with eigenvalues ordered by decreasing modulus.
void sorted_schur(MatrixXcd& T, MatrixXcd& U) {
    const auto m = static_cast<lapack_int>(T.rows());
    std::vector<complex> w(static_cast<std::size_t>(m));
    U.resize(m, m);
    lapack_int sdim = 0;
    lapack_int info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, m, T.data(), m, &sdim, w.data(), U.data(), m);
    if (info != 0) throw Error(ErrorCode::EigenSolverDiverged, "zgees failed with info " + std::to_string(info));
    for (lapack_int i = 0; i < m; ++i) {
        lapack_int best = i;
        for (lapack_int j = i + 1; j < m; ++j)
            if (std::abs(T(j, j)) > std::abs(T(best, best))) best = j;
        if (best != i) {
            info = LAPACKE_ztrexc(LAPACK_COL_MAJOR, 'V', m, T.data(), m, U.data(), m, best + 1, i + 1);
            if (info != 0) throw Error(ErrorCode::EigenSolverDiverged, "ztrexc failed with info " + std::to_string(info));
        }
    }
}

// Eigenvectors of the upper-triangular T (columns, not normalized).
MatrixXcd triangular_eigenvectors(const MatrixXcd& T) {
    const auto m = static_cast<lapack_int>(T.rows());
    MatrixXcd Tc = T, S(m, m);
    std::vector<lapack_logical> select(static_cast<std::size_t>(m), 1);
    lapack_int used = 0;
    complex dummy{};
    lapack_int info = LAPACKE_ztrevc(LAPACK_COL_MAJOR, 'R', 'A', select.data(), m, Tc.data(), m, &dummy, 1,
                                     S.data(), m, m, &used);
    if (info != 0) throw Error(ErrorCode::EigenSolverDiverged, "ztrevc failed with info " + std::to_string(info));
    return S;
}

} // namespace

KrylovResult krylov_schur(const LinearOperator& A, Index n, int count, double tol, int basis_dim, int max_restarts) {
    require(count >= 1 && count <= n, "krylov_schur needs 1 <= count <= n");
    KrylovResult out;
    const Index m = std::min<Index>(n, std::max<Index>(basis_dim, 2 * count + 2));

    if (m == n) {
        // the whole space fits in the basis: form the matrix and solve densely
        MatrixXcd D(n, n);
        VectorXcd e = VectorXcd::Zero(n), y(n);
        for (Index j = 0; j < n; ++j) {
            e[j] = 1.0;
            A(e, y);
            D.col(j) = y;
            e[j] = 0.0;
        }
        out.matvecs = static_cast<int>(n);
        MatrixXcd U;
        sorted_schur(D, U);
        MatrixXcd S = triangular_eigenvectors(D);
        out.vectors.resize(n, count);
        for (int i = 0; i < count; ++i) {
            out.eigenvalues.push_back(D(i, i));
            out.vectors.col(i) = (U * S.col(i)).normalized();
        }
        return out;
    }

    MatrixXcd V(n, m + 1);
    MatrixXcd H = MatrixXcd::Zero(m + 1, m);
    V.col(0) = start_vector(n, 0);
    Index k = 0;
    VectorXcd w(n);
    std::uint64_t salt = 1;

    for (int restart = 0; restart <= max_restarts; ++restart) {
        for (Index j = k; j < m; ++j) {
            A(V.col(j), w);
            ++out.matvecs;
            const double wnorm = w.norm();
            // classical Gram-Schmidt with one reorthogonalization pass
            VectorXcd h = V.leftCols(j + 1).adjoint() * w;
            w.noalias() -= V.leftCols(j + 1) * h;
            VectorXcd h2 = V.leftCols(j + 1).adjoint() * w;
            w.noalias() -= V.leftCols(j + 1) * h2;
            h += h2;
            H.col(j).head(j + 1) = h;
            double beta = w.norm();
            if (beta <= 1e-13 * std::max(wnorm, 1e-300)) {
                // invariant subspace: continue with a fresh orthogonal direction
                VectorXcd r = start_vector(n, salt++);
                for (int pass = 0; pass < 2; ++pass) r -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * r);
                H(j + 1, j) = 0.0;
                V.col(j + 1) = r.normalized();
            } else {
                H(j + 1, j) = beta;
                V.col(j + 1) = w / beta;
            }
        }

        MatrixXcd T = H.topRows(m), U;
        sorted_schur(T, U);
        Eigen::RowVectorXcd b = H.row(m) * U;
        MatrixXcd S = triangular_eigenvectors(T);

        bool converged = true;
        for (int i = 0; i < count; ++i) {
            VectorXcd y = S.col(i).normalized();
            if (std::abs((b * y).value()) > tol) {
                converged = false;
                break;
            }
        }
        out.restarts = restart;
        if (converged || restart == max_restarts) {
            if (!converged) {
                std::ostringstream msg;
                msg << "Krylov-Schur did not converge in " << max_restarts << " restarts (basis " << m << ")";
                throw Error(ErrorCode::EigenSolverDiverged, msg.str());
            }
            MatrixXcd basis = V.leftCols(m) * U;
            out.vectors.resize(n, count);
            for (int i = 0; i < count; ++i) {
                out.eigenvalues.push_back(T(i, i));
                out.vectors.col(i) = (basis * S.col(i)).normalized();
            }
            return out;
        }

        const Index p = std::min<Index>(m - 1, count + (m - count) / 2);
        MatrixXcd kept = V.leftCols(m) * U.leftCols(p);
        V.col(p) = V.col(m);
        V.leftCols(p) = kept;
        H.setZero();
        H.topLeftCorner(p, p) = T.topLeftCorner(p, p).triangularView<Eigen::Upper>();
        H.row(p).head(p) = b.head(p);
        k = p;
    }
    throw Error(ErrorCode::EigenSolverDiverged, "Krylov-Schur exhausted its restarts");
}

} // namespace svph
