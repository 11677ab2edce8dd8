"""Dense complex linear algebra used throughout the package.

All routines take and return ``complex128`` arrays.  Hilbert spaces here
carry *uniform* weights, ``<x, y> = w * sum(x * conj(y))``, which is why
adjoints between differently weighted spaces reduce to a scaled conjugate
transpose (see :func:`weighted_adjoint`).
"""

from __future__ import annotations

from dataclasses import dataclass

import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonConvergence, SelfAdjointnessDefect, SingularMatrix

HERMITIAN_TOL = 1e-10
PIVOT_TOL = 1e-13


def as_matrix(M, *, square: bool = False) -> np.ndarray:
    """Coerce ``M`` to a finite 2-d complex array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    return A


def hermitian_defect(M) -> float:
    """``||M - M^*||_F / max(1, ||M||_F)``."""
    A = np.asarray(M, dtype=complex)
    return float(np.linalg.norm(A - A.conj().T) / max(1.0, np.linalg.norm(A)))


@dataclass(frozen=True)
class HermitianCertificate:
    """A square matrix together with a witness of its self-adjointness."""

    matrix: np.ndarray
    defect: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def certify_hermitian(M, tol: float = HERMITIAN_TOL) -> HermitianCertificate:
    """Issue a :class:`HermitianCertificate` or raise :class:`SelfAdjointnessDefect`."""
    A = as_matrix(M, square=True)
    defect = hermitian_defect(A)
    if defect > tol:
        raise SelfAdjointnessDefect(f"Hermitian defect {defect:.3e} exceeds {tol:.1e}")
    return HermitianCertificate(matrix=A, defect=defect)


def _check_eigenpairs(A: np.ndarray, w: np.ndarray, V: np.ndarray) -> None:
    scale = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
    resid = np.linalg.norm(A @ V - V * w, axis=0).max(initial=0.0)
    if resid > 1e-10 * scale:
        raise NonConvergence(f"eigen-residual {resid:.3e} exceeds 1e-10 * ||M|| = {1e-10 * scale:.3e}")


def jacobi_eigh(M, *, tol: float = 1e-15, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver for a complex Hermitian matrix.

    Each plane rotation is applied with vectorised row/column updates, so the
    cost per sweep is ``O(n^3)`` flops but ``O(n^2)`` Python iterations; use it
    for small matrices and as an independent cross-check of the LAPACK path.
    """
    A = as_matrix(M, square=True).copy()
    A = 0.5 * (A + A.conj().T)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    fro = np.linalg.norm(A)
    if n > 1 and fro > 0:
        for _ in range(max_sweeps):
            off = np.linalg.norm(A - np.diag(np.diag(A)))
            if off <= tol * fro:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    mag = abs(apq)
                    if mag <= 1e-300:
                        continue
                    phase = apq / mag
                    tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                    c = 1.0 / np.hypot(1.0, t)
                    s = t * c
                    # columns: a_p <- c a_p - s conj(e) a_q ; a_q <- s e a_p + c a_q
                    colp = A[:, p].copy()
                    colq = A[:, q].copy()
                    A[:, p] = c * colp - s * np.conj(phase) * colq
                    A[:, q] = s * phase * colp + c * colq
                    rowp = A[p, :].copy()
                    rowq = A[q, :].copy()
                    A[p, :] = c * rowp - s * phase * rowq
                    A[q, :] = s * np.conj(phase) * rowp + c * rowq
                    A[p, q] = A[q, p] = 0.0
                    vp = V[:, p].copy()
                    vq = V[:, q].copy()
                    V[:, p] = c * vp - s * np.conj(phase) * vq
                    V[:, q] = s * phase * vp + c * vq
        else:
            raise NonConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(A).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def hermitian_eig(M, *, method: str = "lapack") -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a certified Hermitian matrix.

    Returns ascending real eigenvalues and a unitary matrix whose columns are
    the eigenvectors.  ``M`` may be a :class:`HermitianCertificate` or any
    array (which is then certified first).
    """
    cert = M if isinstance(M, HermitianCertificate) else certify_hermitian(M)
    A = cert.matrix
    if method == "lapack":
        w, V = np.linalg.eigh(A)
    elif method == "jacobi":
        w, V = jacobi_eigh(A)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    _check_eigenpairs(A, w, V)
    return w, V


def solve(M, rhs) -> np.ndarray:
    """Solve ``M X = rhs`` by partially pivoted LU.

    Raises :class:`SingularMatrix` if a pivot of ``U`` falls below
    ``1e-13 * ||M||_F``.
    """
    A = as_matrix(M, square=True)
    b = np.asarray(rhs, dtype=complex)
    vector = b.ndim == 1
    B = b[:, None] if vector else b
    if B.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"rhs has {B.shape[0]} rows, matrix has {A.shape[0]}")
    scale = np.linalg.norm(A)
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrix
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or pivots.min() < PIVOT_TOL * scale:
        raise SingularMatrix(f"pivot {pivots.min():.3e} below {PIVOT_TOL:.0e} * ||M|| = {PIVOT_TOL * scale:.3e}")
    X = scipy.linalg.lu_solve((lu, piv), B, check_finite=False)
    return X[:, 0] if vector else X


def weighted_adjoint(M, domain_weight: float, codomain_weight: float) -> np.ndarray:
    """Adjoint of ``M`` between uniformly weighted spaces.

    ``M`` maps a space with inner product ``domain_weight * x.y^*`` into one
    with ``codomain_weight * x.y^*``.  The returned matrix ``A`` satisfies
    ``<M x, y>_codomain = <x, A y>_domain``, i.e.
    ``A = (codomain_weight / domain_weight) * M^*``.
    """
    if domain_weight <= 0 or codomain_weight <= 0:
        raise ValueError("weights must be positive")
    A = np.asarray(M, dtype=complex)
    return (codomain_weight / domain_weight) * A.conj().T
