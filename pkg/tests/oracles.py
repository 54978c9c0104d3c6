"""Reference computations that share no code path with the library."""
import numpy as np


def jacobi_eigh(A, tol=1e-15, max_sweeps=100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and matching column eigenvectors.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * np.sqrt(np.sum(A**2)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t**2 + 1.0)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    w = np.diag(A).copy()
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def singular_values(X):
    """Singular values of X as square roots of the eigenvalues of X^T X."""
    X = np.asarray(X, dtype=float)
    w, _ = jacobi_eigh(X.T @ X)
    return np.sqrt(np.clip(w, 0.0, None))[: min(X.shape)]


def rank_r_approximation(X, r):
    """Best rank-r approximation X V_r V_r^T with V_r from the Jacobi oracle."""
    X = np.asarray(X, dtype=float)
    _, V = jacobi_eigh(X.T @ X)
    Vr = V[:, :r]
    return X @ Vr @ Vr.T


def antidiagonal_means(block):
    """Diagonal averaging by explicit enumeration of index sets."""
    L, K = block.shape
    m = L + K - 1
    out = np.empty(m)
    for j in range(1, m + 1):
        cells = [block[a - 1, b - 1] for a in range(1, L + 1) for b in range(1, K + 1) if a + b - 1 == j]
        out[j - 1] = sum(cells) / len(cells)
    return out


def wake_point(x, y, t, mean_level, amplitudes, f0, wavelength, width):
    """Direct evaluation of the surrogate wake formula at one point."""
    p = mean_level
    for k, a in enumerate(amplitudes, 1):
        g = np.exp(-(y**2) / width**2)
        p += a * g * (
            np.cos(2 * np.pi * k * (x / wavelength - f0 * t))
            + 0.3 * np.cos(2 * np.pi * k * x / wavelength) * np.cos(2 * np.pi * k * f0 * t)
        )
    return p


def rank_r_approximations(X):
    """All best rank-r approximations of X, r = 1..min(X.shape), from one Jacobi solve."""
    X = np.asarray(X, dtype=float)
    _, V = jacobi_eigh(X.T @ X)
    XV = X @ V
    out, acc = [], np.zeros_like(X)
    for r in range(1, min(X.shape) + 1):
        acc = acc + np.outer(XV[:, r - 1], V[:, r - 1])
        out.append(acc)
    return out
