"""Dense Hermitian eigenvalues and Fourier differentiation matrices.

The eigensolver is self-contained: a complex Householder reduction to a real
symmetric tridiagonal matrix followed by implicit-shift QL.  numpy is used for
array arithmetic only, never for its LAPACK eigenroutines.
"""

import math

import numpy as np

__all__ = [
    "hermitian_eigenvalues",
    "bipartite_eigenvalues",
    "tridiagonalize",
    "tridiagonal_eigenvalues",
    "eigen_residuals",
    "fourier_diff_matrix",
    "fourier_modes",
]

_EPS = np.finfo(float).eps
HERMITIAN_RTOL = 1e-12


def _as_hermitian(m, rtol=HERMITIAN_RTOL):
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a))
    if scale > 0 and np.max(np.abs(a - a.conj().T)) > rtol * scale:
        raise ValueError("matrix is not Hermitian to relative tolerance %g" % rtol)
    return a


def tridiagonalize(m):
    """Reduce a Hermitian matrix to real symmetric tridiagonal form.

    Returns ``(d, e)`` with the diagonal ``d`` (length n) and the
    sub-diagonal ``e`` (length n - 1).  The complex sub-diagonal produced by
    the reflections is made real by a diagonal unitary similarity, so only
    its moduli are kept.
    """
    a = _as_hermitian(m).copy()
    n = a.shape[0]
    e = np.zeros(max(n - 1, 0))
    for k in range(n - 2):
        x = a[k + 1:, k]
        xnorm = np.linalg.norm(x)
        e[k] = xnorm
        if xnorm == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v = x.copy()
        v[0] += phase * xnorm
        v /= np.linalg.norm(v)
        sub = a[k + 1:, k + 1:]
        w = sub @ v
        u = 2.0 * w - (2.0 * np.vdot(v, w).real) * v
        sub -= np.outer(v, u.conj())
        sub -= np.outer(u, v.conj())
    if n >= 2:
        e[n - 2] = abs(a[n - 1, n - 2])
    return np.diag(a).real.copy(), e


def tridiagonal_eigenvalues(d, e, max_iter=60):
    """Eigenvalues of a real symmetric tridiagonal matrix by implicit QL.

    ``d`` is the diagonal, ``e`` the off-diagonal (``len(e) == len(d) - 1``).
    Returns the eigenvalues in ascending order.
    """
    d = [float(x) for x in d]
    n = len(d)
    e = [float(x) for x in e] + [0.0]
    if len(e) != n:
        raise ValueError("off-diagonal must have length len(d) - 1")
    hypot = math.hypot
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd or abs(e[m]) < 1e-300:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise RuntimeError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d))


def hermitian_eigenvalues(m):
    """All eigenvalues of a dense Hermitian matrix, ascending.

    Raises ``ValueError`` for non-square or non-Hermitian input.
    """
    d, e = tridiagonalize(m)
    return tridiagonal_eigenvalues(d, e)


def bipartite_eigenvalues(b):
    """Eigenvalues of ``[[0, B], [B^H, 0]]`` for a square block ``B``.

    Uses Golub-Kahan bidiagonalization of ``B``: the bidiagonal entries,
    interleaved, form the off-diagonal of a zero-diagonal tridiagonal matrix
    permutation-similar to the block matrix.  Four times cheaper than
    tridiagonalizing the full block matrix.
    """
    a = np.array(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square block, got shape {a.shape}")
    n = a.shape[0]
    alpha = np.zeros(n)
    beta = np.zeros(max(n - 1, 0))
    for k in range(n):
        # left reflection zeroes column k below the diagonal
        x = a[k:, k]
        xnorm = np.linalg.norm(x)
        alpha[k] = xnorm
        if xnorm > 0.0 and k < n - 1:
            v = _reflector(x, xnorm)
            blk = a[k:, k + 1:]
            blk -= 2.0 * np.outer(v, v.conj() @ blk)
        if k < n - 1:
            # right reflection zeroes row k right of the super-diagonal
            y = a[k, k + 1:]
            ynorm = np.linalg.norm(y)
            beta[k] = ynorm
            if ynorm > 0.0 and k < n - 2:
                v = _reflector(y.conj(), ynorm)
                blk = a[k + 1:, k + 1:]
                blk -= 2.0 * np.outer(blk @ v, v.conj())
    off = np.empty(2 * n - 1)
    off[0::2] = alpha
    off[1::2] = beta
    return tridiagonal_eigenvalues(np.zeros(2 * n), off)


def _reflector(x, xnorm):
    x0 = x[0]
    phase = x0 / abs(x0) if x0 != 0 else 1.0
    v = x.copy()
    v[0] += phase * xnorm
    return v / np.linalg.norm(v)


def eigen_residuals(m, eigenvalues, rng=None, count=5, iterations=3):
    """Residuals ``||M v - lam v||`` from inverse iteration at sampled eigenvalues.

    Test-mode verification of backward stability: for each sampled ``lam`` an
    approximate eigenvector is refined by shifted inverse iteration and the
    absolute residual of the resulting unit vector is returned; callers
    compare it against ``||M||_2``.
    """
    a = _as_hermitian(m)
    n = a.shape[0]
    rng = np.random.default_rng(rng)
    lams = np.asarray(eigenvalues, dtype=float)
    picks = rng.choice(len(lams), size=min(count, len(lams)), replace=False)
    norm = np.linalg.norm(a)
    eye = np.eye(n)
    out = []
    for i in picks:
        lam = lams[i]
        # tiny shift keeps the inverse-iteration system nonsingular
        shift = lam + 1e-13 * max(norm, 1.0)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        for _ in range(iterations):
            v = np.linalg.solve(a - shift * eye, v)
            v /= np.linalg.norm(v)
        out.append(np.linalg.norm(a @ v - lam * v))
    return np.array(out)


def fourier_modes(G, mode_shift=0.0):
    """Mode numbers ``m + s``, ``m = -G/2 .. G/2 - 1``, resolved by a ``G``-point grid.

    The shift is reduced to ``(-1/2, 1/2]``.  The unpaired Nyquist mode keeps
    its aliased wavenumber rather than a zero derivative, which would add a
    spurious kernel vector.
    """
    if G % 2 or G < 4:
        raise ValueError(f"grid size must be even and >= 4, got {G}")
    s = mode_shift - math.floor(mode_shift + 0.5)
    if s == -0.5:
        s = 0.5
    return np.arange(-G // 2, G // 2) + s


def fourier_diff_matrix(G, period, mode_shift=0.0):
    """Spectral differentiation matrix on ``G`` equispaced points.

    Differentiates exactly on the span of ``exp(2 pi i (m + s) x / period)``
    for ``m = -G/2 .. G/2 - 1``, i.e. functions with ``psi(x + period) =
    exp(2 pi i s) psi(x)``.  The result is skew-Hermitian.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    modes = fourier_modes(G, mode_shift)
    lam = 2j * np.pi * modes / period
    x = np.arange(G) * (period / G)
    w = np.exp(2j * np.pi * np.outer(x, modes) / period)
    d = (w * lam) @ w.conj().T / G
    return 0.5 * (d - d.conj().T)
