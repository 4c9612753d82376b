"""Small dense complex linear algebra for non-Hermitian spectra.

The eigensolver is a Householder Hessenberg reduction followed by a complex
single-shift QR iteration with Wilkinson shifts. Eigenvectors come from
back-substitution on the triangular Schur factor. Near-degenerate eigenvalues
are grouped into clusters and each cluster is checked for a missing
eigenvector (a Jordan block) with a rank test at the cluster centre.

Everything here is written for matrices of dimension up to a few dozen and
favours clarity over speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = np.finfo(float).eps
_TINY = np.sqrt(np.finfo(float).tiny)


class DimensionError(ValueError):
    """Raised when an input has the wrong shape."""


class SolverError(RuntimeError):
    """Raised when the QR iteration fails to converge.

    Attributes
    ----------
    matrix : ndarray
        The input matrix.
    partial : ndarray
        Diagonal of the partially reduced Schur factor at the point of failure.
    """

    def __init__(self, message: str, matrix: np.ndarray, partial: np.ndarray):
        super().__init__(message)
        self.matrix = matrix
        self.partial = partial


def as_square(m, dim: int | None = None) -> np.ndarray:
    """Return `m` as a finite complex square matrix, checking its shape."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


# ---------------------------------------------------------------------------
# characteristic polynomial and quartic helpers
# ---------------------------------------------------------------------------

def char_poly(m) -> np.ndarray:
    """Characteristic polynomial det(lambda I - m) by Faddeev-LeVerrier.

    Parameters
    ----------
    m : array_like, shape (4, 4)

    Returns
    -------
    ndarray, shape (5,)
        Coefficients ``(c0, c1, c2, c3, c4)`` in ascending powers, ``c4 = 1``.
    """
    a = as_square(m, 4)
    n = 4
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[n] = 1.0
    mk = np.zeros_like(a)
    eye = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        mk = a @ mk + coeffs[n - k + 1] * eye
        coeffs[n - k] = -np.trace(a @ mk) / k
    return coeffs


def quartic_discriminant(c) -> complex:
    """Discriminant of ``c4 x^4 + c3 x^3 + c2 x^2 + c1 x + c0``.

    Parameters
    ----------
    c : sequence of 5 complex
        Ascending coefficients ``(c0, ..., c4)``.
    """
    if len(c) != 5:
        raise DimensionError("quartic needs exactly five coefficients")
    e, d, cc, b, a = (complex(x) for x in c)
    return (
        256 * a**3 * e**3
        - 192 * a**2 * b * d * e**2
        - 128 * a**2 * cc**2 * e**2
        + 144 * a**2 * cc * d**2 * e
        - 27 * a**2 * d**4
        + 144 * a * b**2 * cc * e**2
        - 6 * a * b**2 * d**2 * e
        - 80 * a * b * cc**2 * d * e
        + 18 * a * b * cc * d**3
        + 16 * a * cc**4 * e
        - 4 * a * cc**3 * d**2
        - 27 * b**4 * e**2
        + 18 * b**3 * cc * d * e
        - 4 * b**3 * d**3
        - 4 * b**2 * cc**3 * e
        + b**2 * cc**2 * d**2
    )


def _cbrt(z: complex) -> complex:
    if z == 0:
        return 0j
    return complex(np.exp(np.log(complex(z)) / 3))


def quartic_roots(c, polish: int = 2) -> np.ndarray:
    """Roots of a monic-normalisable quartic by Ferrari's method.

    Each root is refined with `polish` Newton steps on the original
    polynomial. Used as an independent route to the eigenvalues of 4x4
    matrices.

    Parameters
    ----------
    c : sequence of 5 complex
        Ascending coefficients; ``c[4]`` must be non-zero.
    polish : int
        Number of Newton refinement steps per root.

    Returns
    -------
    ndarray, shape (4,)
    """
    c = np.asarray(c, dtype=complex)
    if c.shape != (5,):
        raise DimensionError("quartic needs exactly five coefficients")
    if c[4] == 0:
        raise ValueError("leading coefficient is zero")
    a3, a2, a1, a0 = c[3] / c[4], c[2] / c[4], c[1] / c[4], c[0] / c[4]
    # depressed quartic y^4 + p y^2 + q y + r with x = y - a3/4
    s = a3 / 4
    p = a2 - 6 * s**2
    q = a1 - 2 * a2 * s + 8 * s**3
    r = a0 - a1 * s + a2 * s**2 - 3 * s**4
    if abs(q) <= 1e-14 * max(1.0, abs(p) ** 1.5, abs(r) ** 0.75):
        # biquadratic
        disc = np.sqrt(complex(p * p - 4 * r))
        ys = []
        for z in ((-p + disc) / 2, (-p - disc) / 2):
            w = np.sqrt(complex(z))
            ys += [w, -w]
    else:
        # resolvent cubic m^3 + p m^2 + (p^2/4 - r) m - q^2/8 = 0, need m != 0
        b2, b1, b0 = p, p * p / 4 - r, -q * q / 8
        sh = b2 / 3
        pp = b1 - b2 * b2 / 3
        qq = 2 * b2**3 / 27 - b2 * b1 / 3 + b0
        dd = np.sqrt(complex(qq * qq / 4 + pp**3 / 27))
        u = _cbrt(-qq / 2 + dd)
        if abs(u) < 1e-300:
            u = _cbrt(-qq / 2 - dd)
        omega = complex(-0.5, np.sqrt(3) / 2)
        cands = []
        for k in range(3):
            uk = u * omega**k
            mk = (uk - pp / (3 * uk) if uk != 0 else 0j) - sh
            cands.append(mk)
        m = max(cands, key=abs)
        sq = np.sqrt(2 * m)
        ys = []
        for sign in (1, -1):
            t = -(2 * p + 2 * m + sign * np.sqrt(2) * q / np.sqrt(m))
            w = np.sqrt(complex(t))
            ys += [(sign * sq + w) / 2, (sign * sq - w) / 2]
    roots = np.array(ys, dtype=complex) - s
    poly = c[::-1]
    dpoly = np.polyder(poly)
    for _ in range(polish):
        f = np.polyval(poly, roots)
        df = np.polyval(dpoly, roots)
        ok = np.abs(df) > 1e-300
        step = np.zeros_like(roots)
        step[ok] = f[ok] / df[ok]
        # only accept steps that reduce the residual
        trial = roots - step
        better = np.abs(np.polyval(poly, trial)) <= np.abs(f)
        roots = np.where(better, trial, roots)
    return roots


# ---------------------------------------------------------------------------
# Hessenberg + QR
# ---------------------------------------------------------------------------

def hessenberg(m) -> tuple[np.ndarray, np.ndarray]:
    """Unitary reduction ``m = Q H Q^H`` with `H` upper Hessenberg."""
    h = as_square(m).copy()
    n = h.shape[0]
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h, q


def _givens(a: complex, b: complex) -> tuple[complex, complex]:
    r = np.hypot(abs(a), abs(b))
    if r == 0.0:
        return 1.0 + 0j, 0j
    return a / r, b / r


def schur(m, max_iter_per_eig: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form ``m = Z T Z^H`` with `T` upper triangular.

    Raises
    ------
    SolverError
        If an eigenvalue fails to deflate within the iteration budget.
    """
    a = as_square(m)
    t, z = hessenberg(a)
    n = t.shape[0]
    norm = max(np.linalg.norm(a), np.finfo(float).tiny)
    hi = n - 1
    iters = 0
    while hi > 0:
        # locate the active unreduced block [lo, hi]
        lo = hi
        while lo > 0:
            sub = abs(t[lo, lo - 1])
            ref = abs(t[lo, lo]) + abs(t[lo - 1, lo - 1])
            if sub <= _EPS * ref or sub <= _EPS * norm * 1e-3:
                t[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            iters = 0
            continue
        iters += 1
        if iters > max_iter_per_eig:
            raise SolverError("QR iteration did not converge", a, np.diag(t).copy())
        # Wilkinson shift from the trailing 2x2 block
        aa, bb = t[hi - 1, hi - 1], t[hi - 1, hi]
        cc, dd = t[hi, hi - 1], t[hi, hi]
        tr = aa + dd
        det = aa * dd - bb * cc
        disc = np.sqrt(tr * tr / 4 - det)
        mu1, mu2 = tr / 2 + disc, tr / 2 - disc
        mu = mu1 if abs(mu1 - dd) < abs(mu2 - dd) else mu2
        if iters % 11 == 0:
            # exceptional shift to break cycles
            mu = dd + 0.75 * abs(t[hi, hi - 1]) * np.exp(1j * iters)
        for i in range(lo, hi + 1):
            t[i, i] -= mu
        rots = []
        for k in range(lo, hi):
            c, s = _givens(t[k, k], t[k + 1, k])
            rows = t[k:k + 2, k:].copy()
            t[k, k:] = np.conj(c) * rows[0] + np.conj(s) * rows[1]
            t[k + 1, k:] = -s * rows[0] + c * rows[1]
            t[k + 1, k] = 0.0
            rots.append((c, s))
        for k, (c, s) in zip(range(lo, hi), rots):
            top = min(k + 2, hi) + 1
            cols = t[:top, k:k + 2].copy()
            t[:top, k] = c * cols[:, 0] + s * cols[:, 1]
            t[:top, k + 1] = -np.conj(s) * cols[:, 0] + np.conj(c) * cols[:, 1]
            zc = z[:, k:k + 2].copy()
            z[:, k] = c * zc[:, 0] + s * zc[:, 1]
            z[:, k + 1] = -np.conj(s) * zc[:, 0] + np.conj(c) * zc[:, 1]
        for i in range(lo, hi + 1):
            t[i, i] += mu
    return np.triu(t), z


def _triangular_eigvecs(t: np.ndarray) -> np.ndarray:
    n = t.shape[0]
    smin = max(_EPS * np.linalg.norm(t), np.finfo(float).tiny)
    y = np.zeros((n, n), dtype=complex)
    for k in range(n):
        y[k, k] = 1.0
        for j in range(k - 1, -1, -1):
            d = t[j, j] - t[k, k]
            if abs(d) < smin:
                d = smin
            y[j, k] = -(t[j, j + 1:k + 1] @ y[j + 1:k + 1, k]) / d
    return y


# ---------------------------------------------------------------------------
# SVD and rank
# ---------------------------------------------------------------------------

def singular_values(m, sweeps: int = 60) -> np.ndarray:
    """Singular values (descending) by one-sided Jacobi rotations."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError("expected a 2-D array")
    if a.shape[0] < a.shape[1]:
        a = a.conj().T
    n = a.shape[1]
    # work at unit scale so column inner products neither underflow nor overflow
    big = float(np.max(np.abs(a))) if a.size else 0.0
    if big == 0.0 or not np.isfinite(big):
        return np.linalg.norm(a, axis=0) if big == 0.0 else np.full(n, np.nan)
    a /= big
    for _ in range(sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai, aj = a[:, i], a[:, j]
                alpha = np.vdot(ai, ai).real
                beta = np.vdot(aj, aj).real
                gamma = np.vdot(ai, aj)
                g = abs(gamma)
                norm_ij = np.sqrt(alpha) * np.sqrt(beta)
                if norm_ij < _TINY or g <= _EPS * norm_ij:
                    continue
                off = max(off, g / norm_ij)
                # rotate so that the two columns become orthogonal
                zeta = (beta - alpha) / (2 * g)
                if zeta == 0:
                    tt = 1.0
                else:
                    az = abs(zeta)
                    root = az * np.sqrt(1 + (1 / az) ** 2) if az > 1 else np.sqrt(1 + az * az)
                    tt = np.sign(zeta) / (az + root)
                cs = 1 / np.sqrt(1 + tt * tt)
                sn = cs * tt
                ph = gamma / g
                new_i = cs * ai - sn * np.conj(ph) * aj
                new_j = sn * ph * ai + cs * aj
                a[:, i], a[:, j] = new_i, new_j
        if off <= _EPS:
            break
    sv = big * np.linalg.norm(a, axis=0)
    return np.sort(sv)[::-1]


def rank_at(m, lam: complex, tol: float = 1e-8) -> int:
    """Numerical rank of ``m - lam I``.

    Singular values below ``tol`` times the largest one count as zero.
    """
    a = as_square(m)
    sv = singular_values(a - lam * np.eye(a.shape[0]))
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


# ---------------------------------------------------------------------------
# eigensystem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues and right eigenvectors with coalescence diagnostics.

    Attributes
    ----------
    values : ndarray, shape (n,)
        Eigenvalues sorted by real part, then imaginary part.
    vectors : ndarray, shape (n, n)
        Unit right eigenvectors as columns, aligned with `values`.
    residuals : ndarray, shape (n,)
        ``||m v - lambda v||`` for each pair.
    clusters : tuple of tuple of int
        Index groups of coalescing eigenvalues (singletons included).
    defective : tuple of bool
        Per cluster, whether it lacks a full set of eigenvectors.
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    clusters: tuple
    defective: tuple

    @property
    def any_defective(self) -> bool:
        return any(self.defective)

    @property
    def defective_mask(self) -> np.ndarray:
        """Per eigenvalue, whether its cluster is defective."""
        mask = np.zeros(len(self.values), dtype=bool)
        for g, bad in zip(self.clusters, self.defective):
            mask[list(g)] = bad
        return mask

    def cluster_of(self, i: int) -> tuple:
        for c in self.clusters:
            if i in c:
                return c
        raise IndexError(i)


def _canonical_order(vals: np.ndarray, scale: float) -> np.ndarray:
    order = list(np.argsort(vals.real, kind="stable"))
    tie = 1e-9 * scale
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and vals[order[j]].real - vals[order[j - 1]].real <= tie:
            j += 1
        group = sorted(order[i:j], key=lambda k: vals[k].imag)
        out.extend(group)
        i = j
    return np.array(out, dtype=int)


def _clusters(vals: np.ndarray, vecs: np.ndarray, tol: float) -> list[list[int]]:
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            close = abs(vals[i] - vals[j]) <= tol
            parallel = abs(np.vdot(vecs[:, i], vecs[:, j])) >= 1 - 1e-6
            if close or parallel:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _null_basis(a: np.ndarray, k: int) -> np.ndarray:
    # right singular vectors of the k smallest singular values
    _, _, vh = np.linalg.svd(a)
    return vh[-k:].conj().T


def eigensystem(
    m,
    cluster_tol: float = 1e-6,
    residual_tol: float = 1e-10,
    rank_tol: float = 1e-8,
) -> EigenSystem:
    """Eigen-decomposition with Jordan-block detection.

    Parameters
    ----------
    m : array_like
        Square complex matrix.
    cluster_tol : float
        Eigenvalues closer than ``cluster_tol * ||m||_F`` are grouped. Pairs
        with numerically parallel eigenvectors are grouped as well.
    residual_tol : float
        Residuals above ``residual_tol * ||m||_F`` on non-defective clusters
        raise `SolverError`.
    rank_tol : float
        Relative singular value threshold for the deficiency test.

    Returns
    -------
    EigenSystem
    """
    a = as_square(m)
    n = a.shape[0]
    fro = np.linalg.norm(a)
    scale = max(fro, np.finfo(float).tiny)
    t, z = schur(a)
    vals = np.diag(t).copy()
    vecs = z @ _triangular_eigvecs(t)
    vecs /= np.linalg.norm(vecs, axis=0)
    order = _canonical_order(vals, scale)
    vals, vecs = vals[order], vecs[:, order]

    groups = _clusters(vals, vecs, cluster_tol * scale)
    defective = []
    for g in groups:
        if len(g) == 1:
            defective.append(False)
            continue
        centre = vals[g].mean()
        spread = max(abs(vals[i] - centre) for i in g)
        shifted = a - centre * np.eye(n)
        sv = singular_values(shifted)
        thresh = max(rank_tol * sv[0], 4 * spread)
        nullity = int(np.sum(sv <= thresh))
        if nullity < len(g):
            defective.append(True)
        else:
            # diagonalisable degeneracy: use an orthonormal eigenbasis
            defective.append(False)
            vecs[:, g] = _null_basis(shifted, len(g))
            vals[g] = np.array([np.vdot(vecs[:, i], a @ vecs[:, i]) for i in g])
    resid = np.linalg.norm(a @ vecs - vecs * vals, axis=0)
    for g, bad in zip(groups, defective):
        if not bad and np.any(resid[g] > residual_tol * scale):
            raise SolverError("eigenvector residual above tolerance", a, vals)
    return EigenSystem(
        values=vals,
        vectors=vecs,
        residuals=resid,
        clusters=tuple(tuple(g) for g in groups),
        defective=tuple(defective),
    )


def eigvals(m) -> np.ndarray:
    """Canonically ordered eigenvalues of `m` from the Schur form."""
    a = as_square(m)
    t, _ = schur(a)
    vals = np.diag(t).copy()
    return vals[_canonical_order(vals, max(np.linalg.norm(a), 1e-300))]
