"""Curvature-type maps on symmetric forms and the pinching functionals.

The maps R, Ric, scal, L and the trace-free part W act on W-valued forms
through the Kulkarni-Nomizu square.  On top of them sit the two pinching
functionals (curvature-deviation and Weyl flavour, both homogeneous of
degree four) and two structure-recovery searches: the umbilic
decomposition for forms whose KN square is a multiple of the metric
square, and the conformally flat decomposition for forms with vanishing
trace-free curvature part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forms_core import (
    QuadTensor,
    ScalarForm,
    Subspace,
    VectorForm,
    kn_scalar,
    kn_vector,
    unit_sphere_grid,
)

_RESIDUAL_PROBES = 50
_GRID_PER_K = 2000


def r_of(beta: VectorForm) -> QuadTensor:
    """Curvature tensor of beta: half its Kulkarni-Nomizu square."""
    return 0.5 * kn_vector(beta, beta)


def ric_of(beta: VectorForm) -> ScalarForm:
    """Ricci form: trace of the curvature tensor over its first and third slots."""
    m = r_of(beta).contract_13()
    return ScalarForm((m + m.T) / 2.0)


def scal_of(beta: VectorForm) -> float:
    """Scalar curvature: trace of the Ricci form."""
    return ric_of(beta).trace()


def l_of(beta: VectorForm) -> ScalarForm:
    """Schouten-type form (Ric - scal/(2(n-1)) g) / (n-2)."""
    n = beta.n
    if n < 3:
        raise ValueError(f"l_of requires n >= 3, got n={n}")
    ric = ric_of(beta)
    scal = ric.trace()
    g = ScalarForm.identity(n)
    return ScalarForm((ric.entries - (scal / (2.0 * (n - 1))) * g.entries) / (n - 2))


def w_of(beta: VectorForm) -> QuadTensor:
    """Trace-free (Weyl) part of the curvature tensor of beta.

    Every contraction over the first and third slots of the result
    vanishes; tests check this to 1e-11.
    """
    n = beta.n
    if n < 4:
        raise ValueError(f"w_of requires n >= 4, got n={n}")
    return r_of(beta) - kn_scalar(l_of(beta), ScalarForm.identity(n))


def pinch_deficit(beta: VectorForm, lam: float) -> float:
    """Positive part of |beta|^2 - lam |trace beta|^2 (trace taken in W)."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must lie in (0, 1), got {lam}")
    tr = beta.trace_vector()
    return max(beta.norm() ** 2 - lam * float(tr @ tr), 0.0)


def phi_pinch(beta: VectorForm, lam: float) -> float:
    """Degree-4 pinching functional built from the curvature deviation.

    One quarter of the squared Frobenius distance between the KN square of
    beta and its constant-curvature projection, plus the squared pinch
    deficit.  Vanishes exactly on umbilic-type forms.
    """
    n = beta.n
    if not 1.0 / n < lam < 1.0:
        raise ValueError(f"lam must lie in (1/n, 1) = ({1.0 / n}, 1), got {lam}")
    bb = kn_vector(beta, beta)
    gg = kn_scalar(ScalarForm.identity(n), ScalarForm.identity(n))
    scal = 0.5 * float(np.einsum("ixiy->xy", bb.entries).trace())
    dev = bb.entries - (scal / (n * (n - 1))) * gg.entries
    return 0.25 * float(np.sum(dev * dev)) + pinch_deficit(beta, lam) ** 2


def phi_weyl(beta: VectorForm, lam: float) -> float:
    """Degree-4 pinching functional built from the trace-free curvature part."""
    n = beta.n
    if not 1.0 / n < lam < 1.0:
        raise ValueError(f"lam must lie in (1/n, 1) = ({1.0 / n}, 1), got {lam}")
    return w_of(beta).norm() ** 2 + pinch_deficit(beta, lam) ** 2


# ---------------------------------------------------------------------------
# Structure recovery
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UmbilicDecomposition:
    """Recovered (xi, mu, V1) with beta(x, y) = sqrt(mu) <x, y> xi on V1 x V."""

    xi: np.ndarray
    mu: float
    v1: Subspace
    residual: float
    ok: bool
    message: str = ""


@dataclass(frozen=True, eq=False)
class ConformalDecomposition:
    """Recovered (xi, V1) with beta(x, y) = <x, y> xi on V1 x V."""

    xi: np.ndarray
    v1: Subspace
    residual: float
    ok: bool
    message: str = ""


def _restriction_residual(beta: VectorForm, xi: np.ndarray, scale: float,
                          basis: np.ndarray) -> float:
    """Max over basis x and random probes y of |beta(x,y) - scale <x,y> xi|."""
    if basis.shape[0] == 0:
        return math.inf
    rng = np.random.default_rng(7)
    ys = rng.standard_normal((_RESIDUAL_PROBES, beta.n))
    ys /= np.linalg.norm(ys, axis=1, keepdims=True)
    vals = np.einsum("aij,di,mj->dma", beta.components, basis, ys)
    target = scale * (basis @ ys.T)[:, :, None] * xi[None, None, :]
    return float(np.max(np.linalg.norm(vals - target, axis=2)))


def _eigen_cluster(values: np.ndarray, min_size: int, gap: float) -> float | None:
    """Mean of a maximal run of sorted eigenvalues with consecutive gaps <= gap."""
    w = np.sort(values)
    start = 0
    best = None
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > gap:
            if i - start >= min_size:
                cand = float(np.mean(w[start:i]))
                if best is None or i - start > best[0]:
                    best = (i - start, cand)
            start = i
    return best[1] if best else None


def _cluster_candidate(beta: VectorForm, min_size: int) -> np.ndarray | None:
    """Per-component eigenvalue clusters of the required multiplicity.

    Valid because the common subspace V1 is an eigenspace of every
    component matrix, with eigenvalue equal to that component of xi.
    """
    scale = max(beta.norm(), 1.0)
    coords = []
    for a in range(beta.k):
        w = np.linalg.eigvalsh(beta.components[a])
        c = _eigen_cluster(w, min_size, gap=1e-6 * scale)
        if c is None:
            return None
        coords.append(c)
    return np.asarray(coords)


def _eigenspace_near(matrix: np.ndarray, target: float, window: float,
                     min_dim: int) -> np.ndarray:
    """Orthonormal rows spanning eigenvectors with eigenvalue near target.

    Takes every eigenvalue within the window, or the min_dim nearest ones
    if the window captures fewer than that.
    """
    w, v = np.linalg.eigh(matrix)
    close = np.abs(w - target) <= window
    if np.sum(close) < min_dim:
        order = np.argsort(np.abs(w - target))
        close = np.zeros_like(close)
        close[order[:min_dim]] = True
    return v[:, close].T


def decompose_umbilic(beta: VectorForm, tol: float = 1e-9) -> UmbilicDecomposition:
    """Recover the umbilic structure of a form whose KN square is mu g ^ g.

    mu is read off as scal(beta)/(n(n-1)); mu <= tol is reported as failure
    rather than guessed around.  The unit direction xi is found by a grid
    search over the unit sphere of W (2000 k samples) refined by
    alternating eigenspace extraction and re-estimation of xi from the
    diagonal values of beta on the current subspace.  Eigenspace
    membership uses the window tol * max(1, sqrt(mu)).  Failure is
    reported through the ok flag, never raised.
    """
    n, k = beta.n, beta.k
    nb = beta.norm()
    mu = scal_of(beta) / (n * (n - 1))
    min_dim = n - k + 1
    if mu <= tol:
        return UmbilicDecomposition(
            xi=np.zeros(k), mu=mu, v1=Subspace.trivial(n, tol),
            residual=math.inf, ok=False,
            message=f"mu = {mu:.3e} <= tol, hypothesis not met",
        )
    smu = math.sqrt(mu)
    window = tol * max(1.0, smu)

    candidates: list[np.ndarray] = []
    cluster = _cluster_candidate(beta, min_dim)
    if cluster is not None:
        nc = np.linalg.norm(cluster)
        if nc > 0:
            candidates.append(cluster / nc)
    grid = unit_sphere_grid(k, _GRID_PER_K * k)
    ops = np.einsum("ma,aij->mij", grid, beta.components)
    w = np.linalg.eigvalsh(ops)
    relaxed = max(window, 1e-2 * max(1.0, smu))
    counts = np.sum(np.abs(w - smu) <= relaxed, axis=1)
    spread = np.min(np.abs(w - smu), axis=1)
    order = np.lexsort((spread, -counts))
    candidates.extend(grid[order[:3]])

    best: UmbilicDecomposition | None = None
    for u0 in candidates:
        u = np.array(u0)
        for _ in range(12):
            op = np.einsum("a,aij->ij", u, beta.components)
            basis = _eigenspace_near(op, smu, max(window, 1e-8 * max(1.0, smu)), min_dim)
            xi_new = np.einsum("aij,di,dj->a", beta.components, basis, basis)
            nrm = np.linalg.norm(xi_new)
            if nrm == 0.0:
                break
            xi_new /= nrm
            if np.linalg.norm(xi_new - u) < 1e-15:
                u = xi_new
                break
            u = xi_new
        op = np.einsum("a,aij->ij", u, beta.components)
        wv, vv = np.linalg.eigh(op)
        sel = np.abs(wv - smu) <= window
        basis = vv[:, sel].T
        dim = basis.shape[0]
        residual = _restriction_residual(beta, u, smu, basis)
        cand = UmbilicDecomposition(
            xi=u, mu=mu,
            v1=Subspace(basis=basis, tol=tol) if dim else Subspace.trivial(n, tol),
            residual=residual,
            ok=dim >= min_dim and residual <= 10.0 * tol * nb,
            message="" if dim >= min_dim else f"eigenspace dimension {dim} < {min_dim}",
        )
        if best is None or (cand.ok, cand.v1.dim, -cand.residual) > (
            best.ok, best.v1.dim, -best.residual
        ):
            best = cand
    assert best is not None
    # Canonical orientation: prefer a positive first nonzero coordinate of
    # xi, but only when flipping does not worsen the fit (for mu > 0 the
    # defining equation singles out the sign, so this is a tie-break).
    nz = np.flatnonzero(np.abs(best.xi) > 1e-12)
    if nz.size and best.xi[nz[0]] < 0:
        flipped = -best.xi
        res_flip = _restriction_residual(beta, flipped, smu, best.v1.basis)
        if res_flip <= best.residual:
            best = UmbilicDecomposition(
                xi=flipped, mu=best.mu, v1=best.v1, residual=res_flip,
                ok=best.ok, message=best.message,
            )
    return best


def _near_null_basis(comps: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Right-singular rows for the `dim` smallest singular values, plus all values."""
    n = comps.shape[1]
    stacked = comps.reshape(-1, n)
    _, s, vh = np.linalg.svd(stacked, full_matrices=False)
    return vh[n - dim:], s


def decompose_conformally_flat(beta: VectorForm, tol: float = 1e-9) -> ConformalDecomposition:
    """Recover (xi, V1) with beta(x, y) = <x, y> xi for x in V1, dim V1 >= n - k.

    Intended for forms whose trace-free curvature part vanishes and k < n-2.
    Candidate vectors xi are taken from the diagonal values beta(x, x) on a
    coarse set of directions, from per-component eigenvalue clusters of
    multiplicity >= n - k, and from zero; each candidate is refined by
    alternating a near-null-space extraction of beta - xi g with
    re-estimation of xi from diagonal values on the recovered subspace.
    Reports failure (ok=False) when no candidate reaches dimension n - k.
    """
    n, k = beta.n, beta.k
    nb = beta.norm()
    min_dim = n - k
    g = np.eye(n)
    rscale = nb if nb > 0 else 1.0

    candidates: list[np.ndarray] = [np.zeros(k)]
    cluster = _cluster_candidate(beta, min_dim)
    if cluster is not None:
        candidates.append(cluster)
    probes = [np.eye(n)[i] for i in range(n)]
    rng = np.random.default_rng(11)
    extra = rng.standard_normal((32 * k, n))
    probes.extend(extra / np.linalg.norm(extra, axis=1, keepdims=True))
    for x in probes:
        candidates.append(np.einsum("aij,i,j->a", beta.components, x, x))

    best: ConformalDecomposition | None = None
    for xi0 in candidates:
        xi = np.array(xi0)
        for _ in range(8):
            defect = beta.components - xi[:, None, None] * g[None, :, :]
            basis, _ = _near_null_basis(defect, min_dim)
            xi_new = np.einsum("aij,di,dj->a", beta.components, basis, basis) / min_dim
            if np.linalg.norm(xi_new - xi) <= 1e-15 * max(1.0, np.linalg.norm(xi)):
                xi = xi_new
                break
            xi = xi_new
        defect = beta.components - xi[:, None, None] * g[None, :, :]
        stacked = defect.reshape(-1, n)
        _, s, vh = np.linalg.svd(stacked, full_matrices=False)
        smax = s[0] if s.size and s[0] > 0 else 1.0
        keep = s < max(tol * smax, 1e-13 * rscale)
        dim = int(np.sum(keep))
        basis = vh[keep] if dim else np.zeros((0, n))
        residual = _restriction_residual(beta, xi, 1.0, basis) if dim else math.inf
        cand = ConformalDecomposition(
            xi=xi,
            v1=Subspace(basis=basis, tol=tol) if dim else Subspace.trivial(n, tol),
            residual=residual,
            ok=dim >= min_dim and residual <= 10.0 * tol * rscale,
            message="" if dim >= min_dim else f"null space dimension {dim} < {min_dim}",
        )
        if best is None or (cand.ok, cand.v1.dim, -cand.residual) > (
            best.ok, best.v1.dim, -best.residual
        ):
            best = cand
    assert best is not None
    if not best.ok and not best.message:
        best = ConformalDecomposition(
            xi=best.xi, v1=best.v1, residual=best.residual, ok=False,
            message="no candidate reached the required dimension",
        )
    return best
