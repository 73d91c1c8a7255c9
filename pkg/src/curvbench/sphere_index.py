"""Shape operators, Morse-index classification on the unit sphere of W, and psi.

For a W-valued form beta, each unit direction u in W yields a selfadjoint
operator on V.  Directions are classified by the count of negative
eigenvalues into a closed band (k <= index <= n-k), an open band
(k < index < n-k), or the full sphere; the automatic region resolves to
the closed band when the scalar curvature of beta is positive and to the
full sphere otherwise.  psi integrates |det| of the shape operator over
the selected region.

Numerics: eigenvalues inside a dead-band of width tau * |beta| around zero
count as non-negative (the regions are defined by strict spectral counts,
and the boundary directions have measure zero, so quadrature is
insensitive to the dead-band).  For k = 2 a composite midpoint rule on the
circle is used; for k >= 3 a seeded uniform Monte Carlo on the sphere with
standard-error reporting, since the index-region indicator rules out
smooth high-order rules.  Node sets are pre-generated from the seed and
reduced in node order, so results are deterministic regardless of any
outer parallelism.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .curvature_maps import scal_of
from .forms_core import ScalarForm, VectorForm

INDEX_DEADBAND = 1e-9

CIRCLE_COMPOSITE = "circle-composite"
SPHERE_MONTECARLO = "sphere-montecarlo"


class RegionKind(enum.Enum):
    PHI_BAND = "phi"
    OMEGA_BAND = "omega"
    FULL_SPHERE = "full"
    LAMBDA_AUTO = "auto"


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature recipe for integrals over the unit sphere of W."""

    method: str
    nodes: int
    seed: int = 0

    def __post_init__(self):
        if self.method not in (CIRCLE_COMPOSITE, SPHERE_MONTECARLO):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.nodes < 16:
            raise ValueError(f"nodes must be >= 16, got {self.nodes}")


def default_spec(k: int, nodes: int | None = None, seed: int = 0) -> QuadratureSpec:
    """Composite midpoint on the circle for k = 2, Monte Carlo otherwise."""
    if k == 2:
        return QuadratureSpec(CIRCLE_COMPOSITE, nodes or 512, seed)
    return QuadratureSpec(SPHERE_MONTECARLO, nodes or 4096, seed)


@dataclass(frozen=True, eq=False)
class IndexProfile:
    u: np.ndarray
    index: int
    detvalue: float
    kind_membership: frozenset


def sphere_volume(m: int) -> float:
    """Volume of the unit m-sphere, 2 pi^((m+1)/2) / Gamma((m+1)/2)."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


def shape_operator(beta: VectorForm, u) -> ScalarForm:
    """The selfadjoint operator <beta(x, y), u> = sum_a u_a B_a."""
    u = np.asarray(u, dtype=float)
    if u.shape != (beta.k,):
        raise ValueError(f"direction must have length k={beta.k}, got shape {u.shape}")
    return ScalarForm(np.einsum("a,aij->ij", u, beta.components))


def index_of(beta: VectorForm, u, tau: float = INDEX_DEADBAND) -> int:
    """Count of eigenvalues of the shape operator below -tau * |beta|."""
    w = np.linalg.eigvalsh(shape_operator(beta, u).entries)
    return int(np.sum(w < -tau * beta.norm()))


def region_bounds(region: RegionKind, n: int, k: int):
    """Inclusive index bounds (lo, hi) defining membership, or None for all."""
    if region is RegionKind.PHI_BAND:
        return k, n - k
    if region is RegionKind.OMEGA_BAND:
        return k + 1, n - k - 1
    return None


def resolve_region(region: RegionKind, beta: VectorForm) -> RegionKind:
    """LAMBDA_AUTO becomes the closed band when scal(beta) > 0, else the sphere."""
    if region is not RegionKind.LAMBDA_AUTO:
        return region
    return RegionKind.PHI_BAND if scal_of(beta) > 0.0 else RegionKind.FULL_SPHERE


def classify(beta: VectorForm, u, tau: float = INDEX_DEADBAND) -> IndexProfile:
    """Index, determinant, and region memberships of one unit direction."""
    n, k = beta.n, beta.k
    op = shape_operator(beta, u)
    w = np.linalg.eigvalsh(op.entries)
    idx = int(np.sum(w < -tau * beta.norm()))
    det = float(np.prod(w))
    kinds = {RegionKind.FULL_SPHERE}
    if k <= idx <= n - k:
        kinds.add(RegionKind.PHI_BAND)
    if k < idx < n - k:
        kinds.add(RegionKind.OMEGA_BAND)
    if resolve_region(RegionKind.LAMBDA_AUTO, beta) in kinds:
        kinds.add(RegionKind.LAMBDA_AUTO)
    return IndexProfile(
        u=np.asarray(u, dtype=float), index=idx, detvalue=det,
        kind_membership=frozenset(kinds),
    )


class PsiResult(NamedTuple):
    """Quadrature value with its estimated error (carried downstream)."""

    value: float
    error: float

    def __float__(self) -> float:
        return self.value


def _circle_nodes(nodes: int):
    th = (np.arange(nodes) + 0.5) * (2.0 * math.pi / nodes)
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    return u, np.full(nodes, 2.0 * math.pi / nodes)


def _montecarlo_nodes(k: int, nodes: int, seed: int):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((nodes, k))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts, np.full(nodes, sphere_volume(k - 1) / nodes)


def _banded_integrand(comps: np.ndarray, u: np.ndarray, lo_hi, tau_abs: float):
    """|det| of the shape operators at the nodes, masked to the index band.

    comps may be a single (k, n, n) stack or a batch (F, k, n, n); the
    returned array has shape (nodes,) or (F, nodes) accordingly.
    """
    ops = np.einsum("ma,...aij->...mij", u, comps)
    w = np.linalg.eigvalsh(ops)
    det = np.abs(np.prod(w, axis=-1))
    if lo_hi is None:
        return det
    lo, hi = lo_hi
    if comps.ndim == 4:
        tau_col = tau_abs[:, None, None]
    else:
        tau_col = tau_abs
    idx = np.sum(w < -tau_col, axis=-1)
    return det * ((idx >= lo) & (idx <= hi))


def psi_integral(beta: VectorForm, region: RegionKind, spec: QuadratureSpec,
                 tau: float = INDEX_DEADBAND) -> PsiResult:
    """Integral of |det| of the shape operator over the index region.

    Deterministic for a fixed spec.  The circle rule reports the change
    against a half-resolution pass as its error estimate; Monte Carlo
    reports the standard error of the mean.
    """
    n, k = beta.n, beta.k
    if spec.method == CIRCLE_COMPOSITE and k != 2:
        raise ValueError("circle-composite quadrature requires k = 2")
    resolved = resolve_region(region, beta)
    bounds = region_bounds(resolved, n, k)
    tau_abs = tau * beta.norm()
    if spec.method == CIRCLE_COMPOSITE:
        u, wts = _circle_nodes(spec.nodes)
        f = _banded_integrand(beta.components, u, bounds, tau_abs)
        value = float(f @ wts)
        u2, wts2 = _circle_nodes(max(spec.nodes // 2, 16))
        f2 = _banded_integrand(beta.components, u2, bounds, tau_abs)
        coarse = float(f2 @ wts2)
        error = abs(value - coarse) + 1e-15 * abs(value)
        return PsiResult(value, error)
    u, wts = _montecarlo_nodes(k, spec.nodes, spec.seed)
    f = _banded_integrand(beta.components, u, bounds, tau_abs)
    total = sphere_volume(k - 1)
    value = float(np.mean(f)) * total
    stderr = float(np.std(f, ddof=1)) / math.sqrt(spec.nodes) * total
    return PsiResult(value, stderr)


def psi_integral_batch(comps: np.ndarray, region: RegionKind, spec: QuadratureSpec,
                       n: int, k: int, scal_positive: np.ndarray | None = None,
                       tau: float = INDEX_DEADBAND):
    """Vectorized psi over a batch of component stacks (F, k, n, n).

    For LAMBDA_AUTO the caller supplies the scal(beta) > 0 mask per form.
    Returns (values, errors) arrays of length F.
    """
    if spec.method == CIRCLE_COMPOSITE and k != 2:
        raise ValueError("circle-composite quadrature requires k = 2")
    norms = np.sqrt(np.sum(comps * comps, axis=(1, 2, 3)))
    tau_abs = tau * norms
    if region is RegionKind.LAMBDA_AUTO:
        if scal_positive is None:
            raise ValueError("LAMBDA_AUTO batch needs the scal positivity mask")
    if spec.method == CIRCLE_COMPOSITE:
        node_sets = [_circle_nodes(spec.nodes), _circle_nodes(max(spec.nodes // 2, 16))]
    else:
        node_sets = [_montecarlo_nodes(k, spec.nodes, spec.seed)]

    def one_region(bounds):
        vals = []
        for u, wts in node_sets:
            f = _banded_integrand(comps, u, bounds, tau_abs)
            vals.append(f @ wts if spec.method == CIRCLE_COMPOSITE else f)
        if spec.method == CIRCLE_COMPOSITE:
            fine, coarse = vals
            return fine, np.abs(fine - coarse) + 1e-15 * np.abs(fine)
        f = vals[0]
        total = sphere_volume(k - 1)
        value = f.mean(axis=1) * total
        stderr = f.std(axis=1, ddof=1) / math.sqrt(spec.nodes) * total
        return value, stderr

    if region is not RegionKind.LAMBDA_AUTO:
        return one_region(region_bounds(region, n, k))
    v_phi, e_phi = one_region(region_bounds(RegionKind.PHI_BAND, n, k))
    v_full, e_full = one_region(None)
    mask = np.asarray(scal_positive, dtype=bool)
    return np.where(mask, v_phi, v_full), np.where(mask, e_phi, e_full)


def psi_homogeneity_check(beta: VectorForm, c: float, region: RegionKind,
                          spec: QuadratureSpec) -> float:
    """Relative defect of psi(c beta) = c^n psi(beta) at matched nodes, c > 0."""
    if c <= 0:
        raise ValueError("c must be positive")
    base = psi_integral(beta, region, spec).value
    scaled = psi_integral(beta.scaled(c), region, spec).value
    return abs(scaled - c ** beta.n * base) / max(base, 1e-30)
