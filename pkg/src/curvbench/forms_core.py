"""Symmetric bilinear forms on inner-product spaces and their Kulkarni-Nomizu algebra.

Forms are stored as dense numpy arrays in fixed orthonormal bases: a
scalar-valued form is a symmetric n x n matrix, a W-valued form is a stack
of k symmetric n x n component matrices, and a Lorentzian-valued form adds
an explicit target metric so that flatness can be tested against an
indefinite inner product.  The module provides the four-term
Kulkarni-Nomizu products (scalar, vector, Lorentzian), flatness residuals,
nullity spaces, and the Lorentzian lift used by the conformally flat
decomposition.

Norms of forms and 4-tensors are plain Frobenius norms over all entries,
with no combinatorial weights.

All values are immutable after construction (arrays are marked read-only)
and every operation is a pure function, so objects can be shared freely
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DEFAULT_NULLITY_TOL = 1e-9


def _readonly(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_exact_symmetry(m: np.ndarray, what: str) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be square, got shape {m.shape}")
    if not np.array_equal(m, m.T):
        raise ValueError(f"{what} must be stored exactly symmetric")


@dataclass(frozen=True)
class Dims:
    """Dimension pair (n, k) for a form V x V -> W.

    The two admissibility bounds used by the pinching inequalities are
    exposed as predicates; each downstream operation states which bound it
    enforces.
    """

    n: int
    k: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"n must be an integer >= 4, got {self.n}")
        if self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k}")

    def admissible_pinch(self) -> bool:
        """2 <= k <= n/2 (closed index band)."""
        return 2 * self.k <= self.n

    def admissible_weyl(self) -> bool:
        """2 <= k <= floor((n-2)/2) (open index band)."""
        return 2 * self.k <= self.n - 2


@dataclass(frozen=True, eq=False)
class ScalarForm:
    """Symmetric bilinear form V x V -> R as an exactly symmetric matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = _readonly(self.entries)
        _check_exact_symmetry(m, "ScalarForm.entries")
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.entries * self.entries)))

    def trace(self) -> float:
        return float(np.trace(self.entries))

    @classmethod
    def identity(cls, n: int) -> "ScalarForm":
        """The inner product of V in the fixed orthonormal basis."""
        return cls(np.eye(n))

    @classmethod
    def zero(cls, n: int) -> "ScalarForm":
        return cls(np.zeros((n, n)))

    @classmethod
    def symmetrized(cls, m) -> "ScalarForm":
        m = np.asarray(m, dtype=float)
        return cls((m + m.T) / 2.0)

    def __add__(self, other: "ScalarForm") -> "ScalarForm":
        return ScalarForm(self.entries + other.entries)

    def __sub__(self, other: "ScalarForm") -> "ScalarForm":
        return ScalarForm(self.entries - other.entries)

    def __mul__(self, c: float) -> "ScalarForm":
        return ScalarForm(self.entries * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorForm:
    """Symmetric bilinear form V x V -> W.

    Component a is the scalar form <beta(.,.), xi_a> in a fixed orthonormal
    basis (xi_1, ..., xi_k) of W, stored as a (k, n, n) stack of exactly
    symmetric matrices.
    """

    components: np.ndarray

    def __post_init__(self):
        c = _readonly(self.components)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError(f"components must have shape (k, n, n), got {c.shape}")
        for a in range(c.shape[0]):
            _check_exact_symmetry(c[a], f"VectorForm component {a}")
        object.__setattr__(self, "components", c)

    @property
    def n(self) -> int:
        return self.components.shape[1]

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def norm(self) -> float:
        """Frobenius norm: sqrt of the sum of squared entries over all components."""
        return float(np.sqrt(np.sum(self.components * self.components)))

    def trace_vector(self) -> np.ndarray:
        """trace(beta) as a W-vector of component traces."""
        return np.einsum("aii->a", self.components)

    def value(self, x, y) -> np.ndarray:
        """beta(x, y) as a W-vector."""
        return np.einsum("aij,i,j->a", self.components, x, y)

    def scaled(self, c: float) -> "VectorForm":
        return VectorForm(self.components * float(c))

    @classmethod
    def zero(cls, n: int, k: int) -> "VectorForm":
        return cls(np.zeros((k, n, n)))

    @classmethod
    def umbilic(cls, n: int, k: int, xi=None) -> "VectorForm":
        """beta(x, y) = <x, y> xi; defaults to the first basis vector of W."""
        if xi is None:
            xi = np.zeros(k)
            xi[0] = 1.0
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (k,):
            raise ValueError(f"xi must have length k={k}")
        return cls(xi[:, None, None] * np.eye(n)[None, :, :])

    @classmethod
    def single_component(cls, n: int, k: int, matrix, component: int = 0) -> "VectorForm":
        """Form with one nonzero component matrix; the rest are zero."""
        comps = np.zeros((k, n, n))
        comps[component] = np.asarray(matrix, dtype=float)
        return cls(comps)


def random_form(rng: np.random.Generator, n: int, k: int, normalize: bool = True) -> VectorForm:
    """Gaussian random symmetric form, optionally scaled to unit Frobenius norm."""
    raw = rng.standard_normal((k, n, n))
    sym = (raw + raw.transpose(0, 2, 1)) / 2.0
    if normalize:
        nrm = np.sqrt(np.sum(sym * sym))
        if nrm > 0:
            sym = sym / nrm
    return VectorForm(sym)


@dataclass(frozen=True, eq=False)
class QuadTensor:
    """(0,4)-tensor with the algebraic curvature symmetries.

    Antisymmetry in the first and in the last index pair and symmetry under
    swapping the two pairs hold for every tensor built by this module; they
    are testable entrywise to 1e-12 via symmetry_defect.
    """

    entries: np.ndarray

    def __post_init__(self):
        e = _readonly(self.entries)
        if e.ndim != 4 or len(set(e.shape)) != 1:
            raise ValueError(f"entries must have shape (n, n, n, n), got {e.shape}")
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.entries * self.entries)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries))) if self.entries.size else 0.0

    def symmetry_defect(self) -> float:
        """Largest violation of the pair antisymmetries and the pair swap."""
        t = self.entries
        d1 = np.max(np.abs(t + t.transpose(1, 0, 2, 3)))
        d2 = np.max(np.abs(t + t.transpose(0, 1, 3, 2)))
        d3 = np.max(np.abs(t - t.transpose(2, 3, 0, 1)))
        return float(max(d1, d2, d3))

    def contract_13(self) -> np.ndarray:
        """Trace over the first and third slots, T(e_i, x, e_i, y)."""
        return np.einsum("ixiy->xy", self.entries)

    def __add__(self, other: "QuadTensor") -> "QuadTensor":
        return QuadTensor(self.entries + other.entries)

    def __sub__(self, other: "QuadTensor") -> "QuadTensor":
        return QuadTensor(self.entries - other.entries)

    def __mul__(self, c: float) -> "QuadTensor":
        return QuadTensor(self.entries * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class LorentzSpace:
    """W + R^2 with an explicit symmetric metric of signature (dim-1, 1).

    The full metric matrix is stored rather than assuming a block shape, so
    the signature is checked at construction, not assumed.
    """

    dim: int
    metric: np.ndarray

    def __post_init__(self):
        m = _readonly(self.metric)
        _check_exact_symmetry(m, "LorentzSpace.metric")
        if m.shape[0] != self.dim:
            raise ValueError("metric shape does not match dim")
        w = np.linalg.eigvalsh(m)
        scale = np.max(np.abs(w)) if w.size else 0.0
        if scale == 0.0 or np.any(np.abs(w) <= 1e-12 * scale):
            raise ValueError("Lorentz metric must be non-degenerate")
        neg = int(np.sum(w < 0))
        if neg != 1:
            raise ValueError(f"Lorentz metric needs exactly one negative eigenvalue, found {neg}")
        object.__setattr__(self, "metric", m)

    @classmethod
    def standard(cls, k: int) -> "LorentzSpace":
        """W + R^2 with <(xi,s),(eta,t)> = <xi,eta> + s1 t2 + s2 t1."""
        m = np.zeros((k + 2, k + 2))
        m[:k, :k] = np.eye(k)
        m[k, k + 1] = 1.0
        m[k + 1, k] = 1.0
        return cls(dim=k + 2, metric=m)


@dataclass(frozen=True, eq=False)
class LorentzForm:
    """Symmetric bilinear form V x V -> W + R^2 with a Lorentzian target."""

    components: np.ndarray
    space: LorentzSpace

    def __post_init__(self):
        c = _readonly(self.components)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError(f"components must have shape (dim, n, n), got {c.shape}")
        if c.shape[0] != self.space.dim:
            raise ValueError("component count does not match the Lorentz space dimension")
        for a in range(c.shape[0]):
            _check_exact_symmetry(c[a], f"LorentzForm component {a}")
        object.__setattr__(self, "components", c)

    @property
    def n(self) -> int:
        return self.components.shape[1]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.components * self.components)))


@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of orthonormal vectors of V together with the membership threshold."""

    basis: np.ndarray  # (dim, n), rows orthonormal
    tol: float

    def __post_init__(self):
        b = _readonly(self.basis)
        if b.ndim != 2:
            raise ValueError("basis must be a (dim, n) array of row vectors")
        if b.shape[0] > 0:
            gram = b @ b.T
            if np.max(np.abs(gram - np.eye(b.shape[0]))) > 1e-12:
                raise ValueError("basis vectors must be pairwise orthonormal to 1e-12")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return True
        proj = self.basis.T @ (self.basis @ x) if self.dim else np.zeros_like(x)
        return bool(np.linalg.norm(x - proj) <= self.tol * nx)

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 0:
            return np.zeros_like(x)
        return self.basis.T @ (self.basis @ x)

    @classmethod
    def span(cls, vectors, tol: float = DEFAULT_NULLITY_TOL) -> "Subspace":
        """Orthonormalized span of the given row vectors (rank-revealing SVD)."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        if v.size == 0 or np.max(np.abs(v)) == 0.0:
            return cls(basis=np.zeros((0, v.shape[1])), tol=tol)
        u, s, vh = np.linalg.svd(v, full_matrices=False)
        rank = int(np.sum(s > 1e-12 * s[0]))
        return cls(basis=vh[:rank], tol=tol)

    @classmethod
    def full(cls, n: int, tol: float = DEFAULT_NULLITY_TOL) -> "Subspace":
        return cls(basis=np.eye(n), tol=tol)

    @classmethod
    def trivial(cls, n: int, tol: float = DEFAULT_NULLITY_TOL) -> "Subspace":
        return cls(basis=np.zeros((0, n)), tol=tol)


def subspace_distance(a: Subspace, b: Subspace) -> float:
    """Largest principal-angle sine between two subspaces of equal dimension."""
    if a.dim != b.dim:
        return 1.0
    if a.dim == 0:
        return 0.0
    s = np.linalg.svd(a.basis @ b.basis.T, compute_uv=False)
    s = np.clip(s, -1.0, 1.0)
    return float(np.sqrt(max(0.0, 1.0 - np.min(s) ** 2)))


# ---------------------------------------------------------------------------
# Kulkarni-Nomizu products
# ---------------------------------------------------------------------------

def kn_scalar(phi: ScalarForm, psi: ScalarForm) -> QuadTensor:
    """Four-term Kulkarni-Nomizu product of two scalar forms.

    (phi ^ psi)(x1,x2,x3,x4) = phi(x1,x3) psi(x2,x4) + phi(x2,x4) psi(x1,x3)
                             - phi(x1,x4) psi(x2,x3) - phi(x2,x3) psi(x1,x4)
    """
    if phi.n != psi.n:
        raise ValueError(f"dimension mismatch: {phi.n} vs {psi.n}")
    p, q = phi.entries, psi.entries
    t = (
        np.einsum("ik,jl->ijkl", p, q)
        + np.einsum("jl,ik->ijkl", p, q)
        - np.einsum("il,jk->ijkl", p, q)
        - np.einsum("jk,il->ijkl", p, q)
    )
    return QuadTensor(t)


def _kn_components(b: np.ndarray, c: np.ndarray, metric: np.ndarray | None) -> np.ndarray:
    """Vector-valued KN product from component stacks, with optional target metric."""
    if metric is None:
        t = (
            np.einsum("aik,ajl->ijkl", b, c)
            - np.einsum("ail,ajk->ijkl", b, c)
            + np.einsum("ajl,aik->ijkl", b, c)
            - np.einsum("ajk,ail->ijkl", b, c)
        )
    else:
        t = (
            np.einsum("ab,aik,bjl->ijkl", metric, b, c)
            - np.einsum("ab,ail,bjk->ijkl", metric, b, c)
            + np.einsum("ab,ajl,bik->ijkl", metric, b, c)
            - np.einsum("ab,ajk,bil->ijkl", metric, b, c)
        )
    return t


def kn_vector(beta: VectorForm, gamma: VectorForm) -> QuadTensor:
    """Kulkarni-Nomizu product of two W-valued forms using the W inner product."""
    if beta.n != gamma.n or beta.k != gamma.k:
        raise ValueError(
            f"dimension mismatch: ({beta.n},{beta.k}) vs ({gamma.n},{gamma.k})"
        )
    return QuadTensor(_kn_components(beta.components, gamma.components, None))


class FlatnessCheck(NamedTuple):
    flag: bool
    residual: float


def is_flat(beta, tol: float = 1e-9) -> FlatnessCheck:
    """Whether the KN square of beta vanishes, and its max-abs residual.

    The square is taken with the form's own target inner product: Euclidean
    for a VectorForm, the stored Lorentzian metric for a LorentzForm.
    """
    if isinstance(beta, LorentzForm):
        t = _kn_components(beta.components, beta.components, beta.space.metric)
    elif isinstance(beta, VectorForm):
        t = _kn_components(beta.components, beta.components, None)
    else:
        raise TypeError(f"expected VectorForm or LorentzForm, got {type(beta)!r}")
    residual = float(np.max(np.abs(t))) if t.size else 0.0
    return FlatnessCheck(residual <= tol, residual)


def nullity_space(beta, tol: float = DEFAULT_NULLITY_TOL) -> Subspace:
    """Nullity space of beta: directions x with beta(x, y) = 0 for all y.

    Computed from the SVD of the stacked (k n) x n component matrix; the
    returned span collects right-singular directions whose singular value
    is below tol times the largest singular value (or tol itself if beta
    vanishes), making the threshold invariant under beta -> c beta.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    comps = beta.components
    n = comps.shape[1]
    stacked = comps.reshape(-1, n)
    _, s, vh = np.linalg.svd(stacked, full_matrices=False)
    smax = s[0] if s.size and s[0] > 0.0 else 1.0
    keep = s < tol * smax
    basis = vh[keep] if np.any(keep) else np.zeros((0, n))
    return Subspace(basis=basis, tol=tol)


def lift_lorentz(beta: VectorForm, l: ScalarForm) -> LorentzForm:
    """Lift beta to W + R^2 as (beta(x,y), <x,y>, -l(x,y)).

    With the standard Lorentzian pairing s1 t2 + s2 t1 on the R^2 block,
    the lift of beta is flat exactly when the trace-free curvature part of
    beta vanishes, provided l is the Schouten-type form of beta (the caller
    is trusted on this; it is not checked).
    """
    if beta.n != l.n:
        raise ValueError(f"dimension mismatch: beta has n={beta.n}, l has n={l.n}")
    n, k = beta.n, beta.k
    comps = np.concatenate(
        [beta.components, np.eye(n)[None, :, :], -l.entries[None, :, :]], axis=0
    )
    return LorentzForm(components=comps, space=LorentzSpace.standard(k))


def unit_sphere_grid(k: int, count: int) -> np.ndarray:
    """Deterministic spread of directions on the unit sphere of W.

    Uniform angles for k = 2, a Fibonacci spiral for k = 3, and a seeded
    Gaussian cloud for higher k.  Used by the decomposition searches.
    """
    if k == 2:
        th = np.arange(count) * (2.0 * math.pi / count)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if k == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, 1.0))
        golden = math.pi * (3.0 - math.sqrt(5.0))
        th = golden * i
        return np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)
    rng = np.random.default_rng(0xC0FFEE)
    pts = rng.standard_normal((count, k))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)
