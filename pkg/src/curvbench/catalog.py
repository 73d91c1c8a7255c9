"""Closed-form homogeneous immersions and theorem-style inequality reports.

Every member carries its second fundamental form at a point in an adapted
orthonormal frame; homogeneity makes the form constant over the manifold,
so curvature integrals reduce to a pointwise value times the volume and no
mesh integration enters the theorem checks.  Betti numbers are stored over
the two-element field.

Frame conventions
-----------------
* umbilic sphere: xi_1 is the inward unit normal of the sphere inside its
  affine (n+1)-plane; the remaining k-1 normal directions are flat.
* sphere product: xi_1, xi_2 are the inward radial normals of the two
  factors; the tangent basis lists the first factor's directions first.
* minimal Clifford product: xi_1 is the unit normal inside the ambient
  unit sphere (the trace-free direction), xi_2 the inward unit normal of
  that sphere in Euclidean space (the umbilic direction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curvature_maps import l_of, r_of, w_of
from .forms_core import ScalarForm, VectorForm, kn_scalar
from .pinch_constants import AdmissibilityError, TheoremConstants
from .sphere_index import sphere_volume

FAMILY_SPHERE = "umbilic-sphere"
FAMILY_PRODUCT = "sphere-product"
FAMILY_CLIFFORD = "clifford-minimal"


@dataclass(frozen=True, eq=False)
class CatalogImmersion:
    """A homogeneous immersion with analytic second fundamental form."""

    name: str
    family: str
    n: int
    k: int
    parameters: dict
    betti: tuple
    volume: float
    alpha: VectorForm
    s_sphere: float | None = None

    def euler_characteristic(self) -> int:
        return int(sum((-1) ** i * b for i, b in enumerate(self.betti)))

    def betti_band_sum(self, lo: int, hi: int) -> int:
        return int(sum(self.betti[i] for i in range(max(lo, 0), min(hi, self.n) + 1)))

    def squared_norm(self) -> float:
        """S, the squared norm of the second fundamental form."""
        return self.alpha.norm() ** 2

    def mean_curvature(self) -> float:
        tr = self.alpha.trace_vector()
        return float(np.linalg.norm(tr)) / self.n


def _sphere_betti(n: int) -> tuple:
    b = [0] * (n + 1)
    b[0] = 1
    b[n] += 1
    return tuple(b)


def _product_betti(p: int, q: int) -> tuple:
    bp, bq = _sphere_betti(p), _sphere_betti(q)
    n = p + q
    out = [0] * (n + 1)
    for i, bi in enumerate(bp):
        for j, bj in enumerate(bq):
            out[i + j] += bi * bj
    return tuple(out)


def make_umbilic_sphere(n: int, k: int, r: float) -> CatalogImmersion:
    """Round n-sphere of radius r in codimension k.

    alpha(x, y) = (1/r) <x, y> xi_1, so S = n/r^2, H = 1/r and
    scal = n(n-1)/r^2; the curvature deviation and the Weyl part vanish.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    if k < 2:
        raise ValueError("codimension k must be >= 2")
    alpha = VectorForm.single_component(n, k, np.eye(n) / r)
    return CatalogImmersion(
        name=f"S^{n}({r:g})", family=FAMILY_SPHERE, n=n, k=k,
        parameters={"r": float(r)},
        betti=_sphere_betti(n),
        volume=sphere_volume(n) * r ** n,
        alpha=alpha,
    )


def make_sphere_product(p: int, q: int, r: float, s: float) -> CatalogImmersion:
    """S^p(r) x S^q(s) in codimension 2.

    In the adapted frame the two components of alpha are (1/r) g restricted
    to the first factor and (1/s) g restricted to the second, giving
    S = p/r^2 + q/s^2 and n^2 H^2 = p^2/r^2 + q^2/s^2.
    """
    if p < 2 or q < 2:
        raise ValueError("factor dimensions must both be >= 2")
    if r <= 0 or s <= 0:
        raise ValueError("radii must be positive")
    n = p + q
    comps = np.zeros((2, n, n))
    comps[0, :p, :p] = np.eye(p) / r
    comps[1, p:, p:] = np.eye(q) / s
    return CatalogImmersion(
        name=f"S^{p}({r:g})xS^{q}({s:g})", family=FAMILY_PRODUCT, n=n, k=2,
        parameters={"p": p, "q": q, "r": float(r), "s": float(s)},
        betti=_product_betti(p, q),
        volume=sphere_volume(p) * r ** p * sphere_volume(q) * s ** q,
        alpha=VectorForm(comps),
    )


def make_clifford_minimal(p: int, q: int) -> CatalogImmersion:
    """Generalized Clifford product S^p(sqrt(p/n)) x S^q(sqrt(q/n)), minimal
    in the unit (n+1)-sphere, as a codimension-2 immersion of Euclidean space.

    alpha splits into the sphere-valued part diag((s/r) on the first factor,
    -(r/s) on the second) along xi_1 and the umbilic part g along xi_2.  The
    sphere part is trace free by construction; its squared norm is
    recomputed from the frame and stored as s_sphere (classically n).
    """
    if p < 2 or q < 2:
        raise ValueError("factor dimensions must both be >= 2")
    n = p + q
    r = math.sqrt(p / n)
    s = math.sqrt(q / n)
    comps = np.zeros((2, n, n))
    comps[0, :p, :p] = np.eye(p) * (s / r)
    comps[0, p:, p:] = -np.eye(q) * (r / s)
    comps[1] = np.eye(n)
    alpha = VectorForm(comps)
    s_sphere = float(np.sum(comps[0] * comps[0]))
    return CatalogImmersion(
        name=f"Clifford S^{p}xS^{q}", family=FAMILY_CLIFFORD, n=n, k=2,
        parameters={"p": p, "q": q, "r": r, "s": s},
        betti=_product_betti(p, q),
        volume=sphere_volume(p) * r ** p * sphere_volume(q) * s ** q,
        alpha=alpha,
        s_sphere=s_sphere,
    )


def clifford_delta_threshold(m: CatalogImmersion) -> float:
    """Smallest delta with S_sphere <= n (delta n - 1), from the stored frame."""
    if m.s_sphere is None:
        raise ValueError("not a minimal-in-sphere member")
    return (m.s_sphere / m.n + 1.0) / m.n


@dataclass(frozen=True, eq=False)
class InequalityReport:
    """One evaluated integral inequality on a catalog member.

    lhs_terms holds the curvature-norm and pinch integrals; rhs the
    constant and the banded Betti sum.  satisfied means
    lhs_total >= rhs_total - tolerance, where the tolerance covers three
    propagated quadrature errors of the constant.  A violated report
    carries the member's alpha as a candidate for refine_with_candidates
    instead of declaring the inequality false.
    """

    member: str
    theorem: str
    n: int
    k: int
    delta: float
    curvature_norm_integral: float
    pinch_integral: float
    constant: float
    betti_sum: int
    satisfied: bool
    margin: float
    tolerance: float
    hypothesis_ok: bool = True
    note: str = ""
    candidate: VectorForm | None = None

    @property
    def lhs_total(self) -> float:
        return self.curvature_norm_integral + self.pinch_integral

    @property
    def rhs_total(self) -> float:
        return self.constant * self.betti_sum


def _deviation_norm(m: CatalogImmersion) -> float:
    """Pointwise Frobenius norm of R - (scal/(n(n-1))) R1."""
    n = m.n
    rt = r_of(m.alpha)
    scal = float(rt.contract_13().trace())
    r1 = 0.5 * kn_scalar(ScalarForm.identity(n), ScalarForm.identity(n))
    return (rt - (scal / (n * (n - 1))) * r1).norm()


def _pinch_pointwise(m: CatalogImmersion, delta: float) -> float:
    """(S - delta n^2 H^2)_+ at the homogeneous point."""
    tr = m.alpha.trace_vector()
    return max(m.squared_norm() - delta * float(tr @ tr), 0.0)


def _report(m, theorem, delta, constant, const_err, band, term1, term2,
            hypothesis_ok=True, note="") -> InequalityReport:
    betti_sum = m.betti_band_sum(*band)
    lhs = term1 + term2
    rhs = constant * betti_sum
    tolerance = 3.0 * const_err * betti_sum + 1e-9 * (1.0 + abs(lhs) + abs(rhs))
    satisfied = bool(lhs >= rhs - tolerance)
    return InequalityReport(
        member=m.name, theorem=theorem, n=m.n, k=m.k, delta=delta,
        curvature_norm_integral=term1, pinch_integral=term2,
        constant=constant, betti_sum=betti_sum,
        satisfied=satisfied, margin=lhs - rhs, tolerance=tolerance,
        hypothesis_ok=hypothesis_ok, note=note,
        candidate=None if satisfied else m.alpha,
    )


def evaluate_theorem1(m: CatalogImmersion, delta: float,
                      constants: TheoremConstants) -> InequalityReport:
    """Curvature-deviation plus pinch integrals against the closed-band Betti sum."""
    n, k = m.n, m.k
    if not (2 <= k <= n // 2):
        raise AdmissibilityError(f"(n,k)=({n},{k}) outside the closed-band range")
    if not 1.0 / n < delta < 1.0:
        raise AdmissibilityError(f"delta must lie in (1/{n}, 1), got {delta}")
    if constants.c_hat is None:
        raise AdmissibilityError("constants do not provide c_hat for this n")
    term1 = _deviation_norm(m) ** (n / 2.0) * m.volume
    term2 = _pinch_pointwise(m, delta) ** (n / 2.0) * m.volume
    return _report(m, "theorem1", delta, constants.c_hat, constants.c_err,
                   (k, n - k), term1, term2)


def evaluate_theorem5(m: CatalogImmersion, delta: float,
                      constants: TheoremConstants) -> InequalityReport:
    """Weyl-norm plus pinch integrals against the open-band Betti sum."""
    n, k = m.n, m.k
    if n < 6 or not (2 <= k <= (n - 2) // 2):
        raise AdmissibilityError(f"(n,k)=({n},{k}) outside the open-band range")
    if not 1.0 / n < delta < 1.0:
        raise AdmissibilityError(f"delta must lie in (1/{n}, 1), got {delta}")
    if constants.c1_hat is None:
        raise AdmissibilityError("constants do not provide c1_hat for this n")
    term1 = w_of(m.alpha).norm() ** (n / 2.0) * m.volume
    term2 = _pinch_pointwise(m, delta) ** (n / 2.0) * m.volume
    return _report(m, "theorem5", delta, constants.c1_hat, constants.c1_err,
                   (k + 1, n - k - 1), term1, term2)


def evaluate_corollary_minimal(m: CatalogImmersion, delta: float,
                               constants: TheoremConstants) -> InequalityReport:
    """Single curvature-norm integral for minimal-in-sphere members.

    Applicable when the sphere part of the second fundamental form is
    pinched, S_sphere <= n (delta n - 1); a violated hypothesis is reported
    in the flags, not raised.
    """
    if m.family != FAMILY_CLIFFORD or m.s_sphere is None:
        raise AdmissibilityError("corollary check needs a minimal-in-sphere member")
    n, k = m.n, m.k
    if not 1.0 / n < delta < 1.0:
        raise AdmissibilityError(f"delta must lie in (1/{n}, 1), got {delta}")
    if constants.c_hat is None:
        raise AdmissibilityError("constants do not provide c_hat for this n")
    hyp_ok = m.s_sphere <= n * (delta * n - 1.0) + 1e-12
    note = "" if hyp_ok else (
        f"hypothesis violated: S_sphere={m.s_sphere:.6g} > n(delta n - 1)="
        f"{n * (delta * n - 1.0):.6g}; threshold delta*={clifford_delta_threshold(m):.6g}"
    )
    term1 = _deviation_norm(m) ** (n / 2.0) * m.volume
    report = _report(m, "corollary-minimal", delta, constants.c_hat,
                     constants.c_err, (k, n - k), term1, 0.0,
                     hypothesis_ok=hyp_ok, note=note)
    return report


def decomposition_defect(m: CatalogImmersion) -> float:
    """Max-abs defect of R = W + L ^ g on the member's form (identity check)."""
    alpha = m.alpha
    lhs = r_of(alpha)
    rhs = w_of(alpha) + kn_scalar(l_of(alpha), ScalarForm.identity(m.n))
    return (lhs - rhs).max_abs()
