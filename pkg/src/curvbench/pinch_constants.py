"""Numerical estimation of the pinching constants and the derived theorem constants.

The target quantity for a dimension pair (n, k), a pinching parameter in
(1/n, 1), and a variant (closed-band curvature-deviation or open-band Weyl
flavour) is the infimum of phi(beta) / psi(beta)^(4/n) over forms with
psi(beta) > 0.  The infimum is approached from above by multi-start random
sampling of unit-norm forms followed by a coordinate-wise pattern search
with shrinking step; estimates are therefore upper bounds on the true
constants, reported together with propagated quadrature error bars.  No
certified lower bounds are claimed.

Restarts own independent deterministic random streams derived from
(seed, restart index) and are merged by taking the minimum with ties
broken by restart index, so the result does not depend on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .curvature_maps import phi_pinch, phi_weyl, scal_of
from .forms_core import VectorForm, random_form
from .sphere_index import (
    PsiResult,
    QuadratureSpec,
    RegionKind,
    default_spec,
    psi_integral,
    sphere_volume,
)

VARIANT_PINCH = "pinch"
VARIANT_WEYL = "weyl"

DEFAULT_BUDGET = 50_000
DEFAULT_RESTARTS = 20

_PATTERN_STEP0 = 0.25
_PATTERN_SHRINK = 0.5
_PATTERN_MIN_STEP = 1e-4


class AdmissibilityError(ValueError):
    """A requested (n, k, lambda, variant) combination is outside its bounds."""


def admissible_k_range(n: int, variant: str) -> range:
    """Valid codimensions: 2 <= k <= n/2 (pinch) or 2 <= k <= (n-2)/2 (weyl)."""
    if variant == VARIANT_PINCH:
        return range(2, n // 2 + 1)
    if variant == VARIANT_WEYL:
        return range(2, (n - 2) // 2 + 1)
    raise AdmissibilityError(f"unknown variant {variant!r}")


def validate_job(n: int, k: int, lam: float, variant: str) -> None:
    if n < 4:
        raise AdmissibilityError(f"n must be >= 4, got {n}")
    if k not in admissible_k_range(n, variant):
        raise AdmissibilityError(
            f"k={k} is not admissible for variant={variant} at n={n} "
            f"(valid: {list(admissible_k_range(n, variant)) or 'none'})"
        )
    if not 1.0 / n < lam < 1.0:
        raise AdmissibilityError(f"lambda must lie in (1/{n}, 1), got {lam}")


def _variant_phi(variant: str):
    return phi_pinch if variant == VARIANT_PINCH else phi_weyl


def _variant_region(variant: str) -> RegionKind:
    return RegionKind.LAMBDA_AUTO if variant == VARIANT_PINCH else RegionKind.OMEGA_BAND


def objective_detail(beta: VectorForm, lam: float, variant: str,
                     quad: QuadratureSpec) -> tuple[float, float, PsiResult]:
    """(objective, phi, psi) with the +inf sentinel when psi is not resolvable.

    psi at or below its own quadrature error cannot be distinguished from
    zero, so the normalized ratio is reported as +inf there.
    """
    phi = _variant_phi(variant)(beta, lam)
    psi = psi_integral(beta, _variant_region(variant), quad)
    if psi.value <= psi.error or psi.value <= 0.0:
        return math.inf, phi, psi
    return phi / psi.value ** (4.0 / beta.n), phi, psi


def objective(beta: VectorForm, lam: float, variant: str, quad: QuadratureSpec) -> float:
    """phi(beta) / psi(beta)^(4/n); scale-invariant, +inf where psi vanishes."""
    return objective_detail(beta, lam, variant, quad)[0]


@dataclass(frozen=True, eq=False)
class EstimateRecord:
    """An estimated constant with full provenance.

    epsilon_hat is an upper bound on the true constant: it is the smallest
    objective value seen, attained by the stored witness, and reproducible
    bit-exactly from (seed, budget, quad).  history holds (evaluation
    count, best value) pairs and is non-increasing in the value.
    """

    n: int
    k: int
    lam: float
    variant: str
    epsilon_hat: float
    witness: VectorForm
    budget: int
    evals_used: int
    seed: int
    quad: QuadratureSpec
    history: tuple
    psi_value: float
    psi_error: float

    @property
    def eps_error(self) -> float:
        """Quadrature error propagated through the 4/n power of psi."""
        if self.psi_value <= 0.0:
            return math.inf
        return self.epsilon_hat * (4.0 / self.n) * self.psi_error / self.psi_value


def seed_candidates(n: int, k: int, variant: str) -> list[VectorForm]:
    """Structured unit-norm forms known to have psi > 0 in the variant's band.

    Single-component diagonal forms with m negative entries keep their
    index inside the band for every direction with nonzero first
    coordinate; the two-signature split (2 positive, n-2 negative) is
    additionally seeded for k = 2 in the closed band, where its index
    touches the band edge n - k.
    """
    out = []
    lo, hi = (k, n - k) if variant == VARIANT_PINCH else (k + 1, n - k - 1)
    ms = {m for m in (n // 2, lo, hi) if lo <= m <= hi and lo <= n - m <= hi}
    for m in sorted(ms):
        diag = np.ones(n)
        diag[n - m:] = -1.0
        out.append(VectorForm.single_component(n, k, np.diag(diag / math.sqrt(n))))
    if variant == VARIANT_PINCH and k == 2 and n >= 4:
        diag = -np.ones(n)
        diag[:2] = 1.0
        out.append(VectorForm.single_component(n, k, np.diag(diag / math.sqrt(n))))
    return out


def _normalized(comps: np.ndarray) -> VectorForm:
    nrm = math.sqrt(float(np.sum(comps * comps)))
    return VectorForm(comps / nrm if nrm > 0 else comps)


def _coordinate_directions(n: int, k: int) -> list[tuple[int, int, int]]:
    return [(a, i, j) for a in range(k) for i in range(n) for j in range(i, n)]


def estimate_epsilon(n: int, k: int, lam: float, variant: str,
                     budget: int = DEFAULT_BUDGET, seed: int = 0,
                     quad: QuadratureSpec | None = None,
                     restarts: int = DEFAULT_RESTARTS) -> EstimateRecord:
    """Upper-bound estimate of the pinching constant by global minimization.

    Each restart draws Gaussian unit-norm forms (rejecting the psi = 0
    region, where the objective is the +inf sentinel), then refines the
    best draw by a pattern search over the k n(n+1)/2 free entries,
    re-normalizing after every step and halving the step after each full
    poll without improvement.  Restart 0 first evaluates the structured
    seed candidates, so known low-objective forms are always feasible
    starting points.  The total number of objective evaluations never
    exceeds the budget.
    """
    validate_job(n, k, lam, variant)
    if budget < 100:
        raise AdmissibilityError(f"budget must be >= 100, got {budget}")
    if quad is None:
        quad = default_spec(k, seed=seed)

    state = {"evals": 0, "best": math.inf, "witness": None, "history": []}

    def consider(beta: VectorForm) -> float:
        value = objective(beta, lam, variant, quad)
        state["evals"] += 1
        if value < state["best"]:
            state["best"] = value
            state["witness"] = beta
            state["history"].append((state["evals"], value))
        return value

    directions = _coordinate_directions(n, k)
    share = max(budget // max(restarts, 1), 1)
    for r in range(restarts):
        if state["evals"] >= budget:
            break
        limit = min(budget, state["evals"] + share)
        if r == restarts - 1:
            limit = budget
        rng = np.random.default_rng([seed, r])
        local_best = math.inf
        local_x = None
        if r == 0:
            for cand in seed_candidates(n, k, variant):
                if state["evals"] >= limit:
                    break
                v = consider(cand)
                if v < local_best:
                    local_best, local_x = v, cand
        sample_target = state["evals"] + max((limit - state["evals"]) // 4, 8)
        while state["evals"] < min(sample_target, limit):
            cand = random_form(rng, n, k)
            v = consider(cand)
            if v < local_best:
                local_best, local_x = v, cand
        if local_x is None or not math.isfinite(local_best):
            continue
        x = local_x.components.copy()
        fx = local_best
        step = _PATTERN_STEP0
        while step >= _PATTERN_MIN_STEP and state["evals"] < limit:
            improved = False
            for (a, i, j) in directions:
                if state["evals"] >= limit:
                    break
                for sign in (1.0, -1.0):
                    if state["evals"] >= limit:
                        break
                    cand = x.copy()
                    cand[a, i, j] += sign * step
                    if i != j:
                        cand[a, j, i] += sign * step
                    form = _normalized(cand)
                    v = consider(form)
                    if v < fx:
                        x, fx = form.components.copy(), v
                        improved = True
                        break
            if not improved:
                step *= _PATTERN_SHRINK

    witness = state["witness"]
    if witness is None:
        raise AdmissibilityError(
            "no feasible form found within budget (psi vanished everywhere sampled)"
        )
    value, _, psi = objective_detail(witness, lam, variant, quad)
    return EstimateRecord(
        n=n, k=k, lam=lam, variant=variant,
        epsilon_hat=value, witness=witness,
        budget=budget, evals_used=state["evals"], seed=seed, quad=quad,
        history=tuple(state["history"]),
        psi_value=psi.value, psi_error=psi.error,
    )


def refine_with_candidates(record: EstimateRecord, candidates) -> EstimateRecord:
    """Lower the estimate with explicitly supplied candidate forms.

    Candidates with psi = 0 cannot improve the bound (their objective is
    the +inf sentinel) and leave the record unchanged.  Shape mismatches
    are errors.
    """
    best = record
    evals = record.evals_used
    history = list(record.history)
    for cand in candidates:
        if cand.n != record.n or cand.k != record.k:
            raise ValueError(
                f"candidate shape ({cand.n},{cand.k}) does not match record "
                f"({record.n},{record.k})"
            )
        value, _, psi = objective_detail(cand, record.lam, record.variant, record.quad)
        evals += 1
        if value < best.epsilon_hat:
            history.append((evals, value))
            best = replace(
                best, epsilon_hat=value, witness=cand,
                psi_value=psi.value, psi_error=psi.error,
            )
    return replace(best, evals_used=evals, history=tuple(history))


@dataclass(frozen=True, eq=False)
class TheoremConstants:
    """Derived constants c(n, delta) and c1(n, delta) with their per-k table.

    per_k maps variant -> {k: (epsilon_hat, eps_error)}.  A constant is
    None when its variant's k range is not fully covered (c1 also needs
    n >= 6 for the range to be nonempty).
    """

    n: int
    delta: float
    c_hat: float | None
    c1_hat: float | None
    c_err: float
    c1_err: float
    per_k: dict


def _constant_from_eps(n: int, eps: float, k: int) -> float:
    return 2.0 * (eps / 2.0) ** (n / 4.0) * sphere_volume(n + k - 1)


def derive_constants(n: int, delta: float, records) -> TheoremConstants:
    """min over admissible k of 2 (eps(n,k,delta)/2)^(n/4) Vol(S^(n+k-1)).

    Records must cover every admissible k for at least one variant at this
    (n, delta); later records win over earlier ones with the same key.
    """
    table: dict[str, dict[int, tuple[float, float]]] = {VARIANT_PINCH: {}, VARIANT_WEYL: {}}
    for rec in records:
        if rec.n != n or not math.isclose(rec.lam, delta, rel_tol=0.0, abs_tol=1e-12):
            continue
        table[rec.variant][rec.k] = (rec.epsilon_hat, rec.eps_error)

    def fold(variant: str):
        ks = list(admissible_k_range(n, variant))
        if not ks or any(k not in table[variant] for k in ks):
            return None, math.inf
        best_c, best_err = math.inf, math.inf
        for k in ks:
            eps, err = table[variant][k]
            c = _constant_from_eps(n, eps, k)
            if c < best_c:
                best_c = c
                best_err = c * (n / 4.0) * (err / eps) if eps > 0 else math.inf
        return best_c, best_err

    c_hat, c_err = fold(VARIANT_PINCH)
    c1_hat, c1_err = fold(VARIANT_WEYL)
    if c_hat is None and c1_hat is None:
        raise AdmissibilityError(
            f"records do not cover all admissible k for any variant at n={n}, "
            f"delta={delta}"
        )
    return TheoremConstants(
        n=n, delta=delta, c_hat=c_hat, c1_hat=c1_hat,
        c_err=c_err, c1_err=c1_err,
        per_k={v: dict(sorted(d.items())) for v, d in table.items() if d},
    )


def audit_slacks(record: EstimateRecord, comps_batch: np.ndarray) -> np.ndarray:
    """phi(beta) - epsilon_hat psi(beta)^(4/n) + 3 propagated error, per form.

    Negative entries are violations of the estimated inequality; feeding
    the violators back through refine_with_candidates lowers epsilon_hat
    until the audit is clean on the fixed sample.
    """
    from .sphere_index import psi_integral_batch  # local, keeps import cheap

    n, k = record.n, record.k
    f = comps_batch.shape[0]
    phis = np.empty(f)
    scal_pos = np.empty(f, dtype=bool)
    phi_fn = _variant_phi(record.variant)
    for i in range(f):
        beta = VectorForm(comps_batch[i])
        phis[i] = phi_fn(beta, record.lam)
        scal_pos[i] = scal_of(beta) > 0.0
    psi_vals, psi_errs = psi_integral_batch(
        comps_batch, _variant_region(record.variant), record.quad, n, k,
        scal_positive=scal_pos,
    )
    psi_vals = np.maximum(psi_vals, 0.0)
    bound = record.epsilon_hat * psi_vals ** (4.0 / n)
    hi = record.epsilon_hat * (psi_vals + psi_errs) ** (4.0 / n)
    propagated = (hi - bound) + record.eps_error * psi_vals ** (4.0 / n)
    return phis - bound + 3.0 * propagated
