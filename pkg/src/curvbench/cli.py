"""Command-line front end: estimation jobs, constants merging, catalog and
Morse checks, and quick property fixtures.

Exit codes: 0 success, 2 admissibility error (bad flags or out-of-range
job), 3 I/O error.  Each job writes JSON envelopes plus CSV summary rows
to the output directory (flag --out, env CURVBENCH_OUT, default
./results) and renders matplotlib figures next to them unless --no-figures
is given.  Identical configurations, seed included, produce byte-identical
payloads.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import catalog as cat
from . import figures, morse_harness, serialize
from .curvature_maps import l_of, phi_pinch, r_of, scal_of, w_of
from .forms_core import ScalarForm, VectorForm, kn_scalar, random_form
from .pinch_constants import (
    AdmissibilityError,
    derive_constants,
    estimate_epsilon,
    validate_job,
)
from .sphere_index import (
    CIRCLE_COMPOSITE,
    SPHERE_MONTECARLO,
    QuadratureSpec,
    RegionKind,
    default_spec,
    psi_integral,
)

EXIT_OK = 0
EXIT_ADMISSIBILITY = 2
EXIT_IO = 3

OUT_ENV = "CURVBENCH_OUT"

CSV_COLUMNS = {
    "estimates.csv": [
        "n", "k", "lambda", "variant", "epsilon_hat", "eps_error",
        "psi_value", "psi_error", "budget", "evals_used", "seed",
        "quad_method", "quad_nodes", "quad_seed",
    ],
    "constants.csv": [
        "n", "delta", "c_hat", "c_err", "c1_hat", "c1_err",
        "pinch_k", "weyl_k",
    ],
    "catalog_reports.csv": [
        "member", "theorem", "n", "k", "delta", "curvature_norm_integral",
        "pinch_integral", "lhs_total", "constant", "betti_sum", "rhs_total",
        "margin", "tolerance", "satisfied", "hypothesis_ok",
    ],
    "morse.csv": [
        "member", "n", "k", "quantity", "i", "value", "stderr", "samples", "seed",
    ],
}


@dataclass
class JobConfig:
    """Echoable configuration of one CLI job."""

    command: str
    ns: tuple = ()
    ks: tuple = ()
    lambdas: tuple = ()
    deltas: tuple = ()
    variant: str = "pinch"
    budget: int = 50_000
    restarts: int = 20
    seed: int = 0
    quad_method: str | None = None
    quad_nodes: int | None = None
    samples: int = 100_000
    member: str | None = None
    member_args: dict = field(default_factory=dict)
    records_dir: str | None = None
    constants_file: str | None = None
    export: bool = False
    out: str = "results"
    figures: bool = True

    def echo(self) -> dict:
        return {
            "command": self.command, "n": list(self.ns), "k": list(self.ks),
            "lambda": list(self.lambdas), "delta": list(self.deltas),
            "variant": self.variant, "budget": self.budget,
            "restarts": self.restarts, "seed": self.seed,
            "quad_method": self.quad_method, "quad_nodes": self.quad_nodes,
            "samples": self.samples, "member": self.member,
            "member_args": dict(self.member_args),
            "records_dir": self.records_dir,
            "constants_file": self.constants_file,
            "export": self.export,
            "out": self.out, "figures": self.figures,
        }

    def quad_for(self, k: int) -> QuadratureSpec:
        if self.quad_method is None:
            return default_spec(k, nodes=self.quad_nodes, seed=self.seed)
        nodes = self.quad_nodes or (512 if self.quad_method == CIRCLE_COMPOSITE else 4096)
        return QuadratureSpec(self.quad_method, nodes, self.seed)


def _int_list(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t)


def _float_list(text: str) -> tuple:
    return tuple(float(t) for t in text.split(",") if t)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvbench",
        description="Curvature pinching workbench: constant estimation, "
                    "catalog inequality checks, and Morse-theoretic numerics.",
    )
    parser.add_argument("--out", default=None,
                        help=f"output directory (default ${OUT_ENV} or ./results)")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate pinching constants")
    est.add_argument("--n", type=_int_list, required=True)
    est.add_argument("--k", type=_int_list, required=True)
    est.add_argument("--lambda", dest="lambdas", type=_float_list, required=True)
    est.add_argument("--variant", choices=["pinch", "weyl"], default="pinch")
    est.add_argument("--budget", type=int, default=50_000)
    est.add_argument("--restarts", type=int, default=20)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--quad-method", choices=[CIRCLE_COMPOSITE, SPHERE_MONTECARLO])
    est.add_argument("--quad-nodes", type=int)

    con = sub.add_parser("constants", help="merge estimate records into c(n, delta)")
    con.add_argument("--records-dir", default=None,
                     help="directory of estimate envelopes (default: output dir)")
    con.add_argument("--n", type=_int_list, required=True)
    con.add_argument("--delta", dest="deltas", type=_float_list, required=True)

    catp = sub.add_parser("catalog", help="evaluate inequalities on catalog members")
    catp.add_argument("--member",
                      choices=[cat.FAMILY_SPHERE, cat.FAMILY_PRODUCT, cat.FAMILY_CLIFFORD],
                      required=True)
    catp.add_argument("--n", type=_int_list, default=())
    catp.add_argument("--k", type=_int_list, default=())
    catp.add_argument("--p", type=int)
    catp.add_argument("--q", type=int)
    catp.add_argument("--r", type=float, default=1.0)
    catp.add_argument("--s", type=float, default=1.0)
    catp.add_argument("--delta", dest="deltas", type=_float_list, default=())
    catp.add_argument("--constants", dest="constants_file",
                      help="theorem-constants envelope to check against")
    catp.add_argument("--export", action="store_true",
                      help="write the member itself as a JSON envelope")

    mor = sub.add_parser("morse", help="total-curvature and Morse numerics")
    mor.add_argument("--member",
                     choices=[cat.FAMILY_SPHERE, cat.FAMILY_PRODUCT, cat.FAMILY_CLIFFORD],
                     required=True)
    mor.add_argument("--n", type=_int_list, default=())
    mor.add_argument("--k", type=_int_list, default=())
    mor.add_argument("--p", type=int)
    mor.add_argument("--q", type=int)
    mor.add_argument("--r", type=float, default=1.0)
    mor.add_argument("--s", type=float, default=1.0)
    mor.add_argument("--samples", type=int, default=100_000)
    mor.add_argument("--seed", type=int, default=0)

    ver = sub.add_parser("verify-props", help="run the quick property fixtures")
    ver.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args) -> JobConfig:
    out = args.out or os.environ.get(OUT_ENV) or "results"
    member_args = {}
    for key in ("p", "q", "r", "s"):
        if hasattr(args, key) and getattr(args, key) is not None:
            member_args[key] = getattr(args, key)
    return JobConfig(
        command=args.command,
        ns=tuple(getattr(args, "n", ()) or ()),
        ks=tuple(getattr(args, "k", ()) or ()),
        lambdas=tuple(getattr(args, "lambdas", ()) or ()),
        deltas=tuple(getattr(args, "deltas", ()) or ()),
        variant=getattr(args, "variant", "pinch"),
        budget=getattr(args, "budget", 50_000),
        restarts=getattr(args, "restarts", 20),
        seed=getattr(args, "seed", 0),
        quad_method=getattr(args, "quad_method", None),
        quad_nodes=getattr(args, "quad_nodes", None),
        samples=getattr(args, "samples", 100_000),
        member=getattr(args, "member", None),
        member_args=member_args,
        records_dir=getattr(args, "records_dir", None),
        constants_file=getattr(args, "constants_file", None),
        export=getattr(args, "export", False),
        out=out,
        figures=not args.no_figures,
    )


def append_csv_row(out_dir: Path, filename: str, row: dict) -> None:
    """Append one row, rewriting the whole file atomically."""
    columns = CSV_COLUMNS[filename]
    path = out_dir / filename
    existing = path.read_text() if path.exists() else None
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns)
    if existing is None:
        writer.writeheader()
    else:
        buf.write(existing)
    writer.writerow({c: row.get(c, "") for c in columns})
    serialize.write_atomic(path, buf.getvalue().encode("utf-8"))


def _build_member(cfg: JobConfig) -> cat.CatalogImmersion:
    a = cfg.member_args
    if cfg.member == cat.FAMILY_SPHERE:
        if not cfg.ns or not cfg.ks:
            raise AdmissibilityError("umbilic-sphere needs --n and --k")
        return cat.make_umbilic_sphere(cfg.ns[0], cfg.ks[0], a.get("r", 1.0))
    if cfg.member == cat.FAMILY_PRODUCT:
        if "p" not in a or "q" not in a:
            raise AdmissibilityError("sphere-product needs --p and --q")
        return cat.make_sphere_product(a["p"], a["q"], a.get("r", 1.0), a.get("s", 1.0))
    if cfg.member == cat.FAMILY_CLIFFORD:
        if "p" not in a or "q" not in a:
            raise AdmissibilityError("clifford-minimal needs --p and --q")
        return cat.make_clifford_minimal(a["p"], a["q"])
    raise AdmissibilityError(f"unknown member {cfg.member!r}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_estimate(cfg: JobConfig) -> int:
    jobs = [(n, k, lam) for n in cfg.ns for k in cfg.ks for lam in cfg.lambdas]
    for n, k, lam in jobs:
        validate_job(n, k, lam, cfg.variant)

    out = Path(cfg.out)
    for n, k, lam in jobs:
        quad = cfg.quad_for(k)
        record = estimate_epsilon(
            n, k, lam, cfg.variant, budget=cfg.budget, seed=cfg.seed,
            quad=quad, restarts=cfg.restarts,
        )
        name = f"estimate_n{n}_k{k}_lam{lam:g}_{cfg.variant}_seed{cfg.seed}"
        env = serialize.make_envelope(cfg.echo(), serialize.estimate_payload(record))
        serialize.dump_envelope(env, out / f"{name}.json")
        append_csv_row(out, "estimates.csv", {
            "n": n, "k": k, "lambda": repr(lam), "variant": cfg.variant,
            "epsilon_hat": repr(record.epsilon_hat),
            "eps_error": repr(record.eps_error),
            "psi_value": repr(record.psi_value),
            "psi_error": repr(record.psi_error),
            "budget": record.budget, "evals_used": record.evals_used,
            "seed": record.seed, "quad_method": quad.method,
            "quad_nodes": quad.nodes, "quad_seed": quad.seed,
        })
        if cfg.figures:
            figures.save_history_figure(record, out / f"{name}.png")
        print(
            f"estimate n={n} k={k} lambda={lam:g} variant={cfg.variant}: "
            f"eps_hat={record.epsilon_hat:.6g} (+-{3 * record.eps_error:.2g}) "
            f"evals={record.evals_used} -> {name}.json"
        )
    return EXIT_OK


def merge_constants(records_dir, n: int, delta: float, out_dir,
                    config_echo: dict, render: bool = True) -> Path:
    """Fold the newest estimate records in a directory into theorem constants."""
    records_dir = Path(records_dir)
    stamped = []
    for path in sorted(records_dir.glob("*.json")):
        try:
            env = serialize.load_envelope(path)
        except (OSError, ValueError):
            continue
        payload = serialize.decode(env.get("payload", {}))
        if payload.get("kind") != "estimate_record":
            continue
        stamped.append((env.get("timestamp", ""), serialize.estimate_from_payload(payload)))
    stamped.sort(key=lambda t: t[0])
    newest = {}
    for _, rec in stamped:
        key = (rec.n, rec.k, rec.lam, rec.variant,
               rec.quad.method, rec.quad.nodes, rec.quad.seed)
        newest[key] = rec
    if not newest:
        raise AdmissibilityError(f"no estimate records found in {records_dir}")
    tc = derive_constants(n, delta, list(newest.values()))
    out_dir = Path(out_dir)
    name = f"constants_n{n}_delta{delta:g}"
    env = serialize.make_envelope(config_echo, serialize.constants_payload(tc))
    path = out_dir / f"{name}.json"
    serialize.dump_envelope(env, path)
    append_csv_row(out_dir, "constants.csv", {
        "n": n, "delta": repr(delta),
        "c_hat": "" if tc.c_hat is None else repr(tc.c_hat),
        "c_err": repr(tc.c_err),
        "c1_hat": "" if tc.c1_hat is None else repr(tc.c1_hat),
        "c1_err": repr(tc.c1_err),
        "pinch_k": " ".join(map(str, sorted(tc.per_k.get("pinch", {})))),
        "weyl_k": " ".join(map(str, sorted(tc.per_k.get("weyl", {})))),
    })
    if render:
        figures.save_constants_figure(tc, out_dir / f"{name}.png")
    return path


def _cmd_constants(cfg: JobConfig) -> int:
    records_dir = cfg.records_dir or cfg.out
    for n in cfg.ns:
        for delta in cfg.deltas:
            path = merge_constants(records_dir, n, delta, cfg.out, cfg.echo(),
                                   render=cfg.figures)
            print(f"constants n={n} delta={delta:g} -> {path.name}")
    return EXIT_OK


def _cmd_catalog(cfg: JobConfig) -> int:
    member = _build_member(cfg)
    out = Path(cfg.out)
    if cfg.ks and member.family == cat.FAMILY_SPHERE and cfg.ks[0] != member.k:
        raise AdmissibilityError("inconsistent --k for umbilic sphere")
    if cfg.export or not cfg.deltas:
        env = serialize.make_envelope(cfg.echo(), serialize.member_payload(member))
        fname = f"member_{member.name.replace('^', '').replace(' ', '_')}.json"
        serialize.dump_envelope(env, out / fname)
        print(f"catalog member {member.name} -> {fname}")
        if not cfg.deltas:
            return EXIT_OK
    if cfg.constants_file is None:
        raise AdmissibilityError("--delta evaluation needs --constants FILE")
    tc = serialize.constants_from_payload(
        serialize.decode(serialize.load_envelope(cfg.constants_file)["payload"])
    )
    reports = []
    for delta in cfg.deltas:
        if tc.n != member.n:
            raise AdmissibilityError(
                f"constants file is for n={tc.n}, member has n={member.n}"
            )
        if abs(tc.delta - delta) > 1e-12:
            raise AdmissibilityError(
                f"constants file is for delta={tc.delta:g}, requested {delta:g}"
            )
        if member.family == cat.FAMILY_CLIFFORD:
            reports.append(cat.evaluate_corollary_minimal(member, delta, tc))
        reports.append(cat.evaluate_theorem1(member, delta, tc))
        if member.n >= 6 and member.k <= (member.n - 2) // 2 and tc.c1_hat is not None:
            reports.append(cat.evaluate_theorem5(member, delta, tc))
    for rep in reports:
        env = serialize.make_envelope(cfg.echo(), serialize.report_payload(rep))
        fname = (f"report_{rep.theorem}_{rep.member.replace('^', '').replace(' ', '_')}"
                 f"_delta{rep.delta:g}.json")
        serialize.dump_envelope(env, out / fname)
        append_csv_row(out, "catalog_reports.csv", {
            "member": rep.member, "theorem": rep.theorem, "n": rep.n, "k": rep.k,
            "delta": repr(rep.delta),
            "curvature_norm_integral": repr(rep.curvature_norm_integral),
            "pinch_integral": repr(rep.pinch_integral),
            "lhs_total": repr(rep.lhs_total), "constant": repr(rep.constant),
            "betti_sum": rep.betti_sum, "rhs_total": repr(rep.rhs_total),
            "margin": repr(rep.margin), "tolerance": repr(rep.tolerance),
            "satisfied": rep.satisfied, "hypothesis_ok": rep.hypothesis_ok,
        })
        print(
            f"{rep.theorem} {rep.member} delta={rep.delta:g}: "
            f"lhs={rep.lhs_total:.6g} rhs={rep.rhs_total:.6g} "
            f"satisfied={rep.satisfied}"
        )
    if cfg.figures and reports:
        figures.save_report_figure(
            reports, out / f"reports_{member.name.replace('^', '').replace(' ', '_')}.png"
        )
    return EXIT_OK


def _cmd_morse(cfg: JobConfig) -> int:
    member = _build_member(cfg)
    out = Path(cfg.out)
    tc = morse_harness.total_curvature(member, cfg.samples, cfg.seed)
    shxu = []
    for i in range(member.n + 1):
        lhs, rhs, rel = morse_harness.shiohama_xu_check(member, i, cfg.samples,
                                                        cfg.seed + 1000 + i)
        shxu.append((i, lhs, rhs, rel))
    rng = np.random.default_rng(cfg.seed + 77)
    chi = member.euler_characteristic()
    checked = 0
    for _ in range(100):
        u = rng.standard_normal(morse_harness.ambient_dim(member))
        u /= np.linalg.norm(u)
        mu, degenerate = morse_harness.mu_counts(member, u)
        if degenerate:
            continue
        checked += 1
        if int(np.sum((-1) ** np.arange(member.n + 1) * mu)) != chi:
            raise AdmissibilityError("euler characteristic mismatch in morse check")
    payload = serialize.total_curvature_payload(
        member.name, member.n, member.k, cfg.samples, cfg.seed, tc, shxu, chi, checked,
    )
    env = serialize.make_envelope(cfg.echo(), payload)
    name = f"morse_{member.name.replace('^', '').replace(' ', '_')}"
    serialize.dump_envelope(env, out / f"{name}.json")
    base = {"member": member.name, "n": member.n, "k": member.k,
            "samples": cfg.samples, "seed": cfg.seed}
    for i, (v, e) in enumerate(zip(tc.per_index, tc.per_index_stderr)):
        append_csv_row(out, "morse.csv", dict(base, quantity="tau_index", i=i,
                                              value=repr(v), stderr=repr(e)))
    append_csv_row(out, "morse.csv", dict(base, quantity="tau_total", i="",
                                          value=repr(tc.total),
                                          stderr=repr(tc.total_stderr)))
    for i, lhs, rhs, rel in shxu:
        append_csv_row(out, "morse.csv", dict(base, quantity="shiohama_xu_rel", i=i,
                                              value=repr(rel), stderr=""))
    if cfg.figures:
        figures.save_total_curvature_figure(tc, member.betti, member.name,
                                            out / f"{name}.png")
    print(
        f"morse {member.name}: total={tc.total:.4f} (+-{3 * tc.total_stderr:.4f}) "
        f"betti_sum={sum(member.betti)} chi={chi} -> {name}.json"
    )
    return EXIT_OK


def _props_fixtures(seed: int):
    """Quick cross-module property fixtures; returns (name, passed, detail) rows."""
    rng = np.random.default_rng(seed)
    rows = []

    worst = 0.0
    for _ in range(50):
        beta = random_form(rng, 6, 2)
        tr = beta.trace_vector()
        lhs = scal_of(beta)
        rhs = float(tr @ tr) - beta.norm() ** 2
        worst = max(worst, abs(lhs - rhs))
    rows.append(("scal-trace-identity", worst <= 1e-10, f"max defect {worst:.2e}"))

    worst = 0.0
    g = ScalarForm.identity(6)
    for _ in range(20):
        beta = random_form(rng, 6, 2)
        defect = (r_of(beta) - (w_of(beta) + kn_scalar(l_of(beta), g))).max_abs()
        worst = max(worst, defect)
    rows.append(("curvature-decomposition", worst <= 1e-12, f"max defect {worst:.2e}"))

    worst = 0.0
    for _ in range(10):
        beta = random_form(rng, 6, 2)
        v1 = phi_pinch(beta, 0.5)
        v2 = phi_pinch(beta.scaled(2.0), 0.5)
        worst = max(worst, abs(v2 - 16.0 * v1) / max(v1, 1e-30))
    rows.append(("phi-degree-4", worst <= 1e-10, f"max relative defect {worst:.2e}"))

    beta = random_form(np.random.default_rng(seed + 1), 7, 2)
    spec = default_spec(2, seed=seed)
    vals = [psi_integral(beta, region, spec).value
            for region in (RegionKind.OMEGA_BAND, RegionKind.PHI_BAND,
                           RegionKind.FULL_SPHERE)]
    nested = vals[0] <= vals[1] + 1e-12 and vals[1] <= vals[2] + 1e-12
    rows.append(("psi-region-nesting", nested,
                 f"omega={vals[0]:.4g} phi={vals[1]:.4g} full={vals[2]:.4g}"))
    return rows


def _cmd_verify_props(cfg: JobConfig) -> int:
    rows = _props_fixtures(cfg.seed)
    env = serialize.make_envelope(cfg.echo(), serialize.props_payload(rows))
    out = Path(cfg.out)
    serialize.dump_envelope(env, out / "props_summary.json")
    ok = True
    for name, passed, detail in rows:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok = ok and passed
    return EXIT_OK if ok else 1


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ADMISSIBILITY if exc.code not in (0, None) else EXIT_OK
    cfg = config_from_args(args)
    try:
        if cfg.command == "estimate":
            return _cmd_estimate(cfg)
        if cfg.command == "constants":
            return _cmd_constants(cfg)
        if cfg.command == "catalog":
            return _cmd_catalog(cfg)
        if cfg.command == "morse":
            return _cmd_morse(cfg)
        if cfg.command == "verify-props":
            return _cmd_verify_props(cfg)
        raise AdmissibilityError(f"unknown command {cfg.command!r}")
    except AdmissibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
