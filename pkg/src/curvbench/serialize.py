"""Machine-readable result envelopes with bit-exact float round-tripping.

Every real number in a payload is stored as a {hex, dec} pair: the hex
field (float.hex encoding) reproduces the double bit-for-bit, the dec
field mirrors it for human readers.  Envelopes carry a schema version, a
timestamp, an echo of the job configuration, and one typed payload;
determinism guarantees apply to the payload bytes only (the timestamp
naturally varies).  Files are written atomically (temp file plus rename).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from datetime import datetime, timezone
from importlib import resources

import numpy as np

from .catalog import InequalityReport
from .forms_core import VectorForm
from .morse_harness import TotalCurvature
from .pinch_constants import EstimateRecord, TheoremConstants
from .sphere_index import QuadratureSpec

SCHEMA_VERSION = "1"


def enc_float(x: float) -> dict:
    x = float(x)
    return {"hex": x.hex(), "dec": x if math.isfinite(x) else repr(x)}


def dec_float(d: dict) -> float:
    return float.fromhex(d["hex"])


def enc_array(a: np.ndarray) -> dict:
    flat = np.asarray(a, dtype=float).ravel()
    return {
        "shape": list(np.asarray(a).shape),
        "hex": [v.hex() for v in flat.tolist()],
        "dec": [v if math.isfinite(v) else repr(v) for v in flat.tolist()],
    }


def dec_array(d: dict) -> np.ndarray:
    flat = np.array([float.fromhex(h) for h in d["hex"]], dtype=float)
    return flat.reshape(d["shape"])


def _is_float_block(d) -> bool:
    return isinstance(d, dict) and set(d) == {"hex", "dec"}


def _is_array_block(d) -> bool:
    return isinstance(d, dict) and set(d) == {"shape", "hex", "dec"}


def encode(obj):
    """Recursively replace floats and arrays by their lossless blocks."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return enc_float(obj)
    if isinstance(obj, np.ndarray):
        return enc_array(obj)
    if isinstance(obj, np.generic):
        return encode(obj.item())
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    raise TypeError(f"cannot encode {type(obj)!r}")


def decode(obj):
    """Inverse of encode (floats and arrays restored bit-exactly)."""
    if _is_float_block(obj):
        return dec_float(obj)
    if _is_array_block(obj):
        return dec_array(obj)
    if isinstance(obj, dict):
        return {k: decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# Payload builders
# ---------------------------------------------------------------------------

def quad_payload(q: QuadratureSpec) -> dict:
    return {"method": q.method, "nodes": q.nodes, "seed": q.seed}


def quad_from_payload(d: dict) -> QuadratureSpec:
    return QuadratureSpec(method=d["method"], nodes=d["nodes"], seed=d["seed"])


def estimate_payload(rec: EstimateRecord) -> dict:
    return {
        "kind": "estimate_record",
        "n": rec.n,
        "k": rec.k,
        "lambda": rec.lam,
        "variant": rec.variant,
        "epsilon_hat": rec.epsilon_hat,
        "eps_error": rec.eps_error,
        "psi_value": rec.psi_value,
        "psi_error": rec.psi_error,
        "budget": rec.budget,
        "evals_used": rec.evals_used,
        "seed": rec.seed,
        "quad": quad_payload(rec.quad),
        "history": [[int(i), float(v)] for i, v in rec.history],
        "witness": rec.witness.components,
    }


def estimate_from_payload(d: dict) -> EstimateRecord:
    return EstimateRecord(
        n=d["n"], k=d["k"], lam=d["lambda"], variant=d["variant"],
        epsilon_hat=d["epsilon_hat"],
        witness=VectorForm(d["witness"]),
        budget=d["budget"], evals_used=d["evals_used"], seed=d["seed"],
        quad=quad_from_payload(d["quad"]),
        history=tuple((int(i), float(v)) for i, v in d["history"]),
        psi_value=d["psi_value"], psi_error=d["psi_error"],
    )


def constants_payload(tc: TheoremConstants) -> dict:
    return {
        "kind": "theorem_constants",
        "n": tc.n,
        "delta": tc.delta,
        "c_hat": tc.c_hat,
        "c1_hat": tc.c1_hat,
        "c_err": tc.c_err,
        "c1_err": tc.c1_err,
        "per_k": {
            variant: {str(k): [eps, err] for k, (eps, err) in entries.items()}
            for variant, entries in tc.per_k.items()
        },
    }


def constants_from_payload(d: dict) -> TheoremConstants:
    return TheoremConstants(
        n=d["n"], delta=d["delta"], c_hat=d["c_hat"], c1_hat=d["c1_hat"],
        c_err=d["c_err"], c1_err=d["c1_err"],
        per_k={
            variant: {int(k): (v[0], v[1]) for k, v in entries.items()}
            for variant, entries in d["per_k"].items()
        },
    )


def report_payload(rep: InequalityReport) -> dict:
    return {
        "kind": "inequality_report",
        "member": rep.member,
        "theorem": rep.theorem,
        "n": rep.n,
        "k": rep.k,
        "delta": rep.delta,
        "curvature_norm_integral": rep.curvature_norm_integral,
        "pinch_integral": rep.pinch_integral,
        "lhs_total": rep.lhs_total,
        "constant": rep.constant,
        "betti_sum": rep.betti_sum,
        "rhs_total": rep.rhs_total,
        "satisfied": rep.satisfied,
        "margin": rep.margin,
        "tolerance": rep.tolerance,
        "hypothesis_ok": rep.hypothesis_ok,
        "note": rep.note,
        "candidate": None if rep.candidate is None else rep.candidate.components,
    }


def total_curvature_payload(member: str, n: int, k: int, samples: int, seed: int,
                            tc: TotalCurvature, shxu_rows, chi_expected: int,
                            chi_checked: int) -> dict:
    return {
        "kind": "morse_summary",
        "member": member,
        "n": n,
        "k": k,
        "samples": samples,
        "seed": seed,
        "per_index": list(tc.per_index),
        "per_index_stderr": list(tc.per_index_stderr),
        "total": tc.total,
        "total_stderr": tc.total_stderr,
        "shiohama_xu": [
            {"i": int(i), "lhs": lhs, "rhs": rhs, "relative_error": rel}
            for i, lhs, rhs, rel in shxu_rows
        ],
        "euler_characteristic": chi_expected,
        "euler_checked_directions": chi_checked,
    }


def props_payload(results) -> dict:
    return {
        "kind": "props_summary",
        "results": [
            {"name": name, "passed": bool(passed), "detail": detail}
            for name, passed, detail in results
        ],
    }


def member_payload(m) -> dict:
    return {
        "kind": "catalog_member",
        "name": m.name,
        "family": m.family,
        "n": m.n,
        "k": m.k,
        "parameters": dict(m.parameters),
        "betti": list(m.betti),
        "volume": m.volume,
        "alpha": m.alpha.components,
        "s_sphere": m.s_sphere,
    }


# ---------------------------------------------------------------------------
# Envelopes
# ---------------------------------------------------------------------------

def make_envelope(config: dict, payload: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": encode(config),
        "payload": encode(payload),
    }


def canonical_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
            + "\n").encode("utf-8")


def payload_bytes(envelope: dict) -> bytes:
    """Deterministic byte view of the payload alone (timestamp excluded)."""
    return canonical_bytes(envelope["payload"])


def write_atomic(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_envelope(envelope: dict, path) -> None:
    write_atomic(path, canonical_bytes(envelope))


def load_envelope(path) -> dict:
    with open(path, "rb") as fh:
        return json.loads(fh.read().decode("utf-8"))


def schema_text() -> str:
    return resources.files("curvbench").joinpath("schema/envelope.schema.json").read_text()
