"""JSON (and npz) persistence of solutions, bit-exact on reload."""
from __future__ import annotations

import json
import math
from dataclasses import asdict
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np

from .radial import (
    Quadratures,
    RadialParams,
    RadialSolution,
    ShootingParams,
    outcome_from_tag,
    outcome_tag,
)

RADIAL_SCHEMA = "skewcs.radial-solution/1"
PLANAR_SCHEMA = "skewcs.planar-solution/1"


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # running from a source tree
        return "0+unknown"


def _enc(x: Any):
    # JSON has no inf/nan; encode them as strings
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.floating,)):
        return _enc(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _enc(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_enc(v) for v in x]
    if isinstance(x, np.ndarray):
        return _enc(x.tolist())
    return x


def _dec(x: Any):
    if isinstance(x, str) and x in ("nan", "inf", "-inf"):
        return float(x)
    if isinstance(x, list):
        return [_dec(v) for v in x]
    if isinstance(x, dict):
        return {k: _dec(v) for k, v in x.items()}
    return x


def dumps(obj: dict) -> str:
    return json.dumps(_enc(obj), sort_keys=True, indent=1)


def radial_to_dict(sol: RadialSolution, config: dict | None = None) -> dict:
    return {
        "schema": RADIAL_SCHEMA,
        "version": code_version(),
        "config": config or {},
        "params": asdict(sol.params),
        "shoot": None if sol.shoot is None else asdict(sol.shoot),
        "outcome": outcome_tag(sol.outcome),
        "outcome_betas": [getattr(sol.outcome, "beta1", math.nan), getattr(sol.outcome, "beta2", math.nan)],
        "beta_slope": list(sol.beta_slope),
        "beta_flux": list(sol.beta_flux),
        "quad": asdict(sol.quad),
        "quad_mesh": asdict(sol.quad_mesh),
        "quad_origin": asdict(sol.quad_origin),
        "quad_tail": asdict(sol.quad_tail),
        "tol": sol.tol,
        "stop": sol.stop,
        "nfev": sol.nfev,
        "meta": sol.meta,
        "samples": sol.samples.tolist(),
    }


def radial_from_dict(d: dict) -> RadialSolution:
    d = _dec(d)
    if d.get("schema") != RADIAL_SCHEMA:
        raise ValueError(f"unsupported schema {d.get('schema')!r}")
    p = d["params"]
    shoot = None if d["shoot"] is None else ShootingParams(**d["shoot"])
    b = d["outcome_betas"]
    meta = dict(d["meta"])
    if "target" in meta:
        meta["target"] = tuple(meta["target"])
    return RadialSolution(
        params=RadialParams(**p),
        shoot=shoot,
        samples=np.asarray(d["samples"], dtype=float).reshape(-1, 5),
        outcome=outcome_from_tag(d["outcome"], b[0], b[1]),
        beta_slope=tuple(d["beta_slope"]),
        beta_flux=tuple(d["beta_flux"]),
        quad=Quadratures(**d["quad"]),
        quad_mesh=Quadratures(**d["quad_mesh"]),
        quad_origin=Quadratures(**d["quad_origin"]),
        quad_tail=Quadratures(**d["quad_tail"]),
        tol=d["tol"],
        stop=d["stop"],
        nfev=d["nfev"],
        meta=meta,
    )


def save_radial(sol: RadialSolution, path, config: dict | None = None) -> None:
    Path(path).write_text(dumps(radial_to_dict(sol, config)))


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def load_radial(path) -> RadialSolution:
    return radial_from_dict(load_json(path))


# ---------------------------------------------------------------------------
# planar: JSON header next to an npz payload with the long-double fields as hi/lo pairs


def _split(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hi = v.astype(np.float64)
    lo = (v - hi.astype(np.longdouble)).astype(np.float64)
    return hi, lo


def save_planar(sol, path, config: dict | None = None) -> None:
    path = Path(path)
    payload = path.with_suffix(".npz")
    h1, l1 = _split(sol.v1)
    h2, l2 = _split(sol.v2)
    np.savez(payload, v1_hi=h1, v1_lo=l1, v2_hi=h2, v2_lo=l2)
    header = {
        "schema": PLANAR_SCHEMA,
        "version": code_version(),
        "config": config or {},
        "vortices": sol.config.to_dict(),
        "decay": [sol.decay.beta1, sol.decay.beta2],
        "grid": {"radius": sol.grid.radius, "n": sol.grid.n, "h": sol.grid.h, "nodes": sol.grid.size},
        "residual_norm": sol.residual_norm,
        "newton_history": list(sol.newton_history),
        "max_abs_v": sol.max_abs_v,
        "meta": sol.meta,
        "payload": payload.name,
    }
    path.write_text(dumps(header))


def load_planar(path):
    from .planar.config import VortexConfig
    from .planar.grid import DiskGrid
    from .planar.solver import PlanarSolution
    from .shooting import DecayPair

    path = Path(path)
    d = _dec(load_json(path))
    if d.get("schema") != PLANAR_SCHEMA:
        raise ValueError(f"unsupported schema {d.get('schema')!r}")
    z = np.load(path.with_name(d["payload"]))
    v1 = z["v1_hi"].astype(np.longdouble) + z["v1_lo"].astype(np.longdouble)
    v2 = z["v2_hi"].astype(np.longdouble) + z["v2_lo"].astype(np.longdouble)
    grid = DiskGrid(d["grid"]["radius"], d["grid"]["n"])
    return PlanarSolution(VortexConfig.from_dict(d["vortices"]), DecayPair(*d["decay"]), grid, v1, v2,
                          d["residual_norm"], tuple(d["newton_history"]), d["meta"])
