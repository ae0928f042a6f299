"""Command-line front end: JSON configs in, deterministic CSV/JSON grids out.

All angle-valued config entries (k0d and momentum-grid bounds) are given in
units of pi so configs stay rational; metadata echoes both representations.
Flags override config keys.  Exit codes: 0 success, 2 validation failure,
3 more than 1% of grid cells failed numerically.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .boundary import boundary_amplitudes, exit_spectral_map, subradiant_rate
from .errors import PolaritonChainError
from .kinematics import (
    ChainParams,
    PairMomentum,
    group_velocity_single,
    omega_single,
    reduce_zone,
)
from .oracle import Sector, build_hamiltonian, decay_rates
from .scattering import (
    lieb_liniger_t1,
    scattering_length,
    solve_grid,
    solve_scattering,
    t1_K0,
)

COMMANDS = (
    "dispersion",
    "boundary",
    "phase-diagram",
    "scatter-point",
    "subradiance",
    "oracle-compare",
    "ll-compare",
)

#: Grid points are nudged this far (radians) off any dispersion pole.
GRID_INSET = 1e-6


@dataclass
class AxisSpec:
    """One grid axis; bounds in units of pi."""

    min: float
    max: float
    count: int

    def values_rad(self) -> np.ndarray:
        return np.linspace(self.min * math.pi, self.max * math.pi, self.count)


@dataclass
class RunConfig:
    command: str
    params: ChainParams
    grid: Dict[str, AxisSpec] = field(default_factory=dict)
    output: str = "out.csv"
    format: str = "csv"
    threads: int = 1
    seed: int = 0
    options: Dict = field(default_factory=dict)
    k0d_pi: float = 0.5


def _fmt(x) -> str:
    """Shortest round-trip decimal representation."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def load_config(data: Dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON document."""
    pblock = dict(data.get("params", {}))
    k0d_pi = float(pblock.get("k0d", 0.5))
    params = ChainParams(
        gamma_r=float(pblock.get("gamma_r", 1.0)),
        gamma_l=float(pblock.get("gamma_l", 1.0)),
        k0d=k0d_pi * math.pi,
        gamma_s=float(pblock.get("gamma_s", 0.0)),
    )
    grid = {}
    for axis, spec in dict(data.get("grid", {})).items():
        grid[axis] = AxisSpec(
            min=float(spec["min"]), max=float(spec["max"]), count=int(spec["count"])
        )
    return RunConfig(
        command=data.get("command", ""),
        params=params,
        grid=grid,
        output=data.get("output", "out.csv"),
        format=data.get("format", "csv"),
        threads=int(data.get("threads", 1)),
        seed=int(data.get("seed", 0)),
        options=dict(data.get("options", {})),
        k0d_pi=k0d_pi,
    )


def validate(data: Dict) -> List[str]:
    """Report every constraint violation of a raw config document; pure."""
    problems: List[str] = []
    pblock = dict(data.get("params", {}))
    k0d_pi = pblock.get("k0d", 0.5)
    try:
        k0d_pi = float(k0d_pi)
    except (TypeError, ValueError):
        problems.append(f"params.k0d: not a number: {k0d_pi!r}")
        k0d_pi = None
    if k0d_pi is not None and not (0.0 < k0d_pi < 1.0):
        problems.append("params.k0d: k0d must lie strictly inside (0, pi)")
    gr = float(pblock.get("gamma_r", 1.0))
    gl = float(pblock.get("gamma_l", 1.0))
    gs = float(pblock.get("gamma_s", 0.0))
    if gr < 0 or gl < 0 or gs < 0:
        problems.append("params: decay rates must be non-negative")
    if gr + gl <= 0:
        problems.append("params: gamma_r + gamma_l must be positive")
    command = data.get("command", "")
    if command not in COMMANDS:
        problems.append(f"command: unknown command {command!r}")
    for axis, spec in dict(data.get("grid", {})).items():
        try:
            if int(spec["count"]) < 2:
                problems.append(f"grid.{axis}: count must be >= 2")
        except (KeyError, TypeError, ValueError):
            problems.append(f"grid.{axis}: needs numeric min/max/count")
    if command == "subradiance" and gr != gl:
        problems.append("subradiance: requires non-chiral parameters (gamma_r == gamma_l)")
    if command == "oracle-compare":
        mode = dict(data.get("options", {})).get("mode", "subradiance")
        if mode not in ("subradiance",):
            problems.append(f"oracle-compare: unknown mode {mode!r}")
        if gr != gl:
            problems.append("oracle-compare: requires non-chiral parameters")
        for n in dict(data.get("options", {})).get("N", [20, 40, 80]):
            if not (2 <= int(n) <= 2000):
                problems.append(f"oracle-compare: N={n} outside the supported range")
    fmt = data.get("format", "csv")
    if fmt not in ("csv", "json"):
        problems.append(f"format: must be csv or json, got {fmt!r}")
    if int(data.get("threads", 1)) < 1:
        problems.append("threads: must be >= 1")
    return problems


def _inset_axis(values: np.ndarray, poles: Sequence[float]) -> np.ndarray:
    """Nudge grid points off the listed poles by GRID_INSET (deterministic)."""
    out = values.copy()
    for pole in poles:
        dist = reduce_zone(out - pole)
        hit = np.abs(dist) < GRID_INSET
        out[hit] = out[hit] + np.where(dist[hit] >= 0, GRID_INSET, -GRID_INSET)
    return out


def _parallel_rows(fn, items, threads: int) -> List:
    """Evaluate fn over items, preserving input order regardless of scheduling."""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _write_csv(path: str, header: List[str], rows: List[List[str]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_json(path: str, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _sidecar(cfg: RunConfig, columns: List[str], wall: float, raw: Dict) -> None:
    meta = {
        "command": cfg.command,
        "config": raw,
        "params": {
            "gamma_r": cfg.params.gamma_r,
            "gamma_l": cfg.params.gamma_l,
            "gamma_s": cfg.params.gamma_s,
            "k0d_pi": cfg.k0d_pi,
            "k0d_rad": cfg.params.k0d,
        },
        "columns": columns,
        "schema_version": 1,
        "library_version": __version__,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "wall_time_s": wall,
    }
    _write_json(cfg.output + ".meta.json", meta)


# ---------------------------------------------------------------------------
# command implementations; each returns (columns, rows, n_failed, n_cells)
# ---------------------------------------------------------------------------


def _axis(cfg: RunConfig, name: str, default_min: float, default_max: float, count: int):
    spec = cfg.grid.get(name)
    if spec is None:
        spec = AxisSpec(default_min, default_max, count)
    return spec.values_rad()


def _run_dispersion(cfg: RunConfig):
    poles = (cfg.params.k0d, -cfg.params.k0d)
    kd = _inset_axis(_axis(cfg, "kd", -1.0, 1.0, 400), poles)

    def row(k):
        try:
            w = float(omega_single(cfg.params, k))
            v = float(group_velocity_single(cfg.params, k))
            e = boundary_amplitudes(cfg.params, k).entry_probability
            return [_fmt(k), _fmt(w), _fmt(v), _fmt(e), "ok"]
        except PolaritonChainError as exc:
            return [_fmt(k), "nan", "nan", "nan", type(exc).__name__]

    rows = _parallel_rows(row, kd, cfg.threads)
    failed = sum(1 for r in rows if r[-1] != "ok")
    return (
        ["kd", "omega", "vg", "entry_probability", "status"],
        rows,
        failed,
        len(rows),
    )


def _run_boundary(cfg: RunConfig):
    N = int(cfg.options.get("N", 10))
    poles = (cfg.params.k0d, -cfg.params.k0d)
    kd = _inset_axis(_axis(cfg, "kd", -1.0, 1.0, 400), poles)

    def row(k):
        try:
            amp = boundary_amplitudes(cfg.params, k)
            prob, phase = exit_spectral_map(cfg.params, N, k)
            kp = amp.k_partner.kd if amp.k_partner is not None else math.nan
            return [
                _fmt(k),
                _fmt(kp),
                _fmt(amp.r.real),
                _fmt(amp.r.imag),
                _fmt(amp.t.real),
                _fmt(amp.t.imag),
                _fmt(amp.entry_probability),
                _fmt(prob),
                _fmt(phase.real),
                _fmt(phase.imag),
                "ok",
            ]
        except PolaritonChainError as exc:
            return [_fmt(k)] + ["nan"] * 9 + [type(exc).__name__]

    rows = _parallel_rows(row, kd, cfg.threads)
    failed = sum(1 for r in rows if r[-1] != "ok")
    cols = [
        "kd",
        "kd_partner",
        "r_re",
        "r_im",
        "t_re",
        "t_im",
        "entry_probability",
        "exit_probability",
        "phase_re",
        "phase_im",
        "status",
    ]
    return cols, rows, failed, len(rows)


_CHANNEL_NAMES = {0: "elastic", 1: "inelastic", 2: "resonance", -1: "error"}


def _run_phase_diagram(cfg: RunConfig):
    Kd = _axis(cfg, "Kd", -1.0, 1.0, 201)
    qd = _axis(cfg, "qd", -1.0, 1.0, 201)
    # nudge (K, q) cells off the four pole lines k1, k2 = +-k0
    KK, QQ = np.meshgrid(Kd, qd, indexing="ij")
    K_flat, q_flat = KK.ravel(), QQ.ravel()
    k0d = cfg.params.k0d
    for _ in range(3):
        moved = False
        for sign_q in (1.0, -1.0):
            for pole in (k0d, -k0d):
                dist = reduce_zone(K_flat + sign_q * q_flat - pole)
                hit = np.abs(dist) < GRID_INSET
                if np.any(hit):
                    q_flat = q_flat.copy()
                    q_flat[hit] += sign_q * GRID_INSET
                    moved = True
        if not moved:
            break
    out = solve_grid(cfg.params, K_flat, q_flat)
    rows = []
    failed = 0
    for i in range(K_flat.size):
        err = out["error"][i]
        ch = _CHANNEL_NAMES[int(out["channel"][i])]
        if err:
            failed += 1
            rows.append(
                [_fmt(K_flat[i]), _fmt(q_flat[i]), "nan", "nan", "nan", ch, err]
            )
        else:
            rows.append(
                [
                    _fmt(K_flat[i]),
                    _fmt(q_flat[i]),
                    _fmt(out["im_qprime"][i]),
                    _fmt(out["abs_t1_sq"][i]),
                    _fmt(out["inelastic_prob"][i]),
                    ch,
                    "ok",
                ]
            )
    cols = ["Kd", "qd", "im_qprime", "abs_t1_sq", "inelastic_prob", "channel", "status"]
    return cols, rows, failed, len(rows)


def _run_scatter_point(cfg: RunConfig):
    Kd = float(cfg.options.get("Kd", 0.25)) * math.pi
    qd = float(cfg.options.get("qd", 0.5)) * math.pi
    sol = solve_scattering(cfg.params, PairMomentum(Kd, qd))
    payload = {
        "Kd": Kd,
        "qd": qd,
        "omega": sol.omega,
        "t1_re": sol.t1.real,
        "t1_im": sol.t1.imag,
        "t2_re": sol.t2.real,
        "t2_im": sol.t2.imag,
        "qprime_re": sol.qprime.re,
        "qprime_im": sol.qprime.im,
        "qprime_solve_re": sol.qprime_solve.real,
        "qprime_solve_im": sol.qprime_solve.imag,
        "channel": sol.channel.value,
        "velocity_ratio": sol.velocity_ratio,
        "elastic_probability": sol.elastic_probability,
        "inelastic_probability": sol.inelastic_probability,
        "unitarity_defect": sol.unitarity_defect,
    }
    return payload


def _run_subradiance(cfg: RunConfig):
    Ns = [int(n) for n in cfg.options.get("N", [20, 40, 80])]
    xis = [int(x) for x in cfg.options.get("xi", [1, 2])]
    rows = []
    failed = 0
    for N in Ns:
        for xi in xis:
            try:
                pred = subradiant_rate(cfg.params, N, xi)
                rows.append(
                    [
                        str(N),
                        str(xi),
                        _fmt(pred.kd),
                        _fmt(pred.gamma_exact),
                        _fmt(pred.gamma_asymptotic),
                        "ok",
                    ]
                )
            except PolaritonChainError as exc:
                failed += 1
                rows.append([str(N), str(xi), "nan", "nan", "nan", type(exc).__name__])
    cols = ["N", "xi", "kd", "gamma_exact", "gamma_asymptotic", "status"]
    return cols, rows, failed, len(rows)


def _run_oracle_compare(cfg: RunConfig):
    """Compare analytic subradiance rates against exact diagonalization.

    The darkest finite-chain modes live near kd = pi xi / N or at the mirror
    point pi - pi xi / N, whichever side of the dispersion is flatter; the
    N^-3 law is evaluated on both families and the darker one is matched
    against the two smallest distinct decay levels of the oracle spectrum.
    """
    Ns = [int(n) for n in cfg.options.get("N", [20, 40, 80])]
    xis = [int(x) for x in cfg.options.get("xi", [1, 2])]
    table = []
    for N in Ns:
        op = build_hamiltonian(cfg.params, N, Sector.ONE)
        rates = [m.rate for m in decay_rates(op)]
        # deduplicate mirror-degenerate levels
        distinct: List[float] = []
        for r in rates:
            if not distinct or abs(r - distinct[-1]) > 1e-6 * max(r, distinct[-1]):
                distinct.append(r)
        mirror = ChainParams(
            cfg.params.gamma_r, cfg.params.gamma_l, math.pi - cfg.params.k0d
        )
        for xi in xis:
            g_here = subradiant_rate(cfg.params, N, xi).gamma_asymptotic
            g_mirror = subradiant_rate(mirror, N, xi).gamma_asymptotic
            g_formula = min(g_here, g_mirror)
            g_oracle = distinct[xi - 1]
            table.append(
                {
                    "N": N,
                    "xi": xi,
                    "gamma_formula": g_formula,
                    "gamma_oracle": g_oracle,
                    "rel_diff": abs(g_formula - g_oracle) / g_oracle,
                }
            )
    return table


def _run_ll_compare(cfg: RunConfig):
    qd = _axis(cfg, "qd", 0.0025, 1.0, 200)
    a = scattering_length(cfg.params)
    rows = []
    failed = 0
    for q in qd:
        try:
            exact = t1_K0(cfg.params, q)
            ll = lieb_liniger_t1(a, q)
            rows.append(
                [
                    _fmt(q),
                    _fmt(exact.real),
                    _fmt(exact.imag),
                    _fmt(ll.real),
                    _fmt(ll.imag),
                    "ok",
                ]
            )
        except PolaritonChainError as exc:
            failed += 1
            rows.append([_fmt(q), "nan", "nan", "nan", "nan", type(exc).__name__])
    cols = ["qd", "t1_re", "t1_im", "ll_t1_re", "ll_t1_im", "status"]
    return cols, rows, failed, len(rows)


def run(cfg: RunConfig, raw_config: Optional[Dict] = None) -> int:
    """Execute a validated config; writes the data file and metadata sidecar."""
    t0 = time.perf_counter()
    raw = raw_config if raw_config is not None else {}
    if cfg.command == "scatter-point":
        payload = _run_scatter_point(cfg)
        _write_json(cfg.output, payload)
        _sidecar(cfg, sorted(payload.keys()), time.perf_counter() - t0, raw)
        return 0
    if cfg.command == "oracle-compare":
        table = _run_oracle_compare(cfg)
        _write_json(cfg.output, table)
        _sidecar(
            cfg,
            ["N", "xi", "gamma_formula", "gamma_oracle", "rel_diff"],
            time.perf_counter() - t0,
            raw,
        )
        return 0

    runners = {
        "dispersion": _run_dispersion,
        "boundary": _run_boundary,
        "phase-diagram": _run_phase_diagram,
        "subradiance": _run_subradiance,
        "ll-compare": _run_ll_compare,
    }
    cols, rows, failed, total = runners[cfg.command](cfg)
    if cfg.format == "json":
        payload = [dict(zip(cols, row)) for row in rows]
        _write_json(cfg.output, payload)
    else:
        _write_csv(cfg.output, cols, rows)
    _sidecar(cfg, cols, time.perf_counter() - t0, raw)
    if total > 0 and failed / total > 0.01:
        print(
            f"error: {failed}/{total} grid cells failed numerically",
            file=sys.stderr,
        )
        return 3
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polariton-chain",
        description="Polariton dispersion, boundary coupling, two-polariton "
        "scattering and finite-chain oracle sweeps.",
    )
    parser.add_argument("command", choices=COMMANDS + ("validate",))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--output", help="output data file")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--threads", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--gamma-r", type=float, dest="gamma_r")
    parser.add_argument("--gamma-l", type=float, dest="gamma_l")
    parser.add_argument("--gamma-s", type=float, dest="gamma_s")
    parser.add_argument("--k0d", type=float, help="resonance phase in units of pi")
    parser.add_argument("--Kd", type=float, help="scatter-point Kd in units of pi")
    parser.add_argument("--qd", type=float, help="scatter-point qd in units of pi")
    parser.add_argument("--N", type=int, action="append", help="chain size(s)")
    parser.add_argument("--xi", type=int, action="append", help="mode index(es)")
    parser.add_argument("--mode", help="oracle-compare mode")
    return parser


def _merge_flags(data: Dict, args: argparse.Namespace) -> Dict:
    """Flags override config keys (documented precedence)."""
    data = dict(data)
    data.setdefault("params", {})
    data.setdefault("options", {})
    for key in ("output", "format", "threads", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    for key in ("gamma_r", "gamma_l", "gamma_s", "k0d"):
        val = getattr(args, key, None)
        if val is not None:
            data["params"][key] = val
    for key in ("Kd", "qd", "mode"):
        val = getattr(args, key, None)
        if val is not None:
            data["options"][key] = val
    if args.N:
        data["options"]["N"] = args.N
        if len(args.N) == 1:
            data["options"]["N"] = args.N if args.command == "oracle-compare" else args.N
    if args.xi:
        data["options"]["xi"] = args.xi
    return data


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    data: Dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    if args.command == "validate":
        problems = validate(data)
        for p in problems:
            print(p)
        print(f"{len(problems)} problem(s)")
        return 0 if not problems else 2
    data["command"] = args.command
    data = _merge_flags(data, args)
    problems = validate(data)
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return 2
    cfg = load_config(data)
    try:
        return run(cfg, raw_config=data)
    except PolaritonChainError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
