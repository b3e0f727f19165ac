"""Command line driver: ``wormproj {verify,kernel,norms,residues}``.

Every command reads an optional YAML configuration, writes a CSV (to --output or
stdout) and, when writing to a file, a ``<output>.meta.json`` sidecar with the
resolved configuration and library versions.

Exit codes: 0 pass, 1 check failure, 2 usage or configuration error, 3 accuracy failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .correction import PoleError, residue_report, resolve_correction_sign
from .geometry import PointC2, WormParams, in_D_beta
from .grids import DPrimeGrid
from .kernels import KERNEL_IDS, pushforward_kernel
from .numerics import AccuracyError, ConfigurationError, GridSpec, QuadratureSpec
from .operators import OPERATOR_QUAD, norm_growth_experiment
from .verify import VerifyConfig, criterion_passed, run_all
from .weights import DegenerateParametersError, ensure_nondegenerate

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ACCURACY = 0, 1, 2, 3

POINT_COLUMNS = ["z1_re", "z1_im", "z2_re", "z2_im", "w1_re", "w1_im", "w2_re", "w2_im"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    beta: float = 2.0
    j_list: tuple[int, ...] = (0, 1, 2, 3, 4)
    m_gauss: int = 1
    tol: float = 1.0
    quad_tol: float = 1e-10
    eps_dom: float = 0.0
    k_max: int = 3
    trials: int = 8
    seed: int = 0
    only: tuple[int, ...] | None = None
    supplementary: bool = True
    grid: GridSpec = field(default_factory=GridSpec)
    allow_degenerate: bool = False

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        data = dict(data or {})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown configuration keys: {sorted(unknown)}")
        grid = data.pop("grid", None) or {}
        if not isinstance(grid, dict):
            raise UsageError("grid must be a mapping")
        gnames = {f.name for f in dataclasses.fields(GridSpec)}
        if set(grid) - gnames:
            raise UsageError(f"unknown grid keys: {sorted(set(grid) - gnames)}")
        for key in ("j_list", "only"):
            if data.get(key) is not None:
                data[key] = tuple(int(v) for v in data[key])
        try:
            return cls(grid=GridSpec(**grid), **data)
        except (TypeError, ConfigurationError) as exc:
            raise UsageError(str(exc)) from exc

    @property
    def params(self) -> WormParams:
        return WormParams(self.beta, self.m_gauss, eps_dom=self.eps_dom, allow_degenerate=self.allow_degenerate)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["grid"] = dataclasses.asdict(self.grid)
        return d


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise UsageError(f"cannot read configuration: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("configuration must be a mapping")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.allow_degenerate:
        data["allow_degenerate"] = True
    cfg = RunConfig.from_mapping(data)
    try:
        params = cfg.params
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        ensure_nondegenerate(params)
    except DegenerateParametersError as exc:
        raise UsageError(f"{exc} (pass --allow-degenerate to override)") from exc
    return cfg


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table(path: str | None, header: list[str], rows: list[list], meta: dict) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    if path is None:
        sys.stdout.write(buf.getvalue())
        return
    Path(path).write_text(buf.getvalue())
    meta = dict(meta)
    meta["versions"] = {
        "wormproj": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")


# ---------------------------------------------------------------- commands


def cmd_verify(cfg: RunConfig, args) -> int:
    vc = VerifyConfig(
        beta=cfg.beta,
        m_gauss=cfg.m_gauss,
        seed=cfg.seed,
        tol_scale=cfg.tol,
        allow_degenerate=cfg.allow_degenerate,
        grid=cfg.grid,
        quad=OPERATOR_QUAD,
        supplementary=cfg.supplementary,
    )
    results = run_all(vc, list(cfg.only) if cfg.only else None)
    rows = [
        [r.criterion, r.name, r.measured, r.tolerance, r.status, int(r.supplementary), r.detail] for r in results
    ]
    for r in results:
        tag = "  (supplementary)" if r.supplementary else ""
        print(f"[{r.status.upper():8s}] {r.criterion:2d} {r.name}: {r.measured:.3g} vs {r.tolerance:.3g}{tag}",
              file=sys.stderr)
    sign = resolve_correction_sign(cfg.params)
    crits = sorted({r.criterion for r in results})
    meta = {
        "command": "verify",
        "config": cfg.to_dict(),
        "correction_sign": sign,
        "criteria": {str(c): criterion_passed(results, c) for c in crits},
    }
    write_table(args.output, ["criterion", "check", "measured", "tolerance", "status", "supplementary", "detail"],
                rows, meta)
    primary = [r for r in results if not r.supplementary]
    if any(r.status == "fail" for r in primary):
        return EXIT_FAIL
    if any(r.status == "accuracy" for r in primary):
        return EXIT_ACCURACY
    return EXIT_OK


def read_points(path: str) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                return []
            missing = set(POINT_COLUMNS) - set(reader.fieldnames)
            if missing:
                raise UsageError(f"points file lacks columns {sorted(missing)}")
            return [{k: float(row[k]) for k in POINT_COLUMNS} for row in reader]
    except OSError as exc:
        raise UsageError(f"cannot read points file: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"bad number in points file: {exc}") from exc


def cmd_kernel(cfg: RunConfig, args) -> int:
    params = cfg.params
    spec = QuadratureSpec(tol=cfg.quad_tol)
    rows = []
    status_all = EXIT_OK
    for pt in read_points(args.points):
        z = PointC2(complex(pt["z1_re"], pt["z1_im"]), complex(pt["z2_re"], pt["z2_im"]))
        w = PointC2(complex(pt["w1_re"], pt["w1_im"]), complex(pt["w2_re"], pt["w2_im"]))
        base = [pt[k] for k in POINT_COLUMNS]
        if not (in_D_beta(z, params) and in_D_beta(w, params)):
            rows.append(base + [math.nan, math.nan, math.nan, "outside"])
            continue
        try:
            kv = pushforward_kernel(args.kernel_id, z, w, params, spec, j=args.j)
            rows.append(base + [kv.value.real, kv.value.imag, kv.abs_error_estimate, "ok"])
        except AccuracyError as exc:
            p = exc.partial
            v = p.value if p is not None else complex("nan")
            e = p.abs_error_estimate if p is not None else math.inf
            rows.append(base + [v.real, v.imag, e, "accuracy"])
            status_all = EXIT_ACCURACY
    meta = {"command": "kernel", "kernel_id": args.kernel_id, "j": args.j, "config": cfg.to_dict(),
            "quadrature": dataclasses.asdict(spec)}
    write_table(args.output, POINT_COLUMNS + ["value_re", "value_im", "err", "status"], rows, meta)
    return status_all


def cmd_norms(cfg: RunConfig, args) -> int:
    if not cfg.j_list:
        raise UsageError("j_list must be nonempty")
    params = cfg.params
    n_theta = max(cfg.grid.n_theta, 2 * max(abs(j) for j in cfg.j_list) + 2)
    grid_spec = dataclasses.replace(cfg.grid, n_theta=n_theta)
    est = norm_growth_experiment(list(cfg.j_list), params, DPrimeGrid(params, grid_spec), OPERATOR_QUAD,
                                 trials=cfg.trials, seed=cfg.seed)
    rows = [[e.j, e.lower_bound, e.envelope, e.lower_bound / e.envelope, e.trials] for e in est]
    slack = max(e.lower_bound / e.envelope for e in est)
    meta = {"command": "norms", "config": cfg.to_dict(), "grid": dataclasses.asdict(grid_spec), "C_slack": slack}
    write_table(args.output, ["j", "lower_bound", "envelope", "ratio", "trials"], rows, meta)
    return EXIT_OK


def cmd_residues(cfg: RunConfig, args) -> int:
    params = cfg.params
    sign = resolve_correction_sign(params)
    rows = []
    for k in range(1, cfg.k_max + 1):
        try:
            r = residue_report(k, params, sign, y=args.y)
        except PoleError:
            # i k nu_beta is also an integer pole; only reachable with --allow-degenerate
            rows.append([k, k * params.nu_beta] + [math.nan] * 5 + ["degenerate"])
            continue
        rows.append([k, r.pole.imag, r.residue_bergman.real, r.residue_bergman.imag,
                     r.residue_correction.real, r.residue_correction.imag, abs(r.combined), "ok"])
    meta = {"command": "residues", "config": cfg.to_dict(), "correction_sign": sign, "y": args.y}
    header = ["k", "pole_im", "bergman_re", "bergman_im", "correction_re", "correction_im", "combined_abs", "status"]
    write_table(args.output, header, rows, meta)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--output", help="CSV output path (default: stdout, no sidecar)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--allow-degenerate", action="store_true",
                        help="accept beta where the two pole families collide")

    ap = argparse.ArgumentParser(prog="wormproj", description="Kernels and projections on worm domains.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the verification suite")
    pk = sub.add_parser("kernel", parents=[common], help="evaluate a kernel at point pairs of D_beta")
    pk.add_argument("kernel_id", choices=KERNEL_IDS)
    pk.add_argument("points", help=f"CSV with columns {','.join(POINT_COLUMNS)}")
    pk.add_argument("--j", type=int, default=-1, help="mode of the Bergman kernel")
    sub.add_parser("norms", parents=[common], help="lower bounds for ||T_j|| against the envelope")
    pr = sub.add_parser("residues", parents=[common], help="residues at i k nu_beta")
    pr.add_argument("--y", type=float, default=0.0)
    return ap


COMMANDS = {"verify": cmd_verify, "kernel": cmd_kernel, "norms": cmd_norms, "residues": cmd_residues}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"wormproj: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AccuracyError as exc:
        print(f"wormproj: accuracy failure: {exc}", file=sys.stderr)
        return EXIT_ACCURACY


if __name__ == "__main__":
    sys.exit(main())
