"""Command-line front end: run one adaptive experiment or a whole sweep.

Examples
--------
    cfiebem --preset circle-cfie-dir-kO-ada --output run.csv
    cfiebem --geometry lshape --formulation cfie-ind --k 72.83 --theta 1
    cfiebem --sweep circle-critical --formulation cfie-dir --outdir data
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .adaptive import AdaptiveConfig, AdaptiveError, RunRecord, adaptive_loop, fit_rate
from .experiments import (
    FAMILIES,
    ExperimentError,
    ExperimentPreset,
    family_presets,
    find_preset,
    resonant_wavenumbers,
)
from .formulations import ALIASES, FormulationError, SingularSystemError, formulation_kind, is_direct, is_mixed

log = logging.getLogger("cfiebem")

HEADER = ("N_vec", "err_vec", "est_vec", "est2_vec")
SLOPE_WINDOW = 10.0  # trailing decade in N


@dataclass(frozen=True)
class CliConfig:
    geometry: str = "circle"
    formulation: str = "cfie-dir"
    k: Optional[float] = None
    theta: float = 0.9
    alpha: float = 1.0
    max_elements: int = 1200
    quad_order: int = 16
    est_quad_order: int = 8
    output: Optional[str] = None
    preset: Optional[str] = None

    def resolve(self) -> ExperimentPreset:
        """Preset named by ``preset`` or one built from the flags."""
        if self.preset:
            p = find_preset(self.preset)
            return ExperimentPreset(p.name, p.family, p.geometry_kind, p.k, p.formulation, p.theta, p.tag,
                                    self.alpha)
        k = resonant_wavenumbers(self.geometry) if self.k is None else float(self.k)
        if not (math.isfinite(k) and k > 0):
            raise ExperimentError("k must be positive")
        kind = formulation_kind(self.formulation)
        return ExperimentPreset("custom", "custom", self.geometry, k, kind, self.theta, "k", self.alpha)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return "%.12e" % v


def record_rows(record: RunRecord) -> List[List[str]]:
    rows = []
    for r in record.levels:
        err = r.error if is_direct(record.formulation) else None
        eta2 = r.eta2 if is_mixed(record.formulation) else None
        rows.append([str(r.n_elements), _fmt(err), _fmt(r.eta), _fmt(eta2)])
    return rows


def write_csv(record: RunRecord, path: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(record_rows(record))


def read_csv(path: str) -> dict:
    """Columns of an emitted file; empty cells become NaN."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != HEADER:
        raise ValueError(f"{path}: unexpected header")
    out = {h: [] for h in HEADER}
    for row in rows[1:]:
        for h, cell in zip(HEADER, row):
            out[h].append(float(cell) if cell else math.nan)
    res = {h: np.array(v, dtype=float) for h, v in out.items()}
    res["N_vec"] = res["N_vec"].astype(int)
    return res


def slopes(columns: dict) -> dict:
    """Fitted slope per populated column, over the trailing decade of N.

    Falls back to all levels when the trailing decade holds too few points.
    """
    N = np.asarray(columns["N_vec"], dtype=float)
    out = {}
    for name in ("err_vec", "est_vec", "est2_vec"):
        y = np.asarray(columns[name], dtype=float)
        if not np.any(np.isfinite(y)):
            continue
        try:
            out[name] = fit_rate((N, y), window=SLOPE_WINDOW)
        except AdaptiveError:
            try:
                out[name] = fit_rate((N, y), window=1.0, min_points=2)
            except AdaptiveError:
                out[name] = math.nan
    return out


def run(config: CliConfig, stream=None) -> RunRecord:
    """Run one adaptive experiment, write its CSV and print slopes."""
    stream = stream or sys.stdout
    preset = config.resolve()
    acfg = AdaptiveConfig(preset.theta, preset.formulation, config.max_elements, None,
                          config.quad_order, config.est_quad_order)
    log.info("running %s: %s on %s, k=%r, theta=%g", preset.name, preset.formulation,
             preset.geometry_kind, preset.k, preset.theta)
    record = adaptive_loop(preset.geometry, preset.data, acfg)
    path = config.output or preset.file_name()
    write_csv(record, path)
    print(f"wrote {path} ({len(record.levels)} levels, final N={record.levels[-1].n_elements})", file=stream)
    for name, s in slopes(read_csv(path)).items():
        print(f"slope {name}: {s:.4f}", file=stream)
    return record


def sweep(family: str, outdir: str, formulation: Optional[str] = None, base: CliConfig | None = None,
          stream=None) -> List[str]:
    """One CSV per preset of ``family`` (optionally one formulation only)."""
    base = base or CliConfig()
    presets = family_presets(family, formulation)
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for p in presets:
        path = os.path.join(outdir, p.file_name())
        cfg = CliConfig(alpha=base.alpha, max_elements=base.max_elements, quad_order=base.quad_order,
                        est_quad_order=base.est_quad_order, output=path, preset=p.name)
        try:
            run(cfg, stream)
        except SingularSystemError as exc:
            log.error("%s: %s", p.name, exc)
            continue
        paths.append(path)
    return paths


def _theta(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid theta {text!r}") from None
    if not (0.0 < v <= 1.0):
        raise argparse.ArgumentTypeError("theta must lie in (0, 1]")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cfiebem", description="Adaptive BEM for the exterior Helmholtz "
                                 "Dirichlet problem; writes N_vec,err_vec,est_vec,est2_vec CSV data.")
    ap.add_argument("--geometry", choices=("circle", "lshape"), default="circle")
    ap.add_argument("--formulation", choices=tuple(ALIASES), default=None,
                    help="default cfie-dir; with --sweep restricts the sweep to one formulation")
    ap.add_argument("--k", type=_positive_float, default=None,
                    help="wavenumber (default: the resonant wavenumber of the geometry)")
    ap.add_argument("--theta", type=_theta, default=0.9, help="Doerfler parameter, 1 = uniform")
    ap.add_argument("--alpha", type=_positive_float, default=1.0)
    ap.add_argument("--max-elements", type=_positive_int, default=1200)
    ap.add_argument("--quad-order", type=_positive_int, default=16)
    ap.add_argument("--est-quad-order", type=_positive_int, default=8)
    ap.add_argument("--output", default=None, help="CSV path (default: data-file name of the run)")
    ap.add_argument("--preset", default=None, help="named preset, e.g. circle-cfie-dir-kO-ada")
    ap.add_argument("--sweep", choices=FAMILIES, default=None, help="run every preset of a family")
    ap.add_argument("--outdir", default=".", help="directory for sweep output")
    ap.add_argument("--list-presets", action="store_true")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="-v warnings, -vv progress")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    level = (logging.ERROR, logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 3)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.verbose == 0:
        warnings.simplefilter("ignore")
    if args.list_presets:
        from .experiments import preset_catalog
        for p in preset_catalog():
            print(p.name)
        return 0
    base = CliConfig(args.geometry, args.formulation or "cfie-dir", args.k, args.theta, args.alpha,
                     args.max_elements, args.quad_order, args.est_quad_order, args.output, args.preset)
    try:
        if args.sweep:
            paths = sweep(args.sweep, args.outdir, args.formulation, base)
            print(f"{len(paths)} files written to {args.outdir}")
        else:
            run(base)
    except (ExperimentError, FormulationError, AdaptiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SingularSystemError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
