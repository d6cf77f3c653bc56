"""Command-line front end: ``cribsr {region,frontier,simulate,duality,example}``.

Exit codes: 0 success, 2 configuration error, 3 infeasible budgets,
4 desk-scale sizing cap exceeded, 5 duality mismatch.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from pathlib import Path

from . import __version__
from .codec_sim import SimConfig, rate_point, simulate
from .config import COMMANDS, RunConfig, dumps
from .errors import ConfigError, CribsrError, DualityMismatch, SizingError
from .mac_dual import (
    MacInstance,
    split_private_system,
    conferencing_duality_check,
    duality_check,
    fm_eliminate,
    mac_from_sr_joint,
)
from .prob_core import CribFunction, expected_distortion
from .region_solver import (
    CribbingMode,
    FrontierSearch,
    U,
    X1,
    bernoulli_example,
    conferencing_region,
    region,
)

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SIZING, EXIT_DUALITY = 0, 2, 3, 4, 5
CSV_HEADER = "mode,D1,D2,R0,R1_min"
FRONTIER_MODES = ("noncausal", "strictly-causal", "no-cribbing")


class Infeasible(Exception):
    """Budgets admit no joint; the partial payload is still written."""

    def __init__(self, message: str, payload: str):
        super().__init__(message)
        self.payload = payload


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.6f}"


def _mode_of(label: str) -> CribbingMode | None:
    return None if label == "no-cribbing" else CribbingMode.parse(label)


def _header(cfg: RunConfig) -> dict:
    return {"version": __version__, "command": cfg.command, "config": cfg.effective()}


def frontier_csv(cfg: RunConfig, frontiers: dict, corners: dict) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for label, pts in frontiers.items():
        for r0, r1 in sorted(pts):
            buf.write(f"{label},{_fmt(cfg.D1)},{_fmt(cfg.D2)},{_fmt(r0)},{_fmt(r1)}\n")
    for name, (r0, r1) in corners.items():
        buf.write(f"corner-{name},{_fmt(cfg.D1)},{_fmt(cfg.D2)},{_fmt(r0)},{_fmt(r1)}\n")
    return buf.getvalue()


def frontier_corners(frontiers: dict) -> dict:
    """Corners A-D read off whichever of the three frontiers are present."""
    out = {}
    nc = frontiers.get("noncausal")
    if nc:
        first = nc[0]
        if first[0] <= 1e-12:
            out["A"] = (0.0, first[1])
    if frontiers.get("strictly-causal"):
        out["B"] = (frontiers["strictly-causal"][0][0], math.inf)
    if frontiers.get("no-cribbing"):
        out["C"] = (frontiers["no-cribbing"][0][0], math.inf)
    if nc and nc[-1][1] == 0.0:
        out["D"] = (nc[-1][0], 0.0)
    return dict(sorted(out.items()))


def _render_frontiers(cfg: RunConfig, frontiers: dict, corners: dict, extra: dict, title: str) -> str:
    if cfg.figure:
        from .figures import frontier_figure

        frontier_figure(frontiers, corners, cfg.figure, title)
    if (cfg.format or "csv") == "csv":
        return frontier_csv(cfg, frontiers, corners)
    payload = _header(cfg)
    payload["frontiers"] = {k: [list(p) for p in v] for k, v in frontiers.items()}
    payload["corners"] = {k: list(v) for k, v in corners.items()}
    payload.update(extra)
    return dumps(payload)


# ---------------------------------------------------------------------------
# subcommands


def cmd_example(cfg: RunConfig) -> str:
    ex = bernoulli_example(cfg.D1, cfg.D2, n_grid=cfg.n_grid)
    frontiers = {k: list(f.points) for k, f in ex.frontiers.items()}
    corners = dict(sorted(ex.corners.items()))
    extra = {"closed_form": {k: list(v) for k, v in ex.closed_form.items()}}
    return _render_frontiers(cfg, frontiers, corners, extra, f"X ~ Bern(1/2), D1={cfg.D1:g}, D2={cfg.D2:g}")


def _search(cfg: RunConfig, label: str):
    src = cfg.source_pmf()
    spec = cfg.distortion()
    search = FrontierSearch(src, spec, _mode_of(label), cfg.crib_variant(), cfg.parameterization())
    return search.run(n_grid=cfg.n_grid, workers=cfg.workers)


def cmd_frontier(cfg: RunConfig) -> str:
    labels = (cfg.mode,) if cfg.mode else FRONTIER_MODES
    frontiers = {label: list(_search(cfg, label).points) for label in labels}
    corners = frontier_corners(frontiers)
    text = _render_frontiers(cfg, frontiers, corners, {}, f"D1={cfg.D1:g}, D2={cfg.D2:g}")
    if not any(frontiers.values()):
        raise Infeasible("no joint meets the distortion budgets", text)
    return text


def cmd_region(cfg: RunConfig) -> str:
    if cfg.format == "csv":
        raise ConfigError("region output is JSON only")
    payload = _header(cfg)
    if cfg.joint is None:
        labels = (cfg.mode,) if cfg.mode else FRONTIER_MODES
        regions = []
        for label in labels:
            f = _search(cfg, label)
            if f.empty:
                payload["regions"] = regions
                raise Infeasible(f"no joint meets the distortion budgets ({label})", dumps(payload))
            zero = next((p for p in f.points if p[1] == 0.0), None)
            regions.append({
                "mode": label,
                "min_r0_point": list(f.points[0]),
                "min_sum_rate_point": list(zero) if zero else None,
            })
        payload["regions"] = regions
        return dumps(payload)
    joint = cfg.target_joint(cfg.cribbing_mode())
    spec = cfg.distortion(joint.size(X1), joint.size("X2"))
    over = [i for i in (1, 2) if expected_distortion(joint, spec, i) > spec.budget(i) + 1e-9]
    if over:
        raise Infeasible(f"joint violates distortion budget(s) of decoder {over}", dumps(payload))
    variant = cfg.crib_variant()
    if cfg.mode:
        labels = (cfg.mode,)
    else:
        labels = ("noncausal", "strictly-causal") + (("causal",) if U in joint else ()) + ("no-cribbing",)
    regions = []
    for label in labels:
        r = region(joint, _mode_of(label), variant)
        regions.append({"mode": label, "sum_rate_lb": r.sum_rate_lb, "r0_lb": r.r0_lb})
    if not cfg.mode:
        c = conferencing_region(joint)
        regions.append({"mode": "conferencing", "sum_rate_lb": c.sum_rate_lb, "r0_plus_r12_lb": c.conf_lb})
    payload["regions"] = regions
    return dumps(payload)


def build_sim_config(cfg: RunConfig) -> SimConfig:
    mode = cfg.cribbing_mode() if cfg.mode else CribbingMode.STRICTLY_CAUSAL
    if mode is None:
        raise ConfigError("simulation needs a cribbing mode")
    joint = cfg.target_joint(mode)
    variant = cfg.crib_variant()
    if (cfg.R0 is None) != (cfg.R1 is None):
        raise ConfigError("give both R0 and R1, or neither to use rate_scale")
    if cfg.R0 is None:
        R0, R1 = rate_point(joint, mode, variant, cfg.rate_scale)
    else:
        R0, R1 = float(cfg.R0), float(cfg.R1)
    blocks = cfg.blocks if cfg.blocks is not None else (1 if mode is CribbingMode.NONCAUSAL else 10)
    spec = cfg.distortion(joint.size(X1), joint.size("X2"))
    return SimConfig(n=cfg.n, B=blocks, R0=R0, R1=R1, joint=joint, spec=spec, mode=mode, variant=variant,
                     eps=cfg.eps, seed=cfg.seed, slack=cfg.slack, policy=cfg.policy, select=cfg.select)


def cmd_simulate(cfg: RunConfig) -> str:
    if cfg.format == "csv":
        raise ConfigError("simulate output is JSON only")
    sim = build_sim_config(cfg)
    report = simulate(sim, cfg.trials, workers=cfg.workers).as_dict()
    if cfg.figure:
        from .figures import block_distortion_figure

        block_distortion_figure(report, cfg.figure)
    payload = _header(cfg)
    payload["report"] = report
    return dumps(payload)


def _mac_instance(cfg: RunConfig, g: CribFunction) -> MacInstance | None:
    if cfg.channel is None:
        return None
    if cfg.inputs is None:
        raise ConfigError("a channel needs its input distribution 'inputs'")
    import numpy as np

    try:
        return MacInstance(np.asarray(cfg.channel, dtype=float), np.asarray(cfg.inputs, dtype=float), g)
    except CribsrError as exc:
        raise ConfigError(f"bad channel instance: {exc}") from None


def cmd_duality(cfg: RunConfig) -> str:
    if cfg.format == "csv":
        raise ConfigError("duality output is JSON only")
    mode = cfg.cribbing_mode()
    if cfg.mode == "no-cribbing":
        raise ConfigError("duality compares cribbing modes; use g constant for the no-cribbing reduction")
    base = cfg.target_joint(mode if mode is not CribbingMode.CAUSAL else CribbingMode.STRICTLY_CAUSAL)
    g = cfg.crib_function() or CribFunction.identity(base.size(X1))
    mac = _mac_instance(cfg, g)
    modes = [mode] if mode else [CribbingMode.NONCAUSAL, CribbingMode.STRICTLY_CAUSAL, CribbingMode.CAUSAL]
    reports = []
    for m in modes:
        if m is CribbingMode.CAUSAL:
            joint = cfg.target_joint(m) if cfg.joint is None else base
            if U not in joint:
                continue
            reports.append(duality_check(joint, None, m, g=g))
        else:
            reports.append(duality_check(base, mac, m, g=g))
    if mode is None:
        if g.is_identity:
            reports.append(conferencing_duality_check(base, mac, cfg.r12))
    system = split_private_system(mac if mac is not None else mac_from_sr_joint(base, g, CribbingMode.NONCAUSAL))
    projected = fm_eliminate(system, ["R1a", "R1b"])
    payload = _header(cfg)
    payload["checks"] = [r.as_dict() for r in reports]
    payload["passed"] = all(r.passed for r in reports)
    payload["fourier_motzkin"] = {
        "system": [str(q) for q in system.inequalities],
        "eliminated": ["R1a", "R1b"],
        "projection": [str(q) for q in projected.inequalities],
        "redundant": [str(q) for q in projected.redundant],
        "transcript": list(projected.transcript),
    }
    text = dumps(payload)
    if not payload["passed"]:
        worst = max(r.discrepancy for r in reports)
        raise DualityMismatch(f"corner mismatch of {worst:.3g} bits", worst, text)
    return text


HANDLERS = {
    "region": cmd_region,
    "frontier": cmd_frontier,
    "simulate": cmd_simulate,
    "duality": cmd_duality,
    "example": cmd_example,
}

HELP = {
    "region": "rate-region bounds for one joint, or the extreme frontier points of a search",
    "frontier": "R1_min(R0) curves per cribbing mode, as CSV or JSON",
    "simulate": "Monte Carlo run of the coding scheme for the configured mode",
    "duality": "compare source-coding and MAC corners; print the elimination transcript",
    "example": "binary source under Hamming loss: three frontiers and corners A-D",
}


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--seed", type=int)
    common.add_argument("--grid-step", type=float, dest="grid_step")
    common.add_argument("--trials", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--blocks", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--mode", choices=("noncausal", "strictly-causal", "causal", "no-cribbing"))
    common.add_argument("--variant", choices=("perfect", "detfn"))
    common.add_argument("--d1", type=float, dest="D1", help="distortion budget of decoder 1")
    common.add_argument("--d2", type=float, dest="D2", help="distortion budget of decoder 2")
    common.add_argument("--workers", type=int, help="threads for sweeps and trials; never changes results")
    common.add_argument("--figure", help="also render a matplotlib figure to this path")
    parser = argparse.ArgumentParser(prog="cribsr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    flags = {k: getattr(args, k) for k in RunConfig.keys() if k != "command" and hasattr(args, k)}
    return cfg.override(command=args.command, **flags)


def _write(cfg: RunConfig | None, text: str) -> None:
    if cfg is not None and cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = None
    try:
        cfg = resolve_config(args)
        _write(cfg, HANDLERS[cfg.command](cfg))
        return EXIT_OK
    except Infeasible as exc:
        _write(cfg, exc.payload)
        print(f"cribsr: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SizingError as exc:
        print(f"cribsr: sizing: {exc}", file=sys.stderr)
        print(dumps({"sizing_report": exc.report}), file=sys.stderr, end="")
        return EXIT_SIZING
    except DualityMismatch as exc:
        if exc.payload:
            _write(cfg, exc.payload)
        print(f"cribsr: duality mismatch: {exc}", file=sys.stderr)
        return EXIT_DUALITY
    except (ConfigError, CribsrError, ValueError) as exc:
        print(f"cribsr: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
