"""Command line entry point: ``carleman-jump {analyze,weights,verify,partition}``.

Exit codes: 0 pass or certified, 2 a detected violation, 1 an input error,
64 a usage error (unknown subcommand or bad flags).
"""

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .analysis import analyze, auto_weights, weights_summary
from .carleman_harness import ESTIMATES, field_for_estimate, interior_check, tau_sweep
from .coefficients import pair_from_config, perturbed_pair, validate
from .errors import CarlemanError, InvalidInputError, OverflowBudgetError
from .grid_fields import FAMILIES
from .partition_of_unity import audit, build_partition

log = logging.getLogger("carleman_jump")

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2, 64


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class JumpSpec(_Model):
    h0_amp: float = 0.0
    h1_amp: float = 0.0


class GridConfig(_Model):
    rho: Optional[float] = Field(default=None, gt=0)
    h: float = Field(default=1 / 64, gt=0)
    family: str = "bump_poly"
    jump: JumpSpec = JumpSpec()


class SweepConfig(_Model):
    estimate: Literal["frozen", "vertical", "full", "interior"] = "frozen"
    tau_min: float = Field(default=20.0, gt=0)
    tau_max: float = Field(default=200.0, gt=0)
    points: int = Field(default=10, ge=1)
    r0: float = Field(default=0.5, gt=0)
    perturbation: float = Field(default=0.0, ge=0, lt=1)


class SamplingConfig(_Model):
    sphere: int = Field(default=2048, ge=16)
    null: int = Field(default=2048, ge=16)
    certify: int = Field(default=4096, ge=16)


class PartitionConfig(_Model):
    mu: float = Field(default=4.0, ge=1)
    d: int = Field(default=2, ge=1, le=3)
    nodes: int = Field(default=10_000, ge=16)


class WeightOverrides(_Model):
    alpha_plus: Optional[float] = Field(default=None, gt=0)
    alpha_minus: Optional[float] = Field(default=None, gt=0)
    beta: Optional[float] = Field(default=None, gt=0)
    epsilon: Optional[float] = Field(default=None, gt=0)
    delta: Optional[float] = Field(default=None, gt=0, le=1)


class RunConfig(_Model):
    coefficients: dict
    weights: WeightOverrides = WeightOverrides()
    grid: GridConfig = GridConfig()
    sweep: SweepConfig = SweepConfig()
    sampling: SamplingConfig = SamplingConfig()
    partition: PartitionConfig = PartitionConfig()
    out: str = "carleman_out"
    seed: int = 0


def load_config(path) -> RunConfig:
    """Read a JSON config. A bare coefficient block (with "plus"/"minus" at
    top level) is accepted as shorthand for {"coefficients": ...}."""
    if path is None:
        raise InvalidInputError("--config is required")
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InvalidInputError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InvalidInputError("config must be a JSON object")
    if "coefficients" not in raw and "n" in raw:
        raw = {"coefficients": raw}
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise InvalidInputError(f"config does not validate:\n{exc}") from None


def apply_flags(cfg: RunConfig, args) -> RunConfig:
    upd = {}
    sweep = {}
    for flag, key in (("tau_min", "tau_min"), ("tau_max", "tau_max"), ("tau_points", "points"),
                      ("estimate", "estimate")):
        v = getattr(args, flag, None)
        if v is not None:
            sweep[key] = v
    if sweep:
        upd["sweep"] = cfg.sweep.model_copy(update=sweep)
    if args.grid_h is not None:
        upd["grid"] = cfg.grid.model_copy(update={"h": args.grid_h})
    if args.sphere_samples is not None:
        upd["sampling"] = cfg.sampling.model_copy(update={"sphere": args.sphere_samples})
    if args.seed is not None:
        upd["seed"] = args.seed
    if args.out is not None:
        upd["out"] = args.out
    cfg = cfg.model_copy(update=upd)
    # re-validate so flag values obey the same constraints as config values
    try:
        return RunConfig.model_validate(cfg.model_dump())
    except ValidationError as exc:
        raise InvalidInputError(f"invalid flag value:\n{exc}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, payload):
    """Deterministic JSON: sorted keys, fixed indent, timestamp kept apart."""
    doc = dict(_jsonable(payload))
    doc["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _context(cfg: RunConfig, command):
    return {"command": command, "version": __version__, "seed": cfg.seed,
            "config": cfg.model_dump()}


def _valid_pair(cfg):
    pair = pair_from_config(cfg.coefficients)
    val = validate(pair)
    if not val.passed:
        raise InvalidInputError("coefficients fail validation: " + "; ".join(val.messages))
    return pair


def _weights(cfg, pair):
    return auto_weights(pair, cfg.sampling.sphere, cfg.weights.model_dump())


def cmd_analyze(cfg: RunConfig, out: Path):
    pair = pair_from_config(cfg.coefficients)
    report, violations = analyze(pair, None, cfg.sampling.sphere, cfg.sampling.null,
                                 cfg.sampling.certify, cfg.seed, cfg.weights.model_dump())
    report["context"] = _context(cfg, "analyze")
    write_json(out / "analyze.json", report)
    w = report.get("weights", {})
    print(f"analyze: certified={report['certified']} gamma={pair.gamma:g} "
          f"gamma0={report['derived']['gamma0']:.6g} ratio={w.get('ratio', float('nan')):.6g} "
          f"epsilon={w.get('epsilon', float('nan')):g}")
    for v in violations[:10]:
        msg = v.get("message") or "; ".join(v.get("messages", []))
        print(f"  violation: {v.get('kind')}: {msg}")
    return EXIT_OK if report["certified"] else EXIT_VIOLATION


def cmd_weights(cfg: RunConfig, out: Path):
    pair = _valid_pair(cfg)
    weights = _weights(cfg, pair)
    summary = weights_summary(pair, weights)
    summary["context"] = _context(cfg, "weights")
    write_json(out / "weights.json", {"weights": summary})
    print("weights: " + " ".join(f"{k}={summary[k]:.6g}" for k in
                                 ("alpha_plus", "alpha_minus", "beta", "epsilon", "delta", "gamma0")))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path):
    pair = _valid_pair(cfg)
    weights = _weights(cfg, pair)
    sw = cfg.sweep
    if sw.perturbation > 0:
        pair = perturbed_pair(pair, sw.perturbation)
    family = cfg.grid.family
    if family not in FAMILIES:
        raise InvalidInputError(f"unknown field family {family!r}; expected one of {FAMILIES}")
    if sw.estimate == "interior":
        family = "away"
    field, warnings = field_for_estimate(
        sw.estimate, weights, sw.r0, cfg.grid.h, cfg.grid.rho, n=pair.n, family=family,
        h0_amp=cfg.grid.jump.h0_amp, h1_amp=cfg.grid.jump.h1_amp, pair=pair)
    rng = (sw.tau_min, sw.tau_max)
    if sw.estimate == "interior":
        rep = interior_check(field, pair, weights, rng, sw.points, sw.r0)
    else:
        rep = tau_sweep(sw.estimate, field, pair, weights, rng, sw.points, sw.r0)
    rep.warnings.extend(warnings)
    doc = rep.to_dict()
    doc["context"] = _context(cfg, "verify")
    write_json(out / "verify.json", doc)
    rep.write_csv(out / "verify.csv")
    print(f"verify[{rep.estimate_id}]: bounded={rep.bounded} max_R={rep.max_ratio:.6g} "
          f"at tau={rep.argmax_tau:.4g} knee={rep.knee_tau:.4g} h={field.h:g}")
    for w in rep.warnings:
        print(f"  warning: {w}")
    return EXIT_OK if rep.bounded else EXIT_VIOLATION


def cmd_partition(cfg: RunConfig, out: Path):
    pc = cfg.partition
    part = build_partition(pc.mu, pc.d)
    a = audit(part, pc.nodes)
    doc = a.to_dict()
    doc["context"] = _context(cfg, "partition")
    write_json(out / "partition.json", doc)
    with open(out / "partition.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["quantity", "k", "value"])
        wr.writerow(["sum_deviation", "", a.sum_deviation])
        wr.writerow(["support_violation", "", a.support_violation])
        wr.writerow(["theta_bar_min", "", a.theta_bar_min])
        wr.writerow(["overlap", "", a.overlap])
        wr.writerow(["plateau_gradient", "", a.plateau_gradient])
        for name in ("C1", "C2", "C3"):
            for k, v in enumerate(getattr(a, name)):
                wr.writerow([name, k, v])
    ok = a.sum_deviation <= 1e-12 and a.overlap == 5 ** pc.d and a.support_violation == 0.0
    print(f"partition: mu={pc.mu:g} d={pc.d} sum_dev={a.sum_deviation:.3e} "
          f"overlap={a.overlap} constants={a.constants}")
    return EXIT_OK if ok else EXIT_VIOLATION


COMMANDS = {"analyze": cmd_analyze, "weights": cmd_weights, "verify": cmd_verify,
            "partition": cmd_partition}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tau-min", type=float)
    common.add_argument("--tau-max", type=float)
    common.add_argument("--tau-points", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--grid-h", type=float)
    common.add_argument("--sphere-samples", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    p = _Parser(prog="carleman-jump", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "verify":
            sp.add_argument("--estimate", choices=ESTIMATES)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_flags(load_config(args.config), args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except OverflowBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CarlemanError as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
