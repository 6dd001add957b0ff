"""Command line front end: ``rfb {plan,imm,design,eval,verify,process}``.

Settings come from flags, then from an optional ``key = value`` config file
(``--config``), then from built-in defaults.  Every artifact lands in
``--out-dir``.

Exit codes: 0 success, 2 parse error, 3 invalid partition, 4 failed check,
5 design hit the iteration cap (artifacts still written), 6 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import artifacts
from .bands import BankPlan, PartitionError, plan_bank
from .charfilters import ideal_spectra
from .design import (
    channel_energy,
    make_problem,
    objective,
    optimize,
    stopband_attenuation_db,
    filter_response,
)
from .imm import build_imm_pair, channel_imm_pair, verify_mapping
from .paraunitary import PolyphaseFIR, paraunitarity_error, synthesize
from .runtime import analyze, read_signal, shift_invariance_check, synthesize_signal, write_signal

log = logging.getLogger("rfb")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PARTITION = 3
EXIT_CHECK = 4
EXIT_NOT_CONVERGED = 5
EXIT_IO = 6

COMMANDS = ("plan", "imm", "design", "eval", "verify", "process")

DEFAULTS = {
    "partition": None,
    "epsilon_pi": "1/20",
    "stages": 7,
    "grid": None,
    "restarts": 8,
    "max_iter": 2000,
    "seed": 0,
    "out_dir": ".",
    "input": None,
    "bank": None,
    "format": "csv",
}

# verification samples more densely than the optimizer's inner loop
GRID_DEFAULT = 1024
GRID_VERIFY = 4096

# bank-scale mapping checks are skipped above this many columns to bound memory
BANK_SCALE_LIMIT = 240


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    partition: list[Fraction] | None
    epsilon_pi: Fraction
    stages: int
    grid: int
    restarts: int
    max_iter: int
    seed: int
    out_dir: Path
    input: Path | None
    bank: Path | None
    format: str


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value settings file")
    common.add_argument("--partition", help='band widths in units of pi, e.g. "2/5,1/5,2/5"')
    common.add_argument("--epsilon-pi", dest="epsilon_pi", help="transition bandwidth in units of pi (default 1/20)")
    common.add_argument("--stages", type=int, help="lossless stages K (default 7)")
    common.add_argument("--grid", type=int, help="frequency grid size (default 1024, verify 4096)")
    common.add_argument("--restarts", type=int, help="random restarts (default 8)")
    common.add_argument("--max-iter", dest="max_iter", type=int, help="iterations per restart (default 2000)")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--out-dir", dest="out_dir", type=Path, help="output directory (default .)")
    common.add_argument("--input", type=Path, help="input signal for process")
    common.add_argument("--bank", type=Path, help="theta.json or fir.json of a designed bank")
    common.add_argument("--format", choices=("csv", "f64"), help="signal file format (default csv)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rfb", description="Nonuniform paraunitary filter bank toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "plan": "plan the polyphase matrix for a partition",
        "imm": "write and check the ideal modulation matrices",
        "design": "optimize a paraunitary bank",
        "eval": "write magnitude responses of every characterizing filter",
        "verify": "run the invariant checks and write a report",
        "process": "analyze and resynthesize a signal",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def read_config(path: Path) -> dict:
    text = path.read_text()
    if not text.lstrip().startswith("["):
        text = "[rfb]\n" + text
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from exc
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            key = key.replace("-", "_")
            if key == "epsilon":
                key = "epsilon_pi"
            if key == "gridsize":
                key = "grid"
            if key not in DEFAULTS:
                raise UsageError(f"{path}: unknown setting {key!r}")
            out[key] = value
    return out


def _int(name: str, value) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be an integer, got {value!r}") from None


def _fraction(name: str, value) -> Fraction:
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{name} must be a rational number, got {value!r}") from None


def resolve(args: argparse.Namespace) -> RunConfig:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    partition = None
    if cfg["partition"] is not None:
        items = [s for s in str(cfg["partition"]).split(",") if s.strip()]
        partition = [_fraction("partition", s) for s in items]
    grid = cfg["grid"]
    if grid is None:
        grid = GRID_VERIFY if args.command == "verify" else GRID_DEFAULT
    if cfg["format"] not in ("csv", "f64"):
        raise UsageError(f"format must be csv or f64, got {cfg['format']!r}")
    conf = RunConfig(
        command=args.command,
        partition=partition,
        epsilon_pi=_fraction("epsilon", cfg["epsilon_pi"]),
        stages=_int("stages", cfg["stages"]),
        grid=_int("grid", grid),
        restarts=_int("restarts", cfg["restarts"]),
        max_iter=_int("max_iter", cfg["max_iter"]),
        seed=_int("seed", cfg["seed"]),
        out_dir=Path(cfg["out_dir"]),
        input=None if cfg["input"] is None else Path(cfg["input"]),
        bank=None if cfg["bank"] is None else Path(cfg["bank"]),
        format=cfg["format"],
    )
    if not 0 <= conf.epsilon_pi < Fraction(1, 4):
        raise UsageError("epsilon must satisfy 0 <= epsilon < 1/4 (units of pi)")
    for name in ("stages", "grid", "restarts", "max_iter"):
        if getattr(conf, name) < 1:
            raise UsageError(f"{name} must be positive")
    return conf


def _bank_file(conf: RunConfig) -> Path | None:
    if conf.bank is not None:
        return conf.bank
    default = conf.out_dir / "theta.json"
    return default if default.exists() else None


def _partition(conf: RunConfig, bank_path: Path | None = None) -> list[Fraction]:
    if conf.partition is not None:
        return conf.partition
    if bank_path is not None:
        data = artifacts.read_json(bank_path)
        if "partition" in data:
            return [Fraction(f) for f in data["partition"]]
    raise UsageError("--partition is required")


def cmd_plan(conf: RunConfig) -> int:
    plan = plan_bank(_partition(conf))
    artifacts.write_json(conf.out_dir / "plan.json", plan.to_dict())
    print(f"S={plan.S} rowCounts={list(plan.row_counts)} residueCounts={list(plan.residue_counts)}")
    return EXIT_OK


def cmd_imm(conf: RunConfig) -> int:
    plan = plan_bank(_partition(conf))
    status = EXIT_OK
    summary = []
    for n, ch in enumerate(plan.channels):
        for scale, pair in (("min", build_imm_pair(ch.lo, ch.hi, ch.s_dim)), ("bank", channel_imm_pair(ch))):
            for imm in pair:
                artifacts.write_json(conf.out_dir / f"imm_ch{n}_{scale}_{imm.region.value}.json", imm.to_dict())
        check = verify_mapping(*build_imm_pair(ch.lo, ch.hi, ch.s_dim))
        summary.append({"channel": n, "variant": pair[0].variant.value, "mappingOk": check.ok, "reason": check.reason})
        if not check:
            log.error("channel %d: %s", n, check.reason)
            status = EXIT_CHECK
    artifacts.write_json(conf.out_dir / "imm_summary.json", summary)
    return status


def cmd_design(conf: RunConfig) -> int:
    prob = make_problem(_partition(conf), conf.epsilon_pi, conf.stages, conf.grid, conf.seed)
    theta, trace = optimize(prob, restarts=conf.restarts, max_iter=conf.max_iter)
    H = synthesize(theta)
    meta = {
        "partition": [str(f) for f in prob.plan.fractions],
        "epsilonPi": str(prob.epsilon),
        "K": prob.K,
        "grid": prob.grid.count,
        "seed": prob.seed,
        "restarts": trace.restarts,
        "maxIter": conf.max_iter,
    }
    artifacts.write_json(conf.out_dir / "theta.json", {**meta, "theta": theta.to_dict()})
    artifacts.write_json(conf.out_dir / "fir.json", {**meta, **H.to_dict()})
    artifacts.write_fir_channels(conf.out_dir, H, prob.plan)
    (conf.out_dir / "trace.csv").write_text(trace.to_csv())
    artifacts.write_json(
        conf.out_dir / "design.json",
        {
            **meta,
            "objective": float(objective(theta, prob)),
            "initialObjective": trace.initial_values,
            "finalObjective": trace.final_values,
            "converged": trace.converged,
            "stopReasons": trace.stop_reasons,
            "bestRestart": trace.best_restart,
            "paraunitarityError": paraunitarity_error(H),
        },
    )
    print(f"D={objective(theta, prob)!r} best restart {trace.best_restart}")
    if trace.stop_reasons[trace.best_restart] == "max_iter":
        log.warning("best restart stopped at the iteration cap")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _problem_for_bank(conf: RunConfig, bank_path: Path | None):
    H = None if bank_path is None else artifacts.load_bank(bank_path)
    K = conf.stages if H is None else H.order
    prob = make_problem(_partition(conf, bank_path), conf.epsilon_pi, K, conf.grid, conf.seed)
    if H is None:
        H = PolyphaseFIR.identity(prob.N)
    if H.N != prob.N:
        raise UsageError(f"bank is {H.N}x{H.N} but the partition needs {prob.N}x{prob.N}")
    return prob, H


def cmd_eval(conf: RunConfig) -> int:
    bank_path = _bank_file(conf)
    if bank_path is None:
        raise UsageError("eval needs --bank (or a theta.json in --out-dir)")
    prob, H = _problem_for_bank(conf, bank_path)
    psi = prob.grid.points
    summary = []
    for n, specs in enumerate(prob.specs):
        for i, spec in enumerate(specs):
            mag_db = artifacts.to_db(filter_response(H, prob, n, i))
            ideal = np.where(spec.ideal_pass.contains(psi), 0.0, artifacts.IDEAL_STOP_DB)
            stop = spec.stopband.inner_points(psi)
            rows = [
                (float(w / np.pi), float(m), float(d), str(int(s)))
                for w, m, d, s in zip(psi, mag_db, ideal, stop)
            ]
            artifacts.write_csv(
                conf.out_dir / f"response_ch{n}_d{spec.d}.csv",
                ["omega_pi", "magnitude_db", "ideal_db", "stopband"],
                rows,
            )
            entry = {"channel": n, "d": spec.d, "idealPass": spec.ideal_pass.to_list()}
            if spec.has_passband:
                entry["meanStopbandDb"] = stopband_attenuation_db(H, prob, n, i)
            summary.append(entry)
    artifacts.write_json(conf.out_dir / "eval.json", summary)
    return EXIT_OK


def _check(name: str, ok: bool, **measured) -> dict:
    return {"check": name, "pass": bool(ok), **measured}


def verify_report(prob, H: PolyphaseFIR, seed: int = 0) -> list[dict]:
    plan: BankPlan = prob.plan
    checks = []
    checks.append(_check("plan.rowCounts", sum(plan.row_counts) == plan.S, rowCounts=list(plan.row_counts), S=plan.S))
    for n, ch in enumerate(plan.channels):
        res = verify_mapping(*build_imm_pair(ch.lo, ch.hi, ch.s_dim))
        checks.append(_check(f"imm.mapping.ch{n}", res.ok, reason=res.reason))
        if plan.S <= BANK_SCALE_LIMIT:
            res = verify_mapping(*channel_imm_pair(ch), channel=ch)
            checks.append(_check(f"imm.mapping.bank.ch{n}", res.ok, reason=res.reason))
        specs = ideal_spectra(ch, index=n, strict=False)
        agree = all(s.ideal_pass == s.closed_form for s in specs)
        checks.append(_check(f"charfilters.closedForm.ch{n}", agree))
    err = paraunitarity_error(H)
    checks.append(_check("paraunitary.tapError", err < 1e-12, error=err))

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(40 * plan.S)
    sb = analyze(H, plan, x)
    delay = H.order * plan.S
    xr = synthesize_signal(H, plan, sb).samples
    pr = float(np.abs(xr[delay:delay + x.size] - x).max())
    checks.append(_check("runtime.perfectReconstruction", pr < 1e-9, error=pr, delay=delay))
    ex = float(np.sum(x**2))
    de = abs(sb.energy() - ex) / ex
    checks.append(_check("runtime.energyConservation", de < 1e-9, relativeError=de))
    for n in range(len(plan.channels)):
        dev = shift_invariance_check(H, plan, x, n)
        checks.append(_check(f"runtime.shiftInvariance.ch{n}", dev < 1e-10, error=dev))
    for n in range(len(plan.channels)):
        budget = channel_energy(H, prob, n)
        dev = abs(budget.total - budget.expected_total)
        checks.append(
            _check(
                f"design.energyBudget.ch{n}",
                dev < 1e-6,
                total=budget.total,
                expected=budget.expected_total,
                stopband=budget.stopband,
            )
        )
    D = float(objective(H, prob))
    checks.append(_check("design.objective", np.isfinite(D) and D >= 0, D=D))
    return checks


def cmd_verify(conf: RunConfig) -> int:
    bank_path = _bank_file(conf)
    prob, H = _problem_for_bank(conf, bank_path)
    checks = verify_report(prob, H, conf.seed)
    ok = all(c["pass"] for c in checks)
    artifacts.write_json(conf.out_dir / "verify.json", {"pass": ok, "checks": checks})
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['check']}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_process(conf: RunConfig) -> int:
    if conf.input is None:
        raise UsageError("process needs --input")
    bank_path = _bank_file(conf)
    if bank_path is None:
        raise UsageError("process needs --bank (or a theta.json in --out-dir)")
    H = artifacts.load_bank(bank_path)
    plan = plan_bank(_partition(conf, bank_path))
    if H.N != plan.S:
        raise UsageError(f"bank is {H.N}x{H.N} but the partition needs {plan.S}x{plan.S}")
    try:
        x = read_signal(conf.input, conf.format)
    except ValueError as exc:
        raise artifacts.ArtifactError(f"{conf.input}: {exc}") from exc
    sb = analyze(H, plan, x)
    ext = conf.format
    for n in range(len(plan.channels)):
        write_signal(conf.out_dir / f"channel{n}.{ext}", sb.channel_signal(n), ext)
    xr = synthesize_signal(H, plan, sb).samples
    write_signal(conf.out_dir / f"reconstructed.{ext}", xr, ext)
    delay = H.order * plan.S
    energies = [float(np.sum(p**2)) for p in sb.phases]
    artifacts.write_json(
        conf.out_dir / "process.json",
        {
            "inputLength": x.length,
            "paddedLength": sb.padded_length,
            "delay": delay,
            "channelEnergy": energies,
            "reconstructionError": float(np.abs(xr[delay:delay + x.length] - x.samples).max()),
        },
    )
    if sb.padded_length != x.length:
        print(f"input zero-padded from {x.length} to {sb.padded_length} samples")
    return EXIT_OK


HANDLERS = {
    "plan": cmd_plan,
    "imm": cmd_imm,
    "design": cmd_design,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "process": cmd_process,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        conf = resolve(args)
        conf.out_dir.mkdir(parents=True, exist_ok=True)
        return HANDLERS[conf.command](conf)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PartitionError as exc:
        print(f"invalid partition: {exc}", file=sys.stderr)
        return EXIT_PARTITION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
