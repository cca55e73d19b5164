"""Command-line entry point.

Every output embeds the resolved configuration and its hash; nothing in a
result body depends on wall-clock time or worker count.  Failures print a
JSON error object to stderr and exit with status 2.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .complex import ComplexError
from .decoder import decode, decode_error
from .lattices import FAMILIES, LatticeSpec, build
from .montecarlo import (CurvePoint, FailureCurve, FitError, estimate_curve, find_threshold,
                         fit_sustainable)
from .sweep import RULES, SweepConfig, trace

CSV_COLUMNS = ["lattice", "L", "p", "N_cyc", "trials", "failures", "wilson_low", "wilson_high",
               "seed", "config_hash"]


class ConfigError(ValueError):
    """Configuration file or flag failed validation."""


# -- configuration -------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Resolved experiment plan (see repro/*.toml for the file layout)."""

    family: str
    sizes: list
    k: int = 2
    sweep_direction: list | None = None
    ps: list = field(default_factory=list)
    n_cyc: list = field(default_factory=lambda: [1])
    p_meas_factor: float = 1.0
    sweeps_per_cycle: int = 1
    rule: str = "greedy"
    trials: int = 100
    seed: int = 0
    workers: int | None = None
    tmax: int | None = None
    window: list | None = None
    bootstrap: int = 200

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"lattice.family must be one of {FAMILIES}")
        if not self.sizes or any(int(L) < 2 for L in self.sizes):
            raise ConfigError("lattice.sizes must be a non-empty list of integers >= 2")
        if self.trials < 1:
            raise ConfigError("montecarlo.trials must be at least 1")
        if not self.ps:
            raise ConfigError("noise grid is empty")
        if any(not 0 <= p <= 1 for p in self.ps):
            raise ConfigError("noise probabilities must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.ps, self.ps[1:])):
            raise ConfigError("noise grid must be strictly increasing")
        if not self.n_cyc or any(int(n) < 1 for n in self.n_cyc):
            raise ConfigError("noise.n_cyc entries must be at least 1")
        if self.rule not in RULES:
            raise ConfigError(f"sweep.rule must be one of {RULES}")
        if self.sweeps_per_cycle < 1:
            raise ConfigError("noise.sweeps_per_cycle must be at least 1")
        if self.window is not None and len(self.window) != 2:
            raise ConfigError("fit.window must be [low, high]")

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {"lattice", "noise", "sweep", "montecarlo", "fit"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config sections: {sorted(extra)}")
        lat = data.get("lattice", {})
        noise = data.get("noise", {})
        mc = data.get("montecarlo", {})
        fit = data.get("fit", {})
        if "p" in noise:
            ps = [float(x) for x in noise["p"]]
        elif {"p_min", "p_max", "p_step"} <= set(noise):
            count = int(round((noise["p_max"] - noise["p_min"]) / noise["p_step"])) + 1
            ps = [round(noise["p_min"] + i * noise["p_step"], 10) for i in range(count)]
        else:
            raise ConfigError("noise needs either p = [...] or p_min/p_max/p_step")
        try:
            return cls(family=lat["family"], sizes=[int(x) for x in lat["sizes"]], k=int(lat.get("k", 2)),
                       sweep_direction=lat.get("sweep_direction"), ps=ps,
                       n_cyc=[int(x) for x in noise.get("n_cyc", [1])],
                       p_meas_factor=float(noise.get("p_meas_factor", 1.0)),
                       sweeps_per_cycle=int(noise.get("sweeps_per_cycle", 1)),
                       rule=data.get("sweep", {}).get("rule", "greedy"),
                       trials=int(mc.get("trials", 100)), seed=int(mc.get("seed", 0)),
                       workers=mc.get("workers"), tmax=mc.get("tmax"),
                       window=fit.get("window"), bootstrap=int(fit.get("bootstrap", 200)))
        except KeyError as exc:
            raise ConfigError(f"missing required key {exc}") from None

    def resolved(self) -> dict:
        """Everything that affects results (worker count deliberately excluded)."""
        return {"lattice": {"family": self.family, "sizes": self.sizes, "k": self.k,
                            "sweep_direction": self.sweep_direction},
                "noise": {"p": self.ps, "n_cyc": self.n_cyc, "p_meas_factor": self.p_meas_factor,
                          "sweeps_per_cycle": self.sweeps_per_cycle},
                "sweep": {"rule": self.rule},
                "montecarlo": {"trials": self.trials, "seed": self.seed, "tmax": self.tmax},
                "fit": {"window": self.window, "bootstrap": self.bootstrap}}


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path: str) -> RunConfig:
    import tomli

    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return RunConfig.from_mapping(data)


# -- I/O helpers -----------------------------------------------------------------------------

def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _envelope(kind: str, config: dict, body: dict) -> dict:
    return {"kind": kind, "version": __version__, "config": config,
            "config_hash": config_hash(config), **body}


def _lattice_from_file(path: str):
    data = json.loads(Path(path).read_text())
    spec_d = data.get("spec")
    if spec_d is None:
        raise ConfigError("lattice file has no 'spec' section (write it with `lattice build`)")
    spec = LatticeSpec(spec_d["family"], int(spec_d["size"]), int(spec_d.get("k", 2)),
                       tuple(spec_d["sweep_direction"]) if spec_d.get("sweep_direction") else None)
    lat = build(spec)
    stored = data.get("complex", {}).get("counts")
    if stored is not None and list(stored) != list(lat.complex.counts):
        raise ConfigError("stored complex does not match the rebuilt lattice")
    return lat


def _cells_from_file(path: str, key: str) -> list[int]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get(key, data.get("cells"))
    if not isinstance(data, list):
        raise ConfigError(f"expected a list of cell indices under '{key}'")
    return [int(x) for x in data]


def _bits(cells, size) -> np.ndarray:
    b = np.zeros(size, dtype=np.uint8)
    for c in cells:
        if not 0 <= c < size:
            raise ConfigError(f"cell index {c} out of range 0..{size - 1}")
        b[c] ^= 1
    return b


def curves_to_csv(curves, seed, chash) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for c in curves:
        for row in c.rows(seed):
            row["config_hash"] = chash
            row["p"] = repr(float(row["p"]))
            row["wilson_low"] = f"{row['wilson_low']:.10g}"
            row["wilson_high"] = f"{row['wilson_high']:.10g}"
            w.writerow(row)
    return buf.getvalue()


def curves_from_csv(text: str) -> list[FailureCurve]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ConfigError("no rows in curve file")
    missing = set(CSV_COLUMNS[:6]) - set(rows[0])
    if missing:
        raise ConfigError(f"curve file lacks columns {sorted(missing)}")
    groups: dict = {}
    for r in rows:
        key = (r["lattice"], int(r["L"]), int(r["N_cyc"]))
        groups.setdefault(key, []).append(CurvePoint(float(r["p"]), int(r["trials"]), int(r["failures"])))
    return [FailureCurve(f, L, n, sorted(pts, key=lambda q: q.p)) for (f, L, n), pts in sorted(groups.items())]


# -- subcommands ------------------------------------------------------------------------------

def cmd_lattice_build(args):
    spec = LatticeSpec(args.family, args.size, args.k, tuple(args.direction) if args.direction else None)
    lat = build(spec)
    config = spec.to_dict()
    body = {"spec": config, "counts": list(lat.complex.counts),
            "vertex_classes": len(lat.structure.rules),
            "complex": lat.complex.to_dict()}
    _write_text(args.out, _dump_json(_envelope("lattice", config, body)))


def cmd_sweep_trace(args):
    lat = _lattice_from_file(args.lattice)
    err = _bits(_cells_from_file(args.error, "error"), lat.num_qubits)
    cfg = SweepConfig(rule=args.rule)
    steps = trace(lat, lat.syndrome_of(err), cfg, args.max_steps)
    config = {"lattice": lat.spec.to_dict(), "rule": args.rule, "max_steps": args.max_steps,
              "error": np.flatnonzero(err).tolist()}
    _write_text(args.out, _dump_json(_envelope("trace", config, {"trace": steps})))


def cmd_decode(args):
    lat = _lattice_from_file(args.lattice)
    cfg = SweepConfig(rule=args.rule)
    config = {"lattice": lat.spec.to_dict(), "rule": args.rule, "tmax": args.tmax}
    if args.error:
        err = _bits(_cells_from_file(args.error, "error"), lat.num_qubits)
        out = decode_error(lat, err, cfg, args.tmax)
        config["error"] = np.flatnonzero(err).tolist()
    else:
        syn = _bits(_cells_from_file(args.syndrome, "syndrome"), lat.num_checks)
        out = decode(lat, syn, cfg, args.tmax)
        config["syndrome"] = np.flatnonzero(syn).tolist()
    _write_text(args.out, _dump_json(_envelope("decode", config, {"outcome": out.to_dict()})))


def run_scan(cfg: RunConfig) -> list[FailureCurve]:
    curves = []
    sc = SweepConfig(rule=cfg.rule)
    for n_idx, n in enumerate(cfg.n_cyc):
        for L_idx, L in enumerate(cfg.sizes):
            spec = LatticeSpec(cfg.family, L, cfg.k,
                               tuple(cfg.sweep_direction) if cfg.sweep_direction else None)
            curves.append(estimate_curve(spec, cfg.ps, n, cfg.trials, cfg.seed, sc, L_idx=L_idx,
                                         n_idx=n_idx, p_meas_factor=cfg.p_meas_factor,
                                         sweeps_per_cycle=cfg.sweeps_per_cycle, tmax=cfg.tmax,
                                         workers=cfg.workers))
    return curves


def _scan_command(args, override: bool):
    cfg = load_config(args.config)
    if override:
        if args.trials is not None:
            cfg.trials = args.trials
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.__post_init__()
    if args.workers is not None:
        cfg.workers = args.workers
    resolved = cfg.resolved()
    _write_text(args.out, curves_to_csv(run_scan(cfg), cfg.seed, config_hash(resolved)))
    if args.out and args.out != "-":
        # the CSV carries the hash; the full resolved config sits next to it
        _write_text(args.out + ".meta.json", _dump_json(_envelope("scan", resolved, {"columns": CSV_COLUMNS})))


def cmd_memory_run(args):
    _scan_command(args, override=True)


def cmd_threshold_scan(args):
    _scan_command(args, override=True)


def cmd_threshold_fit(args):
    curves = curves_from_csv(Path(args.inp).read_text())
    window = tuple(args.window) if args.window else None
    groups: dict = {}
    for c in curves:
        groups.setdefault((c.family, c.n_cyc), []).append(c)
    results = []
    for (fam, n), cs in sorted(groups.items()):
        est = find_threshold(cs, window=window, n_boot=args.bootstrap, seed=args.seed)
        results.append({"lattice": fam, "N_cyc": n, "sizes": [c.L for c in cs], **est.to_dict()})
    config = {"input": Path(args.inp).name, "window": list(window) if window else None,
              "bootstrap": args.bootstrap, "seed": args.seed}
    _write_text(args.out, _dump_json(_envelope("threshold", config, {"estimates": results})))
    if args.thresholds_out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lattice", "N_cyc", "p_th", "p_th_err"])
        for r in results:
            w.writerow([r["lattice"], r["N_cyc"], repr(r["p_th"]), repr(r["p_th_err"])])
        _write_text(args.thresholds_out, buf.getvalue())


def cmd_sustainable_fit(args):
    rows = list(csv.DictReader(io.StringIO(Path(args.inp).read_text())))
    if not rows or not {"N_cyc", "p_th"} <= set(rows[0]):
        raise ConfigError("threshold file needs N_cyc and p_th columns")
    pts = [(float(r["N_cyc"]), float(r["p_th"])) for r in rows]
    errs = None
    if "p_th_err" in rows[0] and all(r["p_th_err"] not in ("", "nan") for r in rows):
        errs = [float(r["p_th_err"]) for r in rows]
    fit = fit_sustainable(pts, errs, cofit_p1=args.cofit, n_boot=args.bootstrap, seed=args.seed)
    config = {"input": Path(args.inp).name, "cofit_p1": args.cofit, "bootstrap": args.bootstrap,
              "seed": args.seed}
    _write_text(args.out, _dump_json(_envelope("sustainable", config, {"fit": fit.to_dict()})))


def cmd_verify_lattice(args):
    from .verify import check_causal_conditions

    lat = build(LatticeSpec(args.family, args.size, args.k))
    rep = check_causal_conditions(lat, budget=args.budget, seed=args.seed, exhaustive=args.exhaustive)
    config = {"lattice": lat.spec.to_dict(), "budget": args.budget, "seed": args.seed,
              "exhaustive": args.exhaustive}
    body = {"report": rep.to_dict(), "constants_used": vars(lat.constants)}
    _write_text(args.out, _dump_json(_envelope("verify-lattice", config, body)))
    return 0 if rep.ok else 1


def cmd_verify_lemmas(args):
    from .verify import check_sweep_invariants, sample_local_error

    lat = build(LatticeSpec(args.family, args.size))
    rng = np.random.default_rng(args.seed)
    counts = {"support": 0, "propagation": 0, "removal": 0, "monotone": 0}
    witnesses = []
    for i in range(args.trials):
        err = sample_local_error(lat, args.p, args.radius, rng)
        rep = check_sweep_invariants(lat, lat.syndrome_of(err), SweepConfig(rule=args.rule))
        for key in counts:
            if not getattr(rep, key):
                counts[key] += 1
                if len(witnesses) < 10:
                    witnesses.append({"trial": i, "property": key, "error": np.flatnonzero(err).tolist()})
    config = {"lattice": lat.spec.to_dict(), "trials": args.trials, "seed": args.seed, "p": args.p,
              "radius": args.radius, "rule": args.rule}
    body = {"violations": counts, "witnesses": witnesses}
    _write_text(args.out, _dump_json(_envelope("verify-lemmas", config, body)))
    return 0 if not any(counts.values()) else 1


# -- parser ---------------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sweepca", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="group", required=True)

    g = sub.add_parser("lattice").add_subparsers(dest="action", required=True)
    p = g.add_parser("build", help="build a lattice and export it as JSON")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--size", required=True, type=int)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--direction", type=float, nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lattice_build)

    g = sub.add_parser("sweep").add_subparsers(dest="action", required=True)
    p = g.add_parser("trace", help="record the automaton's evolution from an error")
    p.add_argument("--lattice", required=True)
    p.add_argument("--error", required=True)
    p.add_argument("--rule", choices=RULES, default="greedy")
    p.add_argument("--max-steps", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_trace)

    p = sub.add_parser("decode", help="decode a syndrome (or the syndrome of a given error)")
    p.add_argument("--lattice", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--syndrome")
    src.add_argument("--error")
    p.add_argument("--rule", choices=RULES, default="greedy")
    p.add_argument("--tmax", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decode)

    def scan_args(p, func):
        p.add_argument("--config", required=True)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int, help="process count (default: $SWEEPCA_WORKERS or 1)")
        p.add_argument("--out")
        p.set_defaults(func=func)

    g = sub.add_parser("memory").add_subparsers(dest="action", required=True)
    scan_args(g.add_parser("run", help="memory experiment over the configured grid"), cmd_memory_run)

    g = sub.add_parser("threshold").add_subparsers(dest="action", required=True)
    scan_args(g.add_parser("scan", help="failure curves for a threshold fit"), cmd_threshold_scan)
    p = g.add_parser("fit", help="finite-size-scaling fit of stored curves")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out")
    p.add_argument("--window", type=float, nargs=2)
    p.add_argument("--bootstrap", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--thresholds-out")
    p.set_defaults(func=cmd_threshold_fit)

    g = sub.add_parser("sustainable").add_subparsers(dest="action", required=True)
    p = g.add_parser("fit", help="fit the sustainable-threshold ansatz")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out")
    p.add_argument("--cofit", action="store_true", help="also fit p_th(1)")
    p.add_argument("--bootstrap", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sustainable_fit)

    g = sub.add_parser("verify").add_subparsers(dest="action", required=True)
    p = g.add_parser("lattice", help="check causal conditions and estimate constants")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--size", required=True, type=int)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_lattice)
    p = g.add_parser("lemmas", help="test the sweep-rule invariants on random local errors")
    p.add_argument("--family", choices=FAMILIES, default="bcc3d")
    p.add_argument("--size", type=int, default=8)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.01)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--rule", choices=RULES, default="sweep")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_lemmas)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except (ConfigError, FitError, ComplexError, ValueError, OSError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        sys.stderr.write(json.dumps({"error": code, "message": str(exc)}) + "\n")
        return 2
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
