"""Command-line front end: ``ctseir {rates,check,simulate,sweep,validate}``.

Exit codes: 0 success (``check``: controlled), 2 ``check``: uncontrolled,
1 any error.  Errors print one line ``error: <Kind>: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .checks import run_suite
from .seir import EpidemicParams, initial_state, integrate
from .stability import stability_report
from .stochastic import integer_state, run_ensemble
from .sweep import (
    alert_probability_curve,
    boundary_curve,
    controllability_grid,
    write_alert_csv,
    write_boundary_csv,
    write_grid_csv,
)
from .tracing import removal_rates

EXIT_OK, EXIT_ERROR, EXIT_UNCONTROLLED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _version() -> str:
    try:
        return version("ctseir")
    except PackageNotFoundError:
        return "unknown"


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML or JSON run configuration")
    common.add_argument("--out", help="output directory (created if missing)")
    common.add_argument("--mode", choices=["exact", "normal-approx"], help="timeline algebra mode")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="ctseir", description="SEIR with digital contact tracing")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    point = _Parser(add_help=False)
    point.add_argument("--alpha", type=float, help="app uptake")
    point.add_argument("--mu-T", dest="mu_T", type=float, help="mean testing delay (days)")
    point.add_argument("--R0", type=float, help="override the scenario R0")

    sub.add_parser("rates", parents=[common, point], help="alert probabilities and removal rates")
    sub.add_parser("check", parents=[common, point], help="controllability verdict and stability report")
    sim = sub.add_parser("simulate", parents=[common, point], help="trajectory CSV (ODE or stochastic)")
    sim.add_argument("--stochastic", action="store_true", help="exact stochastic simulation")
    sim.add_argument("--runs", type=int)
    sim.add_argument("--N", type=int)
    sim.add_argument("--t-end", dest="t_end", type=float)
    sw = sub.add_parser("sweep", parents=[common], help="controllability boundaries and grids")
    sw.add_argument("--preset", action="append", choices=["fig2", "fig3", "fig4", "fig5"])
    val = sub.add_parser("validate", parents=[common], help="property suite summary")
    val.add_argument("--draws", type=int)
    val.add_argument("--fault", choices=["k0_sign"], help="inject a fault; the suite must fail")
    val.add_argument("--no-stochastic", action="store_true")
    return p


def effective_config(args) -> dict:
    cfg = cfgmod.load(args.config)
    over = {}
    for key in ("threads", "seed", "alpha", "mu_T"):
        if getattr(args, key, None) is not None:
            over[key] = getattr(args, key)
    if args.mode is not None:
        over["mode"] = args.mode
        cfg["scenario"].pop("mode", None)
        for s in cfg["sweep"]["scenarios"]:
            s.pop("mode", None)
    if getattr(args, "R0", None) is not None:
        sc = {k: v for k, v in cfg["scenario"].items() if k != "beta"}
        over["scenario"] = {**sc, "R0": args.R0}
    if args.command == "simulate":
        sim = {k: getattr(args, k) for k in ("runs", "N", "t_end") if getattr(args, k) is not None}
        if args.stochastic:
            sim["stochastic"] = True
        over["simulate"] = sim
    if args.command == "sweep" and args.preset:
        over["sweep"] = {"presets": sorted(set(args.preset))}
    if args.command == "validate":
        v = {"fault": args.fault} if args.fault else {}
        if args.draws is not None:
            v["draws"] = args.draws
        if args.no_stochastic:
            v["stochastic"] = False
        over["validate"] = v
    cfg = cfgmod.merge(cfg, over)
    cfgmod.validate(cfg)
    return cfg


def _provenance(cfg: dict, command: str) -> dict:
    return {"command": command, "ctseir_version": _version(), **cfgmod.flatten(cfg)}


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _scenario(cfg):
    return cfgmod.scenario_from(cfg["scenario"], cfg["mode"], cfg["step"])


def _point_params(cfg, N: float = 1.0):
    sc = _scenario(cfg)
    probs = sc.probabilities(cfg["mu_T"])
    params = EpidemicParams.from_timeline(sc.timeline(cfg["mu_T"]), sc.beta, cfg["alpha"], N=N, probs=probs)
    return sc, probs, params


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{v:.9g}"
    return str(v)


def _emit(pairs: dict, out: Path | None, name: str, header: dict) -> None:
    lines = [f"{k}={_fmt(v)}" for k, v in pairs.items()]
    print("\n".join(lines))
    if out is not None:
        with open(out / name, "w") as fh:
            fh.writelines(f"# {k}={v}\n" for k, v in header.items())
            fh.write("\n".join(lines) + "\n")


def cmd_rates(args, cfg) -> int:
    sc, probs, _ = _point_params(cfg)
    rates = removal_rates(probs, cfg["alpha"], sc.beta)
    pairs = {"scenario_id": sc.id, "mode": sc.mode, "alpha": cfg["alpha"], "mu_T": cfg["mu_T"],
             "beta": sc.beta, "p_E": probs.p_E, "p_I": probs.p_I, "p_R": probs.p_R,
             "sum": probs.p_E + probs.p_I + probs.p_R, "theta": rates.theta, "psi": rates.psi}
    _emit(pairs, _out_dir(args), "rates.txt", _provenance(cfg, "rates"))
    return EXIT_OK


def cmd_check(args, cfg) -> int:
    sc, probs, params = _point_params(cfg)
    rep = stability_report(params)
    pairs = {"scenario_id": sc.id, "mode": sc.mode, "alpha": cfg["alpha"], "mu_T": cfg["mu_T"],
             "R0": sc.R0, "theta": params.theta, "psi": params.psi, **rep.as_dict(),
             "max_abs_imag": rep.max_abs_imag}
    pairs["k_coeffs"] = " ".join(_fmt(c) for c in pairs["k_coeffs"])
    pairs["eigenvalues"] = " ".join(f"{complex(v).real:.9g}{complex(v).imag:+.9g}j" for v in rep.eigenvalues)
    del pairs["eigenvalues_real"], pairs["eigenvalues_imag"]
    _emit(pairs, _out_dir(args), "check.txt", _provenance(cfg, "check"))
    return EXIT_OK if rep.controlled else EXIT_UNCONTROLLED


def cmd_simulate(args, cfg) -> int:
    sim = cfg["simulate"]
    _, _, params = _point_params(cfg, N=float(sim["N"]))
    out = _out_dir(args) or Path(".")
    header = _provenance(cfg, "simulate")
    if not sim["stochastic"]:
        tr = integrate(params, initial_state(sim["N"], cfg["alpha"], sim["seed_exposed"]),
                       sim["t_end"], sim["dt"], sim["thin"])
        tr.to_csv(out / "trajectory.csv", header_comments=header)
        _emit({"peak_infectious_fraction": tr.peak_infectious_fraction(),
               "final_R": float(tr.y[-1, -1]), "rows": len(tr.t)}, None, "", header)
        return EXIT_OK
    init = integer_state(sim["N"], cfg["alpha"], sim["seed_exposed"])
    runs = run_ensemble(params, init, sim["runs"], cfg["seed"], sim["t_end"], sim["sample_dt"], cfg["threads"])
    for r in runs:
        r.to_csv(out / f"stochastic_seed_{r.seed}.csv", header_comments=header)
    _emit({"runs": len(runs),
           "mean_peak_infectious_fraction": float(np.mean([r.peak_infectious_fraction for r in runs])),
           "outbreak_frequency": sum(r.outcome == "outbreak" for r in runs) / len(runs)}, None, "", header)
    return EXIT_OK


def cmd_sweep(args, cfg) -> int:
    out = _out_dir(args) or Path(".")
    sw = cfg["sweep"]
    delays = cfgmod.grid_values(sw["delay_grid"])
    alphas = cfgmod.grid_values(sw["alpha_grid"])
    if delays.size == 0 or alphas.size == 0:
        raise UsageError("sweep grids must be nonempty")
    header = _provenance(cfg, "sweep")
    threads = cfg["threads"]
    written = []
    for name, scenarios in cfgmod.sweep_scenarios(cfg).items():
        if sw["alerts"] and name in ("fig2", "custom"):
            for sc in scenarios:
                path = out / f"{sc.id}_alerts.csv"
                write_alert_csv(path, alert_probability_curve(sc, delays, threads), header)
                written.append(path)
        if name == "fig2":
            continue
        curves = {sc.id: boundary_curve(sc, delays, threads, sw["tol"]) for sc in scenarios}
        path = out / f"{name}_boundary.csv"
        write_boundary_csv(path, curves, header)
        written.append(path)
        if sw["grid"]:
            grids = {sc.id: controllability_grid(sc, alphas, delays, threads) for sc in scenarios}
            path = out / f"{name}_grid.csv"
            write_grid_csv(path, grids, alphas, delays, header)
            written.append(path)
    print("\n".join(f"wrote={p}" for p in written))
    return EXIT_OK


def cmd_validate(args, cfg) -> int:
    v = cfg["validate"]
    summary = run_suite(v["draws"], cfg["seed"], v["fault"], v["stochastic"])
    text = json.dumps(summary, indent=2, sort_keys=True)
    print(text)
    out = _out_dir(args)
    if out is not None:
        (out / "validate.json").write_text(text + "\n")
    return EXIT_OK if summary["ok"] else EXIT_ERROR


COMMANDS = {"rates": cmd_rates, "check": cmd_check, "simulate": cmd_simulate,
            "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = effective_config(args)
        return COMMANDS[args.command](args, cfg)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parsable line
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
