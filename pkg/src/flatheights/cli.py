"""Command-line front end: JSON scenario configs in, CSV/JSON/SVG reports out.

Subcommands: torus, cylinder, exhaustion, variational, dirichlet, selftest.
Exit codes: 0 success, 1 config/schema error, 2 numerical-tolerance failure
(including divergent chain sums), 3 I/O error.

Reports are deterministic: identical (config, seed) pairs produce bitwise
identical JSON and CSV.  Floats are serialized with 17 significant digits and
a '.' decimal separator, enough to round-trip doubles exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import acceptance, plots
from .core import TorusQuadDiff, map_from_json, pair_to_complex, tau_from_pair
from .cylinders import chain_norm, cone_extremal, exhaustion_diagnostics, load_chain_spec
from .dirichlet import (
    GridOneForm,
    dirichlet_gap,
    form_from_rows,
    form_to_rows,
    grid_energy,
    harmonic_minimize,
    pushforward_energy,
    pushforward_energy_bound,
    realizing_differential,
)
from .torus import (
    check_conjugate_relation,
    construct_teichmuller_map,
    extremal_ratio,
    maximizing_differential,
    qd_norm,
    theta_sweep,
    verify_homotopic,
)
from .variational import GAUGES, a_of_t, torus_path_report

KINDS = ("torus", "cylinder", "exhaustion", "variational", "dirichlet")

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_TOLERANCE = 2
EXIT_IO = 3


class SchemaError(ValueError):
    """Scenario config failed validation before any computation."""


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    payload: dict
    output: str
    plot: bool = False
    seed: int = 0
    gauge: str = "fix1"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.payload, dict):
            raise SchemaError("payload must be a JSON object")
        if self.gauge not in GAUGES:
            raise SchemaError(f"gauge must be one of {GAUGES}")


# ---------------------------------------------------------------------------
# Deterministic writers.
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _jsonable(value):
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_json(path: str, obj: dict) -> None:
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for cell in row:
                if cell is None:
                    cells.append("")
                elif isinstance(cell, (int, np.integer)) and not isinstance(cell, bool):
                    cells.append(str(int(cell)))
                else:
                    cells.append(_fmt(cell))
            fh.write(",".join(cells) + "\n")


def _exact_str(value) -> str | None:
    return str(value) if isinstance(value, Fraction) else None


def _with_exact(summary: dict, key: str, value) -> None:
    summary[key] = value
    exact = _exact_str(value)
    if exact is not None:
        summary[key + "_exact"] = exact


# ---------------------------------------------------------------------------
# Scenario runners.  Each writes its reports into config.output.
# ---------------------------------------------------------------------------


def _require(payload: dict, key: str):
    if key not in payload:
        raise SchemaError(f"payload is missing {key!r}")
    return payload[key]


def run_torus(config: ScenarioConfig) -> None:
    payload = dict(config.payload)
    for key in ("tau", "tau_prime", "B"):
        _require(payload, key)
    try:
        f = map_from_json(payload)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    samples = int(payload.get("sweep_samples", 720))

    rep = extremal_ratio(f)
    phi_star = maximizing_differential(rep, f.tau)
    chk = check_conjugate_relation(f, phi_star, rep.L)
    g = construct_teichmuller_map(f, phi_star, rep.L)
    homotopic = verify_homotopic(g, f)

    summary = {
        "L": rep.L,
        "theta_star": rep.theta_star,
        "branch": rep.branch,
        "sigma": list(rep.sigma),
        "attained": rep.attained,
        "c_conjugate": chk.c,
        "residual": chk.residual,
        "K": f.dilatation,
        "homotopic": homotopic,
        "beltrami": g.beltrami,
    }
    write_json(os.path.join(config.output, "summary.json"), summary)
    thetas, ratios, inv_ratios = theta_sweep(f, samples)
    write_csv(
        os.path.join(config.output, "theta_sweep.csv"),
        ["theta", "ratio", "inv_ratio"],
        zip(thetas, ratios, inv_ratios),
    )
    if config.plot:
        plots.theta_sweep_figure(thetas, ratios, inv_ratios, rep.theta_star, config.output)


def _load_chain(payload: dict):
    spec = _require(payload, "chain")
    try:
        return load_chain_spec(spec)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def run_cylinder(config: ScenarioConfig) -> None:
    payload = config.payload
    chain, cmap, w = _load_chain(payload)
    n_max = int(payload.get("n_max", 100))
    res = cone_extremal(chain, cmap, n_max)

    summary: dict = {
        "attained": res.attained,
        "witness": res.witness,
        "side": res.side,
        "n_max": n_max,
    }
    _with_exact(summary, "L", res.L)
    _with_exact(summary, "prefix_max", res.prefix_max)
    _with_exact(summary, "prefix_min", res.prefix_min)
    if res.gaps is not None:
        _with_exact(summary, f"gap_{len(res.gaps)}", res.gaps[-1])
        write_csv(
            os.path.join(config.output, "cone_gaps.csv"),
            ["N", "gap"],
            ((n, gap) for n, gap in enumerate(res.gaps, start=1)),
        )
        if config.plot:
            plots.gap_figure(range(1, len(res.gaps) + 1), [float(g) for g in res.gaps],
                             config.output, "cone_gaps.svg", ylabel="L - prefix max")
    write_json(os.path.join(config.output, "summary.json"), summary)


def run_exhaustion(config: ScenarioConfig) -> None:
    payload = config.payload
    chain, cmap, w = _load_chain(payload)
    n_max = int(payload.get("n_max", 100))
    rows = exhaustion_diagnostics(chain, cmap, w, n_max)
    write_csv(
        os.path.join(config.output, "exhaustion.csv"),
        ["N", "L_N", "trunc_norm", "gap"],
        ((r.N, r.L_N, r.trunc_norm, r.gap) for r in rows),
    )
    summary = {"rows": len(rows), "n_max": n_max}
    _with_exact(summary, "total_norm", chain_norm(chain, w))
    _with_exact(summary, "final_trunc_norm", rows[-1].trunc_norm)
    _with_exact(summary, "final_gap", rows[-1].gap)
    _with_exact(summary, "final_L", rows[-1].L_N)
    write_json(os.path.join(config.output, "summary.json"), summary)
    if config.plot:
        plots.gap_figure([r.N for r in rows], [max(float(r.gap), 0.0) for r in rows],
                         config.output, "exhaustion.svg", ylabel="norm gap")


def run_variational(config: ScenarioConfig) -> None:
    payload = config.payload
    if "torus" not in payload and "chain" not in payload:
        raise SchemaError("variational payload needs a 'torus' and/or 'chain' section")
    t_grid = payload.get("t_grid", 11)
    if not isinstance(t_grid, (int, list)):
        raise SchemaError("t_grid must be an integer count or a list of values")

    report = None
    summary: dict = {"gauge": config.gauge}
    if "torus" in payload:
        sec = payload["torus"]
        try:
            tau = tau_from_pair(_require(sec, "tau"))
            mu = pair_to_complex(_require(sec, "mu"))
            q = TorusQuadDiff(pair_to_complex(_require(sec, "q")), tau)
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"invalid torus section: {exc}") from exc
        if not abs(mu) < 1.0:
            raise SchemaError("Beltrami coefficient must satisfy |mu| < 1")
        step = float(sec.get("step", 1e-3))
        report = torus_path_report(mu, tau, q, t_grid, step=step, gauge=config.gauge)
        interior = [
            (a, n)
            for a, n in zip(report.h_prime_analytic, report.h_prime_numeric)
            if a is not None
        ]
        summary["h_start"] = report.h[0]
        summary["h_end"] = report.h[-1]
        if interior:
            summary["max_h_prime_discrepancy"] = max(abs(a - n) for a, n in interior)
    if "chain" in payload:
        sec = payload["chain"]
        chain, cmap, w = _load_chain(sec)
        n_max = int(sec.get("n_max", 10))
        chain_rep = a_of_t(chain, cmap, w, "geometric", n_max, t_grid)
        report = chain_rep if report is None else report.merged_with(chain_rep)
        summary["a_max"] = max(chain_rep.a_vals)
        summary["a_at_zero"] = chain_rep.a_vals[0] if chain_rep.t_grid[0] == 0.0 else None
        summary["n_max"] = n_max

    def column(values, k):
        return values[k] if values is not None else None

    write_csv(
        os.path.join(config.output, "path.csv"),
        ["t", "h", "h_analytic", "h_numeric", "A", "bound"],
        (
            (
                t,
                column(report.h, k),
                column(report.h_prime_analytic, k),
                column(report.h_prime_numeric, k),
                column(report.a_vals, k),
                column(report.bounds, k),
            )
            for k, t in enumerate(report.t_grid)
        ),
    )
    write_json(os.path.join(config.output, "summary.json"), summary)
    if config.plot:
        plots.path_figure(report, config.output)


def _read_form_csv(path: str, n: int, tau) -> GridOneForm:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "cell,P,Q":
            raise SchemaError(f"form csv must start with 'cell,P,Q', got {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cell, p, q = line.split(",")
            rows.append((int(cell), float(p), float(q)))
    try:
        return form_from_rows(rows, n, tau)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def run_dirichlet(config: ScenarioConfig) -> None:
    payload = config.payload
    try:
        n = int(_require(payload, "n"))
        tau = tau_from_pair(_require(payload, "tau"))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid dirichlet payload: {exc}") from exc
    if "form_csv" in payload:
        if "periods" in payload or "potential_amplitude" in payload:
            raise SchemaError("give either form_csv or periods, not both")
        form = _read_form_csv(str(payload["form_csv"]), n, tau)
        h1, h2 = form.periods
    else:
        try:
            h1, h2 = (float(v) for v in _require(payload, "periods"))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"invalid dirichlet payload: {exc}") from exc
        amplitude = float(payload.get("potential_amplitude", 0.0))
        potential = None
        if amplitude != 0.0:
            rng = np.random.default_rng(config.seed)
            potential = amplitude * rng.standard_normal((n, n))
        form = GridOneForm(n=n, tau=tau, h1=h1, h2=h2, potential=potential)

    minimized = harmonic_minimize((h1, h2), tau, n)
    oracle = qd_norm(realizing_differential((h1, h2), tau))
    summary = {
        "n": n,
        "tau": [tau.tau1, tau.tau2],
        "periods": [h1, h2],
        "energy": grid_energy(form),
        "harmonic_minimum": minimized.energy,
        "realizing_norm": oracle,
        "gap": dirichlet_gap(form),
        "iterations": minimized.iterations,
        "residual": minimized.residual,
    }
    if "map" in payload:
        spec = dict(payload["map"])
        spec.setdefault("tau", [tau.tau1, tau.tau2])
        if spec["tau"] != [tau.tau1, tau.tau2]:
            raise SchemaError("pushforward map must start on the form's torus")
        try:
            f = map_from_json(spec)
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc
        summary["pushforward_energy"] = pushforward_energy(form, f)
        summary["dilatation"] = f.dilatation
        summary["energy_bound_holds"] = pushforward_energy_bound(form, f)
    write_csv(
        os.path.join(config.output, "form.csv"),
        ["cell", "P", "Q"],
        form_to_rows(form),
    )
    write_json(os.path.join(config.output, "summary.json"), summary)
    if config.plot:
        plots.form_figure(form, config.output)


RUNNERS = {
    "torus": run_torus,
    "cylinder": run_cylinder,
    "exhaustion": run_exhaustion,
    "variational": run_variational,
    "dirichlet": run_dirichlet,
}


def run(config: ScenarioConfig) -> None:
    os.makedirs(config.output, exist_ok=True)
    RUNNERS[config.kind](config)


# ---------------------------------------------------------------------------
# Argument parsing and entry point.
# ---------------------------------------------------------------------------


def _load_config(kind: str, args) -> ScenarioConfig:
    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("config must be a JSON object")
    if "kind" in raw:
        if raw["kind"] != kind:
            raise SchemaError(
                f"config kind {raw['kind']!r} does not match subcommand {kind!r}"
            )
        payload = raw.get("payload", {})
        output = args.out or raw.get("output", "reports")
        plot = bool(raw.get("plot", False)) or args.plot
        seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
        gauge = args.gauge or raw.get("gauge", "fix1")
    else:
        payload = raw
        output = args.out or "reports"
        plot = args.plot
        seed = args.seed if args.seed is not None else 0
        gauge = args.gauge or "fix1"
    return ScenarioConfig(kind=kind, payload=payload, output=output, plot=plot,
                          seed=seed, gauge=gauge)


def _selftest(args) -> int:
    seed = args.seed if args.seed is not None else acceptance.DEFAULT_SEED
    results = acceptance.run_all(seed)
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"  {mark}  {r.number}. {r.name:<{width}}  {r.detail}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_json(
            os.path.join(args.out, "selftest.json"),
            {
                "seed": seed,
                "passed": not failed,
                "criteria": [
                    {"number": r.number, "name": r.name, "passed": r.passed,
                     "detail": r.detail}
                    for r in results
                ],
            },
        )
    return EXIT_OK if not failed else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flatheights",
        description="Heights maps, extremal stretch ratios, and stretch-map "
                    "reconstruction on flat tori and cylinder chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} scenario from a JSON config")
        p.add_argument("--config", required=True, help="path to the scenario JSON")
        p.add_argument("--out", default=None, help="output directory (default: reports)")
        p.add_argument("--plot", action="store_true", help="also render SVG figures")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized sweeps")
        p.add_argument("--gauge", choices=GAUGES, default=None,
                       help="normalization used in the variational derivative")
    p = sub.add_parser("selftest", help="run the acceptance suite and print a table")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="also write selftest.json here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return _selftest(args)
    try:
        config = _load_config(args.command, args)
        run(config)
    except (SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
