"""Command-line front end: scenario files in, JSON/CSV/tables (and figures) out.

Subcommands: eval, validate, sweep, simulate, erfc-report.  Exit codes:
0 success, 1 validation failure, 2 configuration error, 3 numeric error.
Randomized commands require an explicit --seed; there is no wall-clock
default.  Numbers are serialized with 17 significant digits.  The
reporting commands (validate, sweep) render a companion PNG figure next
to their --out file unless --no-figure is given.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import bivariate as bv
from . import gumbel as gb
from . import multivariate as mv
from .errors import ConfigError, NumericError, SimulstopError
from .gumbel import GumbelScenario, erfc_bound_optimize
from .montecarlo import (
    RngSpec,
    export_pairs_csv,
    export_systems_csv,
    sample_gumbel_pairs,
    sample_mo_pairs,
    sample_systems,
)
from .multivariate import ShockSystem, SubsetPattern
from .scenario import load_scenario
from .validation import validate_scenario

__all__ = ["main"]


def dumps17(obj, indent: int = 0) -> str:
    """JSON text with every float at 17 significant digits."""
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return f"{pad}{{}}"
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {dumps17(v, indent + 2).lstrip()}'
            for k, v in obj.items()
        )
        return f"{pad}{{\n{items}\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return f"{pad}[]"
        items = ",\n".join(f"{dumps17(v, indent + 2)}" for v in obj)
        return f"{pad}[\n{items}\n{pad}]"
    if isinstance(obj, bool):
        return f"{pad}{'true' if obj else 'false'}"
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return f'{pad}"{obj}"'
        return f"{pad}{obj:.17g}"
    return f"{pad}{json.dumps(obj)}"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _load(args):
    spec = load_scenario(args.scenario, as_json=args.scenario_json)
    return spec, spec.build()


def _fmt17(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def _eval_quantity(obj, quantity: str, qargs: list):
    """Dispatch a quantity request; returns (value-or-dict, abs_error_estimate)."""

    def need(n: int):
        if len(qargs) != n:
            raise ConfigError(f"{quantity} takes {n} argument(s), got {len(qargs)}")
        return [float(a) for a in qargs]

    if isinstance(obj, ShockSystem):
        if quantity == "survival":
            times = [float(a) for a in qargs]
            v = mv.joint_survival_n(obj, times)
            return float(v), v.abs_error_estimate
        if quantity == "prob-all-equal":
            v = mv.prob_all_equal(obj)
            return float(v), v.abs_error_estimate
        raise ConfigError(f"quantity {quantity!r} is not defined for system scenarios")

    if isinstance(obj, GumbelScenario):
        if quantity == "survival":
            s, t = need(2)
            v = gb.gumbel_joint_survival(obj, s, t)
            return float(v), v.abs_error_estimate
        if quantity == "marginal":
            i, s = need(2)
            v = bv.marginal_survival(obj.base, int(i), s)
            return float(v), v.abs_error_estimate
        if quantity == "prob-equal":
            v = gb.gumbel_prob_equal(obj)
            return float(v), v.abs_error_estimate
        if quantity == "quadrant":
            s, t = need(2)
            if not s < t:
                raise ConfigError("quadrant needs s < t")
            v = (
                float(gb.gumbel_joint_survival(obj, s, s))
                - float(gb.gumbel_joint_survival(obj, s, t))
                - float(gb.gumbel_joint_survival(obj, t, s))
                + float(gb.gumbel_joint_survival(obj, t, t))
            )
            return v, 0.0
        if quantity == "covariance":
            need(0)
            r1, r2, r3 = obj.base.constant_rates()
            if obj.delta != 1.0:
                raise ConfigError(
                    "closed-form covariance is available at delta = 1 only; "
                    "use Monte Carlo (simulate) otherwise"
                )
            return gb.gumbel_covariance_constant(r1, r2, r3), 0.0
        raise ConfigError(f"quantity {quantity!r} is not defined for gumbel scenarios")

    sc = obj
    if quantity == "survival":
        s, t = need(2)
        v = bv.joint_survival(sc, s, t)
        return float(v), v.abs_error_estimate
    if quantity == "marginal":
        i, s = need(2)
        v = bv.marginal_survival(sc, int(i), s)
        return float(v), v.abs_error_estimate
    if quantity == "prob-equal":
        need(0)
        v = bv.prob_equal(sc)
        return float(v), v.abs_error_estimate
    if quantity == "decompose":
        s, t = need(2)
        d = bv.decompose(sc, s, t)
        return {"beta": d.beta, "f_aa": d.f_aa_value, "f_sing": d.f_sing_value}, 0.0
    if quantity == "conditional":
        if len(qargs) != 2:
            raise ConfigError("conditional takes a kind and a time")
        kind, t = qargs[0], float(qargs[1])
        fn = {
            "and-before": bv.prob_equal_and_before,
            "given-tau1": bv.prob_equal_given_tau1_before,
            "given-both": bv.prob_equal_given_both_before,
        }.get(kind)
        if fn is None:
            raise ConfigError(f"unknown conditional kind {kind!r}")
        v = fn(sc, t)
        return float(v), v.abs_error_estimate
    if quantity == "quadrant":
        s, t = need(2)
        v = bv.quadrant_prob(sc, s, t)
        return float(v), v.abs_error_estimate
    if quantity == "within-eps":
        (eps,) = need(1)
        v = bv.prob_within_eps(sc, eps)
        return float(v), v.abs_error_estimate
    if quantity == "l2":
        need(0)
        v = bv.l2_distance_sq(sc)
        return float(v), v.abs_error_estimate
    if quantity == "covariance":
        need(0)
        v = bv.covariance(sc)
        return float(v), v.abs_error_estimate
    if quantity == "hazard":
        t, eps = need(2)
        v = bv.joint_hazard_ratio(sc, t, eps)
        return float(v), v.abs_error_estimate
    raise ConfigError(f"unknown quantity {quantity!r} for bivariate scenarios")


def _cmd_eval(args) -> int:
    _, obj = _load(args)
    value, err = _eval_quantity(obj, args.quantity, args.qargs)
    payload = {
        "quantity": args.quantity,
        "inputs": args.qargs,
        "value": value,
        "abs_error_estimate": err,
    }
    if args.format == "json":
        text = dumps17(payload)
    elif args.format == "csv":
        flat = value if not isinstance(value, dict) else ";".join(
            f"{k}={_fmt17(v)}" for k, v in value.items()
        )
        text = "quantity,inputs,value,abs_error_estimate\n" + ",".join(
            [
                args.quantity,
                " ".join(args.qargs),
                flat if isinstance(flat, str) else _fmt17(flat),
                _fmt17(err),
            ]
        )
    else:
        lines = [f"{'quantity':20s} {args.quantity}", f"{'inputs':20s} {' '.join(args.qargs)}"]
        if isinstance(value, dict):
            lines += [f"{k:20s} {_fmt17(v)}" for k, v in value.items()]
        else:
            lines.append(f"{'value':20s} {_fmt17(value)}")
        lines.append(f"{'abs_error_estimate':20s} {_fmt17(err)}")
        text = "\n".join(lines)
    _emit(text, args.out)
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _parse_corrupt(entries):
    corrupt = {}
    for entry in entries or []:
        if "=" not in entry:
            raise ConfigError("corrupt entries take the form name=offset")
        name, offset = entry.rsplit("=", 1)
        corrupt[name] = float(offset)
    return corrupt


def _cmd_validate(args) -> int:
    spec, obj = _load(args)
    if args.seed is None:
        raise ConfigError("validate requires an explicit --seed")
    pattern = SubsetPattern(*spec.pattern) if spec.pattern else None
    report = validate_scenario(
        obj, args.samples, args.seed, corrupt=_parse_corrupt(args.corrupt), pattern=pattern
    )
    if args.format == "json":
        print(dumps17(report.to_dict()))
    else:
        print(report.to_table())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps17(report.to_dict()) + "\n")
        if not args.no_figure:
            from .report import render_validation_figure

            render_validation_figure(report, os.path.splitext(args.out)[0] + ".png")
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

_SCENARIO_PARAMS = ("delta", "alpha1", "alpha2", "alpha3", "n")


def _parse_grid(text: str):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("range grids take the form start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("grid step must be positive")
        out = []
        v = start
        while v <= stop + 1e-12:
            out.append(round(v, 12))
            v += step
        return out
    return [float(p) for p in text.split(",") if p]


def _rebuild_for_param(spec, param: str, value: float):
    if param == "delta":
        if spec.model != "gumbel":
            raise ConfigError("delta sweeps need a gumbel scenario")
        spec2 = _copy_spec(spec)
        spec2.delta = value
        return spec2.build()
    if param in ("alpha1", "alpha2", "alpha3"):
        if spec.model == "system":
            raise ConfigError("alpha sweeps need a pair-model scenario")
        if spec.alphas.get(param, ("",))[0] != "constant":
            raise ConfigError(f"{param} sweeps need a constant intensity in the template")
        spec2 = _copy_spec(spec)
        spec2.alphas = dict(spec.alphas)
        spec2.alphas[param] = ("constant", value)
        return spec2.build()
    if param == "n":
        if spec.model != "system" or not spec.pattern:
            raise ConfigError("n sweeps need a pattern system template")
        spec2 = _copy_spec(spec)
        spec2.n = int(round(value))
        return spec2.build()
    raise ConfigError(f"unknown scenario parameter {param!r}")


def _copy_spec(spec):
    import copy

    return copy.copy(spec)


def _cmd_sweep(args) -> int:
    grid = _parse_grid(args.grid)
    if not grid:
        raise ConfigError("empty sweep grid")
    qargs_template = args.qargs
    scenario_param = args.param in _SCENARIO_PARAMS
    if not scenario_param and args.param not in qargs_template and args.quantity != "erfc-h":
        raise ConfigError(
            f"parameter {args.param!r} is neither a scenario field nor a quantity argument"
        )
    spec = obj = None
    if args.quantity != "erfc-h":
        spec, obj = _load(args)

    rows = []
    for g in grid:
        try:
            if args.quantity == "erfc-h":
                qargs = [g if tok == args.param else tok for tok in qargs_template]
                x, ell = (float(v) for v in qargs)
                value, err = gb.erfc_bound_h(x, ell), 0.0
            else:
                target = _rebuild_for_param(spec, args.param, g) if scenario_param else obj
                qargs = [
                    _fmt17(g) if tok == args.param else tok for tok in qargs_template
                ]
                value, err = _eval_quantity(target, args.quantity, qargs)
            if isinstance(value, dict):
                raise ConfigError(f"quantity {args.quantity!r} is not sweepable")
            rows.append((g, value, err, ""))
        except NumericError:
            rows.append((g, None, None, "3"))
        except ConfigError:
            raise
    lines = ["param,value,abs_error_estimate,error"]
    for g, value, err, code in rows:
        if value is None:
            lines.append(f"{_fmt17(g)},,,{code}")
        else:
            lines.append(f"{_fmt17(g)},{_fmt17(value)},{_fmt17(err)},{code}")
    _emit("\n".join(lines), args.out)
    if args.out and not args.no_figure:
        from .report import render_sweep_figure

        render_sweep_figure(
            [(g, v) for g, v, _, _ in rows], args.param, args.quantity,
            os.path.splitext(args.out)[0] + ".png",
        )
    return 0


# ---------------------------------------------------------------------------
# simulate / erfc-report
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    _, obj = _load(args)
    if args.seed is None:
        raise ConfigError("simulate requires an explicit --seed")
    rng = RngSpec(args.seed)
    if isinstance(obj, ShockSystem):
        batch = sample_systems(obj, rng, args.samples)
        export_systems_csv(batch, args.out)
    elif isinstance(obj, GumbelScenario):
        batch = sample_gumbel_pairs(obj, rng, args.samples)
        export_pairs_csv(batch, args.out)
    else:
        batch = sample_mo_pairs(obj, rng, args.samples)
        export_pairs_csv(batch, args.out)
    return 0


def _cmd_erfc_report(args) -> int:
    report = erfc_bound_optimize(ell=args.ell)
    _emit(dumps17(report.to_dict()), args.out)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulstop",
        description="Dependent stopping times with simultaneous occurrence: "
        "closed forms cross-validated by Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_args(p):
        p.add_argument("--scenario", required=True, help="scenario file path")
        p.add_argument(
            "--scenario-json",
            action="store_true",
            help="parse the scenario file as JSON instead of the key-table format",
        )

    p_eval = sub.add_parser("eval", help="evaluate a closed-form quantity")
    add_scenario_args(p_eval)
    p_eval.add_argument("quantity", help="survival | marginal | prob-equal | decompose | "
                        "conditional | quadrant | within-eps | l2 | covariance | "
                        "hazard | prob-all-equal")
    p_eval.add_argument("qargs", nargs="*", help="quantity arguments")
    p_eval.add_argument("--out", help="write JSON here instead of stdout")
    p_eval.add_argument("--format", choices=("json", "csv", "table"), default="json")

    p_val = sub.add_parser("validate", help="closed forms vs Monte Carlo battery")
    add_scenario_args(p_val)
    p_val.add_argument("--samples", type=int, required=True)
    p_val.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    p_val.add_argument("--out", help="write the JSON report here")
    p_val.add_argument("--format", choices=("json", "csv", "table"), default="table")
    p_val.add_argument("--no-figure", action="store_true")
    p_val.add_argument("--corrupt", action="append", help=argparse.SUPPRESS)

    p_sweep = sub.add_parser("sweep", help="evaluate a quantity over a parameter grid")
    p_sweep.add_argument("--scenario", help="scenario file (not needed for erfc-h)")
    p_sweep.add_argument("--scenario-json", action="store_true")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--grid", required=True, help="comma list or start:stop:step")
    p_sweep.add_argument("--quantity", required=True)
    p_sweep.add_argument("qargs", nargs="*", help="quantity arguments; tokens equal to "
                         "the param name take the grid value")
    p_sweep.add_argument("--out", help="write CSV here instead of stdout")
    p_sweep.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    p_sweep.add_argument("--format", choices=("json", "csv", "table"), default="csv")
    p_sweep.add_argument("--no-figure", action="store_true")

    p_sim = sub.add_parser("simulate", help="export raw samples as CSV")
    add_scenario_args(p_sim)
    p_sim.add_argument("--samples", type=int, required=True)
    p_sim.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    p_sim.add_argument("--out", required=True)

    p_erfc = sub.add_parser("erfc-report", help="critical-constant report for the "
                            "Gaussian tail bound")
    p_erfc.add_argument("--ell", type=float, default=None,
                        help="audit this value instead of solving for the critical one")
    p_erfc.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "eval": _cmd_eval,
        "validate": _cmd_validate,
        "sweep": _cmd_sweep,
        "simulate": _cmd_simulate,
        "erfc-report": _cmd_erfc_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except SimulstopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
