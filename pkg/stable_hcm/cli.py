"""
Interface en ligne de commande de stable-hcm.

Chaque sous-commande est un adaptateur mince au-dessus de la bibliothèque :
aucun calcul numérique ici.

Usage :
    stable-hcm density --alpha 0.5 --x 1
    stable-hcm sample --alpha 0.5 --n-draws 100000 --seed 1 --out z.csv --format csv
    stable-hcm mellin-check --plan lemma2 --alpha 0.5 --terms 200 --s 1
    stable-hcm hcm-check --alpha 0.3 --u 0.25 1 4 --order 6
    stable-hcm hm-check --alpha 0.9 --expect fail
    stable-hcm factorize --plan theorem --alpha 0.3 --terms 1000 --out plan.json
    stable-hcm product-density --gamma 0.2 --beta 0.5 0.5 --format csv

Codes de sortie :
    0  succès / vérification conforme à --expect
    1  vérification non conforme à --expect (témoin trouvé alors que pass attendu...)
    2  erreur d'usage ou de domaine
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np
import voluptuous as vol

from .const import (
    DEFAULT_CLI_TERMS,
    DEFAULT_DELTA,
    DEFAULT_EPSILON,
    DEFAULT_HM_EPSILON,
    DEFAULT_HM_POINTS,
    DEFAULT_LAPLACE_TOLERANCE,
    DEFAULT_MALMSTEN_TOLERANCE,
    DEFAULT_MAX_ORDER,
    DEFAULT_MELLIN_TOLERANCE,
    DEFAULT_W_MAX,
    DEFAULT_W_MIN,
    DEFAULT_WILLIAMS_TOLERANCE,
)
from .exceptions import ParameterError, StableHcmError
from .factorizations import (
    FactorizationPlan,
    lemma2_plan,
    lemma3_plan,
    malmsten_check,
    mellin_report,
    plan_to_json,
    power_plan,
    sample_plan,
    theorem_plan,
    truncation_tail_variance,
    variance_bound_integral,
    williams_constant_check,
    williams_plan,
)
from .hcm import CmReport, hcm_check, hm_check
from .products import ProductDensity, ProductSpec, product_density
from .stable import StableParams, density_callable, laplace_check, sample_oracle

_LOGGER = logging.getLogger(__name__)

FORMAT_TEXT = "text"
FORMAT_CSV = "csv"
FORMAT_JSON = "json"

PLAN_LEMMA2 = "lemma2"
PLAN_LEMMA3 = "lemma3"
PLAN_THEOREM = "theorem"
PLAN_POWER = "power"
PLAN_WILLIAMS = "williams"
PLAN_CHOICES = (PLAN_LEMMA2, PLAN_LEMMA3, PLAN_THEOREM, PLAN_POWER, PLAN_WILLIAMS)

COMMANDS = (
    "density",
    "sample",
    "laplace-check",
    "mellin-check",
    "hcm-check",
    "hm-check",
    "factorize",
    "williams-check",
    "malmsten-check",
    "tail-variance",
    "product-density",
)
SAMPLING_COMMANDS = frozenset({"sample"})

_OPEN_UNIT = vol.All(
    vol.Coerce(float),
    vol.Range(min=0.0, max=1.0, min_included=False, max_included=False),
)


def _seed_for_sampling(config: dict[str, Any]) -> dict[str, Any]:
    if config["command"] in SAMPLING_COMMANDS and config.get("seed") is None:
        raise vol.Invalid("--seed is mandatory for sampling subcommands")
    return config


CONFIG_SCHEMA = vol.All(
    vol.Schema(
        {
            vol.Required("command"): vol.In(COMMANDS),
            vol.Optional("alpha", default=None): vol.Any(None, _OPEN_UNIT),
            vol.Optional("terms", default=None): vol.Any(
                None, vol.All(vol.Coerce(int), vol.Range(min=1))
            ),
            vol.Optional("s"): [vol.All(vol.Coerce(float), vol.Range(min=0.0))],
            vol.Optional("wmin", default=DEFAULT_W_MIN): vol.All(
                vol.Coerce(float), vol.Range(min=2.0)
            ),
            vol.Optional("wmax", default=DEFAULT_W_MAX): vol.Coerce(float),
            vol.Optional("seed", default=None): vol.Any(None, vol.Coerce(int)),
            vol.Optional("out", default=None): vol.Any(None, str),
            vol.Optional("format", default=FORMAT_TEXT): vol.In(
                (FORMAT_TEXT, FORMAT_CSV, FORMAT_JSON)
            ),
            vol.Optional("expect", default="pass"): vol.In(("pass", "fail")),
        },
        extra=vol.REMOVE_EXTRA,
    ),
    _seed_for_sampling,
)


@dataclass(frozen=True)
class RunConfig:
    """Options shared by the subcommands, validated before dispatch."""

    command: str
    alpha: float | None
    terms: int | None
    s_probes: tuple[float, ...]
    w_min: float
    w_max: float
    seed: int | None
    out: Path | None
    fmt: str
    expect: str

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        """Validate the parsed namespace with CONFIG_SCHEMA."""
        raw = {key: value for key, value in vars(args).items() if value is not None}
        try:
            data = CONFIG_SCHEMA(raw)
        except vol.Invalid as err:
            raise ParameterError(f"invalid options: {err}") from err
        if data["wmax"] <= data["wmin"]:
            raise ParameterError("--wmax must exceed --wmin")
        return cls(
            command=data["command"],
            alpha=data["alpha"],
            terms=data["terms"],
            s_probes=tuple(data.get("s", ())),
            w_min=data["wmin"],
            w_max=data["wmax"],
            seed=data["seed"],
            out=Path(data["out"]) if data["out"] else None,
            fmt=data["format"],
            expect=data["expect"],
        )

    def stable(self) -> StableParams:
        if self.alpha is None:
            raise ParameterError(f"{self.command} needs --alpha")
        return StableParams(self.alpha)


# --- sortie -----------------------------------------------------------------


def _emit(config: RunConfig, text: str) -> None:
    if config.out is not None:
        config.out.write_text(text + "\n")
        _LOGGER.info("wrote %s", config.out)
    else:
        print(text)


def _dump(obj: object) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False)


def _table(
    config: RunConfig, header: Sequence[str], rows: Sequence[Sequence[float]]
) -> str:
    """Rows as CSV (header first) or JSON records; plain values for text."""
    if config.fmt == FORMAT_JSON:
        return _dump([dict(zip(header, row, strict=True)) for row in rows])
    if config.fmt == FORMAT_CSV:
        lines = [",".join(header)]
        lines.extend(",".join(f"{v:.17g}" for v in row) for row in rows)
        return "\n".join(lines)
    return "\n".join(" ".join(f"{v:.17g}" for v in row[1:]) for row in rows)


# --- construction des objets -----------------------------------------------


def _build_plan(config: RunConfig, args: argparse.Namespace) -> FactorizationPlan:
    terms = config.terms if config.terms is not None else DEFAULT_CLI_TERMS
    if args.plan == PLAN_WILLIAMS:
        if args.n is None:
            raise ParameterError("williams plan needs --n")
        return williams_plan(args.n)
    if args.plan == PLAN_LEMMA3:
        if args.a is None or args.b is None:
            raise ParameterError("lemma3 plan needs --a and --b")
        return lemma3_plan(args.a, args.b, terms)
    builders: dict[str, Callable[[StableParams, int], FactorizationPlan]] = {
        PLAN_LEMMA2: lemma2_plan,
        PLAN_THEOREM: theorem_plan,
        PLAN_POWER: power_plan,
    }
    return builders[args.plan](config.stable(), terms)


def _product_spec(args: argparse.Namespace) -> ProductSpec | None:
    if args.gamma is None and not args.beta:
        return None
    return ProductSpec(args.gamma, tuple((a, b) for a, b in args.beta or ()))


def _density(
    config: RunConfig, args: argparse.Namespace
) -> tuple[Callable[[Any], Any], bool]:
    """Density callable for the HCM checkers, and whether it takes arrays."""
    spec = _product_spec(args)
    if spec is not None:
        return ProductDensity(spec), True
    return (
        density_callable(config.stable(), closed_form=args.closed_form, power=args.power),
        False,
    )


# --- sous-commandes ---------------------------------------------------------


def _cmd_density(config: RunConfig, args: argparse.Namespace) -> bool:
    f, _ = _density(config, args)
    rows = [(x, f(x)) for x in args.x]
    _emit(config, _table(config, ("x", "f"), rows))
    return True


def _cmd_sample(config: RunConfig, args: argparse.Namespace) -> bool:
    seed = config.seed
    if seed is None:
        raise ParameterError("--seed is mandatory for sampling subcommands")
    if args.plan is None:
        draws = sample_oracle(config.stable(), args.n_draws, seed)
    else:
        draws = sample_plan(
            _build_plan(config, args),
            args.n_draws,
            seed,
            compensate_tail=args.compensate_tail,
        )
    if config.fmt == FORMAT_JSON:
        _emit(config, _dump(draws.tolist()))
    else:
        header = ["x"] if config.fmt == FORMAT_CSV else []
        _emit(config, "\n".join(header + [f"{v:.17g}" for v in draws]))
    return True


def _cmd_laplace(config: RunConfig, args: argparse.Namespace) -> bool:
    p = config.stable()
    rows = []
    for lam in args.lam:
        quadrature, exact = laplace_check(p, lam)
        rows.append(
            {
                "lambda": lam,
                "quadrature": quadrature,
                "exact": exact,
                "abs_error": abs(quadrature - exact),
            }
        )
    passed = all(row["abs_error"] < args.tolerance for row in rows)
    doc = {"alpha": p.alpha, "tolerance": args.tolerance, "pass": passed, "checks": rows}
    _emit(config, _dump(doc))
    return passed


def _cmd_mellin(config: RunConfig, args: argparse.Namespace) -> bool:
    plan = _build_plan(config, args)
    report = mellin_report(
        plan, config.s_probes or (0.5, 1.0, 2.0), compensate_tail=not args.raw
    )
    passed = report.passed(args.tolerance)
    _emit(config, _dump(report.to_dict() | {"tolerance": args.tolerance, "pass": passed}))
    return passed


def _w_grid(config: RunConfig, step: float) -> np.ndarray:
    count = int(math.floor((config.w_max - config.w_min) / step + 1e-9)) + 1
    return config.w_min + step * np.arange(count)


def _emit_reports(config: RunConfig, reports: Sequence[CmReport]) -> bool:
    for report in reports:
        print(report.summary(), file=sys.stderr)
    docs = [report.to_dict() for report in reports]
    _emit(config, _dump(docs[0] if len(docs) == 1 else docs))
    return all(report.passed for report in reports)


def _cmd_hcm(config: RunConfig, args: argparse.Namespace) -> bool:
    f, vectorized = _density(config, args)
    grid = _w_grid(config, args.delta)
    reports = [
        hcm_check(f, u, grid, args.delta, args.order, args.epsilon, vectorized=vectorized)
        for u in args.u
    ]
    return _emit_reports(config, reports)


def _cmd_hm(config: RunConfig, args: argparse.Namespace) -> bool:
    f, vectorized = _density(config, args)
    grid = np.linspace(config.w_min, config.w_max, args.points)
    report = hm_check(f, args.u, grid, args.epsilon, vectorized=vectorized)
    return _emit_reports(config, [report])


def _cmd_factorize(config: RunConfig, args: argparse.Namespace) -> bool:
    plan = _build_plan(config, args)
    print(
        f"N = {plan.truncation_N}, tail log-variance = {plan.tail_log_variance:.6e}",
        file=sys.stderr,
    )
    _emit(config, plan_to_json(plan))
    return True


def _cmd_williams(config: RunConfig, args: argparse.Namespace) -> bool:
    rows = []
    for n in args.n:
        value, expected = williams_constant_check(n)
        rows.append(
            {
                "n": n,
                "digamma_form": value,
                "n_pow_n": expected,
                "relative_error": abs(value / expected - 1.0),
            }
        )
    passed = all(row["relative_error"] < args.tolerance for row in rows)
    _emit(config, _dump({"tolerance": args.tolerance, "pass": passed, "checks": rows}))
    return passed


def _cmd_malmsten(config: RunConfig, args: argparse.Namespace) -> bool:
    rhs, lhs = malmsten_check(args.a, args.s_value)
    passed = abs(rhs - lhs) < args.tolerance
    doc = {
        "a": args.a,
        "s": args.s_value,
        "malmsten": rhs,
        "log_gamma_ratio": lhs,
        "abs_error": abs(rhs - lhs),
        "pass": passed,
    }
    _emit(config, _dump(doc))
    return passed


def _cmd_tail(config: RunConfig, args: argparse.Namespace) -> bool:
    p = config.stable()
    rows = [{"N": n, "variance": truncation_tail_variance(p, n)} for n in args.start]
    bound = variance_bound_integral(p)
    passed = all(math.isfinite(row["variance"]) for row in rows) and all(
        row["variance"] <= bound * (1.0 + 1e-9) for row in rows
    )
    _emit(config, _dump({"alpha": p.alpha, "bound": bound, "pass": passed, "tails": rows}))
    return passed


def _cmd_product_density(config: RunConfig, args: argparse.Namespace) -> bool:
    spec = _product_spec(args)
    if spec is None:
        raise ParameterError("product-density needs --gamma and/or --beta")
    grid = product_density(spec, args.x)
    if config.out is not None and config.fmt != FORMAT_JSON:
        grid.to_csv(config.out)
        _LOGGER.info("wrote %s (%d nodes)", config.out, grid.nodes.size)
    else:
        rows = list(zip(grid.nodes.tolist(), grid.values.tolist(), strict=True))
        fmt_config = config if config.fmt != FORMAT_TEXT else _with_format(config, FORMAT_CSV)
        _emit(config, _table(fmt_config, ("x", "f"), rows))
    print(f"mass = {grid.mass():.10f}", file=sys.stderr)
    return True


def _with_format(config: RunConfig, fmt: str) -> RunConfig:
    return replace(config, fmt=fmt)


HANDLERS: dict[str, Callable[[RunConfig, argparse.Namespace], bool]] = {
    "density": _cmd_density,
    "sample": _cmd_sample,
    "laplace-check": _cmd_laplace,
    "mellin-check": _cmd_mellin,
    "hcm-check": _cmd_hcm,
    "hm-check": _cmd_hm,
    "factorize": _cmd_factorize,
    "williams-check": _cmd_williams,
    "malmsten-check": _cmd_malmsten,
    "tail-variance": _cmd_tail,
    "product-density": _cmd_product_density,
}


# --- analyse des arguments --------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--expect",
        choices=("pass", "fail"),
        default="pass",
        help="Issue attendue de la vérification (inverse le code de sortie)",
    )
    parser.add_argument(
        "--out", metavar="FICHIER", help="Écrire le résultat dans ce fichier"
    )
    parser.add_argument(
        "--format",
        choices=(FORMAT_TEXT, FORMAT_CSV, FORMAT_JSON),
        default=FORMAT_TEXT,
        help="Format des tables (défaut : text)",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v : INFO, -vv : DEBUG"
    )


def _add_alpha(parser: argparse.ArgumentParser, *, required: bool = False) -> None:
    parser.add_argument(
        "--alpha",
        type=float,
        required=required,
        help="Indice de stabilité α dans (0, 1)",
    )


def _add_plan(parser: argparse.ArgumentParser, *, default: str | None) -> None:
    parser.add_argument(
        "--plan", choices=PLAN_CHOICES, default=default, help="Factorisation tronquée"
    )
    parser.add_argument(
        "--terms",
        type=int,
        metavar="N",
        help=f"Nombre de facteurs Beta (défaut : {DEFAULT_CLI_TERMS})",
    )
    parser.add_argument("--a", type=float, help="Forme a (plan lemma3)")
    parser.add_argument("--b", type=float, help="Forme b (plan lemma3)")
    parser.add_argument("--n", type=int, help="n (plan williams, α = 1/n)")


def _add_density_source(parser: argparse.ArgumentParser) -> None:
    _add_alpha(parser)
    parser.add_argument(
        "--closed-form", action="store_true", help="Forme fermée de f_{1/2}"
    )
    parser.add_argument(
        "--power", type=float, metavar="Q", help="Densité de Z_α^Q au lieu de Z_α"
    )
    parser.add_argument(
        "--gamma", type=float, metavar="C", help="Produit : facteur Γ_C"
    )
    parser.add_argument(
        "--beta",
        type=float,
        nargs=2,
        action="append",
        metavar=("A", "B"),
        help="Produit : facteur B_{A,B} (répétable)",
    )


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subparser per subcommand."""
    parser = argparse.ArgumentParser(
        prog="stable-hcm",
        description="Lois stables positives : factorisations Beta-Gamma et tests HCM",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    density = sub.add_parser("density", help="Densité f_α aux points donnés")
    _add_density_source(density)
    density.add_argument("--x", type=float, nargs="+", required=True)

    sample = sub.add_parser("sample", help="Tirages exacts de Z_α ou d'un plan tronqué")
    _add_alpha(sample)
    _add_plan(sample, default=None)
    sample.add_argument("--n-draws", "--count", dest="n_draws", type=int, required=True)
    sample.add_argument("--seed", type=int)
    sample.add_argument(
        "--compensate-tail",
        action="store_true",
        help="Ajoute le terme log-normal des facteurs omis",
    )

    laplace = sub.add_parser("laplace-check", help="Transformée de Laplace vs e^{-λ^α}")
    _add_alpha(laplace, required=True)
    laplace.add_argument(
        "--lambda", dest="lam", type=float, nargs="+", default=[0.5, 1.0, 2.0, 5.0]
    )
    laplace.add_argument("--tolerance", type=float, default=DEFAULT_LAPLACE_TOLERANCE)

    mellin = sub.add_parser("mellin-check", help="Mellin d'un plan vs forme fermée")
    _add_alpha(mellin)
    _add_plan(mellin, default=PLAN_LEMMA2)
    mellin.add_argument("--s", dest="s", type=float, nargs="+")
    mellin.add_argument("--tolerance", type=float, default=DEFAULT_MELLIN_TOLERANCE)
    mellin.add_argument(
        "--raw",
        action="store_true",
        help="Produit tronqué brut, sans compensation de queue",
    )

    hcm = sub.add_parser("hcm-check", help="Différences finies Δ^k H_u(w), k ≤ K")
    _add_density_source(hcm)
    hcm.add_argument("--u", type=float, nargs="+", default=[1.0])
    hcm.add_argument("--order", type=int, default=DEFAULT_MAX_ORDER)
    hcm.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    hcm.add_argument("--wmin", type=float, default=DEFAULT_W_MIN)
    hcm.add_argument("--wmax", type=float, default=DEFAULT_W_MAX)
    hcm.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)

    hm = sub.add_parser("hm-check", help="Monotonie hyperbolique (ordre 1)")
    _add_density_source(hm)
    hm.add_argument("--u", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    hm.add_argument("--wmin", type=float, default=DEFAULT_W_MIN)
    hm.add_argument("--wmax", type=float, default=50.0)
    hm.add_argument("--points", type=int, default=DEFAULT_HM_POINTS)
    hm.add_argument("--epsilon", type=float, default=DEFAULT_HM_EPSILON)

    factorize = sub.add_parser("factorize", help="Plan de factorisation en JSON")
    _add_alpha(factorize)
    _add_plan(factorize, default=PLAN_LEMMA2)

    williams = sub.add_parser("williams-check", help="Constantes de Williams")
    williams.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    williams.add_argument("--tolerance", type=float, default=DEFAULT_WILLIAMS_TOLERANCE)

    malmsten = sub.add_parser("malmsten-check", help="Formule de Malmsten")
    malmsten.add_argument("--a", type=float, required=True)
    malmsten.add_argument("--s", dest="s_value", type=float, required=True)
    malmsten.add_argument("--tolerance", type=float, default=DEFAULT_MALMSTEN_TOLERANCE)

    tail = sub.add_parser("tail-variance", help="Variance des facteurs omis")
    _add_alpha(tail, required=True)
    tail.add_argument(
        "--terms", dest="start", type=int, nargs="+", default=[0], metavar="N"
    )

    product = sub.add_parser("product-density", help="Densité d'un produit Γ × Beta")
    _add_density_source(product)
    product.add_argument(
        "--x",
        type=float,
        nargs="+",
        help="Grille explicite (défaut : grille log automatique)",
    )

    for subparser in sub.choices.values():
        _add_common(subparser)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse, validate, dispatch; return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)

    logging.basicConfig(
        level=max(logging.WARNING - 10 * args.verbose, logging.DEBUG),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = RunConfig.from_args(args)
        passed = HANDLERS[config.command](config, args)
    except StableHcmError as err:
        print(f"❌  {err}", file=sys.stderr)
        return 2

    expected = config.expect == "pass"
    return 0 if passed == expected else 1


def main() -> None:
    """Entry point of the `stable-hcm` script."""
    sys.exit(run())
