"""Command-line front-end.

Subcommands: ``price`` runs the configured (product x basis x window) grid
and emits one CSV row per cell; ``greeks`` emits a Delta/Gamma surface over a
moneyness grid; ``selftest`` runs the fast oracle-equivalence checks.

Configuration is an INI file with sections [model], [product], [basis],
[experiment] and [greeks]; unknown sections or keys are rejected. Every
experiment is fully determined by the config plus the master seed, and the
emitted CSV is byte-identical across repeats (the time_s column is NA unless
--timing is passed, since wall times are not reproducible).

Exit codes: 0 success, 1 numerical failure (NA cells were emitted), 2
usage/config error.
"""

from __future__ import annotations

import argparse
import configparser
import sys
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .basis_poly import PolyBasisSpec
from .basis_random_nets import RffnnSpec, RrnnSpec
from .basis_signature import SignatureBasisSpec
from .features import RiskSetSpec
from .lsmc import BasisSpec, ProductSpec, RegressionConfig, run_experiment
from .market_model import ModelParams
from .oracles import TreeSpec, tree_greeks
from .payoffs import (
    CERTIFICATE_KINDS,
    COUPONS_PER_YEAR,
    OPTION_KINDS,
    CertificateSpec,
    OptionSpec,
    WindowSpec,
    standard_certificate,
)
from .sensitivities import (
    ChebGreeksConfig,
    chebyshev_greeks,
    make_lsmc_spot_pricer,
    regression_greeks,
)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

BASIS_FAMILIES = ("poly", "rffnn", "rrnn", "signature")
GREEK_METHODS = ("chebyshev", "regression", "tree")

PRICE_HEADER = "product,basis,rho,M,price,std_err,time_s,seed"
GREEKS_HEADER = "product,M,moneyness,delta,gamma,method"

# Fig-style default: 60%..140% of the reference level in 5% steps.
_DEFAULT_MONEYNESS = tuple(round(0.60 + 0.05 * k, 2) for k in range(17))


class ConfigError(Exception):
    """Invalid or inconsistent configuration."""


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _parse_int(raw: str) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}") from None


def _parse_float(raw: str) -> float:
    try:
        return float(raw.strip())
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}") from None


def _parse_list(raw: str, item: Callable):
    items = [tok for tok in (t.strip() for t in raw.split(",")) if tok]
    return tuple(item(tok) for tok in items)


def _parse_str(raw: str) -> str:
    return raw.strip()


_SCHEMA: Dict[str, Dict[str, Callable]] = {
    "model": {
        "s0": _parse_float,
        "r": _parse_float,
        "q": _parse_float,
        "sigma": _parse_float,
        "maturity": _parse_float,
        "n_dates": _parse_int,
    },
    "product": {
        "kind": _parse_str,
        "strike": _parse_float,
        "window": lambda raw: _parse_list(raw, _parse_int),
        "extrema_prefactor": _parse_str,
        "maturity_years": _parse_int,
        "coupon": _parse_float,
        "coupon_barrier": _parse_float,
        "capital_barrier": _parse_float,
    },
    "basis": {
        "family": lambda raw: _parse_list(raw, _parse_str),
        "rho": _parse_int,
        "degree": _parse_int,
        "max_columns": _parse_int,
        "hidden": _parse_int,
        "alpha": _parse_float,
        "order": _parse_int,
        "augment": _parse_bool,
        "seed": _parse_int,
    },
    "experiment": {
        "n_runs": _parse_int,
        "n_train": _parse_int,
        "n_eval": _parse_int,
        "seed": _parse_int,
        "antithetic": _parse_bool,
        "ridge_lambda": _parse_float,
        "itm_filter": _parse_bool,
    },
    "greeks": {
        "moneyness": lambda raw: _parse_list(raw, _parse_float),
        "n_nodes": _parse_int,
        "rel_width": _parse_float,
        "cheb_runs": _parse_int,
        "cheb_paths": _parse_int,
        "epsilon": _parse_float,
        "reg_paths": _parse_int,
        "reg_runs": _parse_int,
        "tree_steps": _parse_int,
    },
}

_DEFAULTS: Dict[str, Dict[str, object]] = {
    "model": {"s0": 100.0, "r": 0.05, "q": 0.0, "sigma": 0.3, "maturity": 0.2, "n_dates": 50},
    "product": {
        "strike": None,
        "window": (2,),
        "extrema_prefactor": "paper",
        "maturity_years": 1,
        "coupon": None,
        "coupon_barrier": None,
        "capital_barrier": None,
    },
    "basis": {
        "family": ("poly",),
        "rho": 2,
        "degree": 2,
        "max_columns": 5000,
        "hidden": 40,
        "alpha": 0.01,
        "order": 3,
        "augment": False,
        "seed": 0,
    },
    "experiment": {
        "n_runs": 10,
        "n_train": 20_000,
        "n_eval": 80_000,
        "seed": 0,
        "antithetic": False,
        "ridge_lambda": None,
        "itm_filter": True,
    },
    "greeks": {
        "moneyness": _DEFAULT_MONEYNESS,
        "n_nodes": 7,
        "rel_width": 0.10,
        "cheb_runs": 10,
        "cheb_paths": 25_000,
        "epsilon": 0.05,
        "reg_paths": 175_000,
        "reg_runs": 1,
        "tree_steps": 2000,
    },
}


@dataclass
class ExperimentConfig:
    """Fully validated configuration; one attribute dict per section."""

    model: Dict[str, object]
    product: Dict[str, object]
    basis: Dict[str, object]
    experiment: Dict[str, object]
    greeks: Dict[str, object]

    @property
    def params(self) -> ModelParams:
        m = self.model
        return ModelParams(
            s0=m["s0"], r=m["r"], q=m["q"], sigma=m["sigma"], T=m["maturity"], N=m["n_dates"]
        )

    @property
    def is_certificate(self) -> bool:
        return self.product["kind"] in CERTIFICATE_KINDS


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an INI experiment configuration."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from None
    sections: Dict[str, Dict[str, object]] = {}
    for name in parser.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        sections[name] = {}
        for key, raw in parser.items(name):
            if key not in _SCHEMA[name]:
                raise ConfigError(f"unknown key {key!r} in section [{name}]")
            try:
                sections[name][key] = _SCHEMA[name][key](raw)
            except ConfigError as exc:
                raise ConfigError(f"[{name}] {key}: {exc}") from None
    merged = {}
    for name in _SCHEMA:
        merged[name] = dict(_DEFAULTS[name])
        merged[name].update(sections.get(name, {}))
    cfg = ExperimentConfig(
        model=merged["model"],
        product=merged["product"],
        basis=merged["basis"],
        experiment=merged["experiment"],
        greeks=merged["greeks"],
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    kind = cfg.product.get("kind")
    if kind is None:
        raise ConfigError("[product] kind is required")
    if kind not in OPTION_KINDS + CERTIFICATE_KINDS:
        raise ConfigError(f"unknown product kind {kind!r}")
    try:
        params = cfg.params
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None
    for fam in cfg.basis["family"]:
        if fam not in BASIS_FAMILIES:
            raise ConfigError(f"unknown basis family {fam!r}")
    if not (1 <= cfg.basis["rho"] <= 4):
        raise ConfigError(f"rho must be in 1..4, got {cfg.basis['rho']}")
    if cfg.is_certificate:
        years = cfg.product["maturity_years"]
        if years < 1:
            raise ConfigError("maturity_years must be at least 1")
        supplied = [
            cfg.product[k] is not None
            for k in ("coupon", "coupon_barrier", "capital_barrier")
        ]
        if any(supplied) and not all(supplied):
            raise ConfigError(
                "coupon, coupon_barrier and capital_barrier must be given together"
            )
        if not any(supplied):
            try:
                standard_certificate(kind, years)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        # certificates regress on all coupon-date observations
        cfg.basis["rho"] = 4
    else:
        if kind in ("asian_fixed", "lookback_fixed") and cfg.product["strike"] is None:
            raise ConfigError(f"{kind} requires a strike")
        if len(cfg.product["window"]) == 0:
            raise ConfigError("empty window grid")
        if any(m < 1 for m in cfg.product["window"]):
            raise ConfigError("window lengths must be at least 1")
        if any(m - 1 > params.N for m in cfg.product["window"]):
            raise ConfigError("window length exceeds the observation grid")
    if len(cfg.basis["family"]) == 0:
        raise ConfigError("empty basis family list")


def make_product(cfg: ExperimentConfig, m: Optional[int]) -> ProductSpec:
    kind = cfg.product["kind"]
    if cfg.is_certificate:
        years = cfg.product["maturity_years"]
        if cfg.product["coupon"] is None:
            return standard_certificate(kind, years, s0_ref=cfg.model["s0"])
        n = COUPONS_PER_YEAR * years
        return CertificateSpec(
            kind=kind,
            coupons=(cfg.product["coupon"],) * n,
            coupon_barrier=cfg.product["coupon_barrier"],
            capital_barrier=cfg.product["capital_barrier"],
            s0_ref=cfg.model["s0"],
        )
    return OptionSpec(
        kind=kind,
        window=WindowSpec(M=m),
        strike=cfg.product["strike"],
        extrema_prefactor=cfg.product["extrema_prefactor"],
    )


def make_basis(cfg: ExperimentConfig, family: str, m: int) -> BasisSpec:
    b = cfg.basis
    risk = RiskSetSpec(rho=b["rho"], M=m)
    if family == "poly":
        return PolyBasisSpec(risk_set=risk, degree=b["degree"], max_columns=b["max_columns"])
    if family == "rffnn":
        return RffnnSpec(risk_set=risk, hidden=b["hidden"], alpha=b["alpha"], seed=b["seed"])
    if family == "rrnn":
        return RrnnSpec(risk_set=risk, hidden=b["hidden"], seed=b["seed"])
    return SignatureBasisSpec(risk_set=risk, order=b["order"], augment=b["augment"])


def certificate_params(cfg: ExperimentConfig, spec: CertificateSpec) -> ModelParams:
    """Grid forced onto the quarterly coupon dates of the certificate."""
    m = cfg.model
    return ModelParams(
        s0=m["s0"],
        r=m["r"],
        q=m["q"],
        sigma=m["sigma"],
        T=spec.maturity_years,
        N=spec.n_dates,
    )


def _regression_config(cfg: ExperimentConfig) -> RegressionConfig:
    return RegressionConfig(
        ridge_lambda=cfg.experiment["ridge_lambda"],
        itm_filter=cfg.experiment["itm_filter"],
    )


def _fmt(value: float, places: int = 6) -> str:
    return f"{value:.{places}f}"


def _write_rows(out: Optional[str], header: str, rows: List[str]) -> None:
    text = "\n".join([header] + rows) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_price(
    cfg: ExperimentConfig,
    out: Optional[str] = None,
    seed: Optional[int] = None,
    n_runs: Optional[int] = None,
    timing: bool = False,
) -> int:
    """Run the price grid; one CSV row per (window x basis family) cell."""
    master_seed = cfg.experiment["seed"] if seed is None else seed
    runs = cfg.experiment["n_runs"] if n_runs is None else n_runs
    reg_cfg = _regression_config(cfg)
    windows: Sequence[Optional[int]] = (
        (None,) if cfg.is_certificate else cfg.product["window"]
    )
    families = cfg.basis["family"]
    if len(windows) == 0 or len(families) == 0:
        raise ConfigError("empty experiment grid")
    rows: List[str] = []
    failures = 0
    for m in windows:
        product = make_product(cfg, m)
        if isinstance(product, CertificateSpec):
            params = certificate_params(cfg, product)
            # certificates have no moving window; the risk sets reduce to
            # the current spot (rho 1-3) or the whole prefix (rho 4)
            basis_m = 1
            m_label = "NA"
        else:
            params = cfg.params
            basis_m = m
            m_label = str(m)
        for family in families:
            basis = make_basis(cfg, family, basis_m)
            try:
                est = run_experiment(
                    product,
                    basis,
                    params,
                    reg_cfg,
                    n_runs=runs,
                    n_train=cfg.experiment["n_train"],
                    n_eval=cfg.experiment["n_eval"],
                    seed=master_seed,
                    antithetic=cfg.experiment["antithetic"],
                )
            except Exception as exc:  # numerical failure: emit NA, keep going
                warnings.warn(
                    f"pricing failed for {product.kind}/{family}/M={m_label}: {exc}",
                    RuntimeWarning,
                    stacklevel=2,
                )
                failures += 1
                rows.append(
                    f"{product.kind},{family},{cfg.basis['rho']},{m_label},NA,NA,NA,{master_seed}"
                )
                continue
            time_s = _fmt(est.time_algo_s, 3) if timing else "NA"
            rows.append(
                ",".join(
                    [
                        product.kind,
                        family,
                        str(cfg.basis["rho"]),
                        m_label,
                        _fmt(est.price),
                        _fmt(est.std_error),
                        time_s,
                        str(master_seed),
                    ]
                )
            )
    _write_rows(out, PRICE_HEADER, rows)
    if out is not None:
        ok = len(rows) - failures
        print(f"wrote {len(rows)} rows to {out} ({ok} priced, {failures} failed)")
    return EXIT_NUMERICAL if failures else EXIT_OK


def _greeks_for_spot(
    cfg: ExperimentConfig,
    product: OptionSpec,
    method: str,
    spot: float,
) -> Tuple[float, float]:
    g = cfg.greeks
    params = replace(cfg.params, s0=spot)
    reg_cfg = _regression_config(cfg)
    basis = make_basis(cfg, cfg.basis["family"][0], product.M)
    if method == "chebyshev":
        pricer, probe = make_lsmc_spot_pricer(
            product,
            basis,
            params,
            reg_cfg,
            n_runs=g["cheb_runs"],
            n_paths=g["cheb_paths"],
            seed=cfg.experiment["seed"],
        )
        report = chebyshev_greeks(
            pricer,
            spot,
            ChebGreeksConfig(
                n_nodes=g["n_nodes"], rel_width=g["rel_width"], n_runs=g["cheb_runs"]
            ),
            probe=probe,
        )
        return report.delta, report.gamma
    if method == "regression":
        report = regression_greeks(
            product,
            basis,
            params,
            reg_cfg,
            epsilon=g["epsilon"],
            n_paths=g["reg_paths"],
            n_runs=g["reg_runs"],
            seed=cfg.experiment["seed"],
        )
        return report.delta, report.gamma
    # tree: only the degenerate-window put reduces to a vanilla Bermudan
    if product.kind != "asian_fixed" or product.M != 1:
        raise ConfigError("the tree method requires asian_fixed with window 1")
    spec = TreeSpec(steps=g["tree_steps"], params=params, option="put", strike=product.strike)
    return tree_greeks(spec)


def cmd_greeks(
    cfg: ExperimentConfig, methods: Sequence[str], out: Optional[str] = None
) -> int:
    """Emit the Delta/Gamma surface CSV over the moneyness grid."""
    if cfg.is_certificate:
        raise ConfigError("greeks are defined for option products")
    for method in methods:
        if method not in GREEK_METHODS:
            raise ConfigError(f"unknown greeks method {method!r}")
    moneyness = cfg.greeks["moneyness"]
    if len(moneyness) == 0 or len(methods) == 0:
        raise ConfigError("empty greeks grid")
    strike = cfg.product["strike"]
    reference = strike if strike is not None else cfg.model["s0"]
    rows: List[str] = []
    failures = 0
    for m in cfg.product["window"]:
        product = make_product(cfg, m)
        for money in moneyness:
            spot = money * reference
            for method in methods:
                try:
                    delta, gamma = _greeks_for_spot(cfg, product, method, spot)
                except ConfigError:
                    raise
                except Exception as exc:
                    warnings.warn(
                        f"greeks failed for M={m} moneyness={money} {method}: {exc}",
                        RuntimeWarning,
                        stacklevel=2,
                    )
                    failures += 1
                    rows.append(f"{product.kind},{m},{_fmt(money, 4)},NA,NA,{method}")
                    continue
                rows.append(
                    f"{product.kind},{m},{_fmt(money, 4)},{_fmt(delta)},{_fmt(gamma)},{method}"
                )
    _write_rows(out, GREEKS_HEADER, rows)
    if out is not None:
        print(f"wrote {len(rows)} rows to {out} ({failures} failed)")
    return EXIT_NUMERICAL if failures else EXIT_OK


def _selftest_checks() -> List[Tuple[str, Callable[[], None]]]:
    from .basis_signature import sig_feature_dim
    from .basis_poly import poly_count
    from .lsmc import fit_policy, price_with_policy
    from .market_model import simulate_paths
    from .oracles import bs_closed_form, tree_price_american

    def check_tree_put() -> None:
        params = ModelParams()
        spec = TreeSpec(steps=2000, params=params, option="put", strike=100.0)
        product = OptionSpec(kind="asian_fixed", window=WindowSpec(M=1), strike=100.0)
        basis = PolyBasisSpec(risk_set=RiskSetSpec(rho=2, M=1))
        est = run_experiment(
            product, basis, params, n_runs=2, n_train=10_000, n_eval=40_000, seed=11
        )
        ref = tree_price_american(spec)
        if abs(est.price - ref) / ref > 0.01:
            raise AssertionError(f"LSMC {est.price:.4f} vs tree {ref:.4f}")

    def check_bs_call() -> None:
        params = ModelParams()
        ref = bs_closed_form(params, 100.0, "call")
        product = OptionSpec(
            kind="lookback_fixed",
            window=WindowSpec(M=1),
            strike=100.0,
            extrema_prefactor="plain",
        )
        basis = PolyBasisSpec(risk_set=RiskSetSpec(rho=2, M=1))
        est = run_experiment(
            product, basis, params, n_runs=2, n_train=10_000, n_eval=40_000, seed=13
        )
        if abs(est.price - ref) > max(4.0 * est.std_error, 0.01 * ref):
            raise AssertionError(f"LSMC {est.price:.4f} vs closed form {ref:.4f}")

    def check_trivial_zero() -> None:
        params = ModelParams()
        product = OptionSpec(kind="asian_floating", window=WindowSpec(M=1))
        basis = PolyBasisSpec(risk_set=RiskSetSpec(rho=2, M=1))
        batch = simulate_paths(params, 4000, np.random.SeedSequence(17))
        policy = fit_policy(batch, product, basis)
        est = price_with_policy(batch, product, policy)
        if est.price != 0.0:
            raise AssertionError(f"expected exactly 0, got {est.price}")

    def check_poly_counts() -> None:
        expected_rho3 = {2: 3, 3: 6, 4: 10, 5: 15, 10: 55, 20: 210, 30: 465}
        for m, want in expected_rho3.items():
            got = poly_count(m - 1, 2)
            if got != want:
                raise AssertionError(f"rho3 M={m}: {got} != {want}")
        if poly_count(1, 2) != 3 or poly_count(2, 2) != 6:
            raise AssertionError("rho1/rho2 widths")
        if poly_count(49, 2) != 1275:
            raise AssertionError("rho4 width at the last regression date")

    def check_signature_counts() -> None:
        expected = {2: 12, 3: 39, 4: 120, 5: 363}
        for order, want in expected.items():
            got = sig_feature_dim(3, order)
            if got != want:
                raise AssertionError(f"signature d=3 n={order}: {got} != {want}")

    def check_chen() -> None:
        from .basis_signature import PiecewiseLinearPath, signature, chen_product

        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(23)))
        verts = rng.standard_normal((7, 3))
        path = PiecewiseLinearPath(verts)
        left = PiecewiseLinearPath(verts[:4])
        right = PiecewiseLinearPath(verts[3:])
        whole = signature(path, 4)
        glued = chen_product(signature(left, 4), signature(right, 4))
        err = max(
            float(np.abs(a - b).max()) for a, b in zip(whole.levels, glued.levels)
        )
        if err > 1e-10:
            raise AssertionError(f"Chen identity deviation {err:.2e}")

    return [
        ("binomial-tree oracle (M=1 put)", check_tree_put),
        ("closed-form oracle (M=1 plain look-back call)", check_bs_call),
        ("trivial zero payoff (floating Asian M=1)", check_trivial_zero),
        ("polynomial basis widths", check_poly_counts),
        ("signature basis widths", check_signature_counts),
        ("Chen identity", check_chen),
    ]


def cmd_selftest() -> int:
    """Fast oracle-equivalence suite; prints one pass/fail line per check."""
    failures = 0
    for name, check in _selftest_checks():
        try:
            check()
        except Exception as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}")
    print(f"{'FAILED' if failures else 'OK'} ({failures} failure(s))")
    return EXIT_NUMERICAL if failures else EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amcpricer",
        description="Monte Carlo pricing of American-style path-dependent contracts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_price = sub.add_parser("price", help="run the configured price grid")
    p_price.add_argument("--config", required=True, help="INI experiment configuration")
    p_price.add_argument("--seed", type=int, default=None, help="override the master seed")
    p_price.add_argument("--runs", type=int, default=None, help="override the run count")
    p_price.add_argument("--out", default=None, help="output CSV (default: stdout)")
    p_price.add_argument(
        "--timing",
        action="store_true",
        help="fill the time_s column (breaks byte-identical repeats)",
    )

    p_greeks = sub.add_parser("greeks", help="emit a Delta/Gamma surface")
    p_greeks.add_argument("--config", required=True, help="INI experiment configuration")
    p_greeks.add_argument(
        "--method",
        required=True,
        help="comma list from {chebyshev, regression, tree}",
    )
    p_greeks.add_argument("--out", default=None, help="output CSV (default: stdout)")

    sub.add_parser("selftest", help="run the fast oracle-equivalence checks")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return EXIT_CONFIG if exc.code not in (0,) else EXIT_OK
    try:
        if args.command == "selftest":
            return cmd_selftest()
        cfg = load_config(args.config)
        if args.command == "price":
            return cmd_price(
                cfg, out=args.out, seed=args.seed, n_runs=args.runs, timing=args.timing
            )
        methods = tuple(t.strip() for t in args.method.split(",") if t.strip())
        return cmd_greeks(cfg, methods, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
