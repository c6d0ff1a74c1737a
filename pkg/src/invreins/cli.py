"""Command-line front end.

Exit codes: 0 all outputs written; 1 unexpected failure; 2 invalid
configuration or arguments; 3 an output file could not be written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from invreins.claims import ClaimSizeModel, Uniform, claim_model_from_dict
from invreins.core import ModelParams, ParameterError, validate
from invreins.premium import PremiumPrinciple
from invreins.valuation import Solution, cells_to_csv, cells_to_json, indifference_value, table_delta_zeta

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_OUTPUT = 0, 1, 2, 3
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)

# parameters the numerical study does not pin down
SILENT_PARAMETERS = ("lam", "r0_capital", "s0", "epsilon", "claims", "premium", "rho")


class ConfigError(ValueError):
    pass


@dataclass
class Numerics:
    n_steps: int = 2000
    n_paths: int = 10_000
    seed: int = 0
    workers: int = 1
    table_tolerance: float = 5e-3


@dataclass
class Output:
    directory: str = "out"
    formats: list[str] = field(default_factory=lambda: ["csv"])


@dataclass
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    claims: ClaimSizeModel = field(default_factory=Uniform)
    premium: PremiumPrinciple = field(default_factory=PremiumPrinciple)
    numerics: Numerics = field(default_factory=Numerics)
    output: Output = field(default_factory=Output)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "claims": self.claims.to_dict(),
            "premium": self.premium.to_dict(),
            "numerics": asdict(self.numerics),
            "output": asdict(self.output),
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = {"model", "claims", "premium", "numerics", "output"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
        try:
            model = _build(ModelParams, d.get("model", {}), "model")
            claims = claim_model_from_dict(d["claims"]) if "claims" in d else Uniform()
            premium = _build(PremiumPrinciple, d.get("premium", {}), "premium")
            numerics = _build(Numerics, d.get("numerics", {}), "numerics")
            output = _build(Output, d.get("output", {}), "output")
        except ParameterError as exc:
            raise ConfigError(f"model.{exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        bad = set(output.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"output.formats: unsupported {sorted(bad)}")
        return cls(model, claims, premium, numerics, output)

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            if path.suffix == ".json":
                data = json.loads(raw)
            else:
                data = tomllib.loads(raw.decode("utf-8"))
        except (ValueError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(data)

    def dumps_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())


def _build(kind, block: dict, name: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{name}: expected a table")
    names = {f.name for f in fields(kind)}
    extra = set(block) - names
    if extra:
        raise ConfigError(f"{name}: unknown keys {sorted(extra)}")
    return kind(**block)


def header(cfg: RunConfig) -> list[str]:
    m = cfg.model
    lines = [
        "# invreins run",
        f"# model: {json.dumps(m.to_dict(), sort_keys=True)}",
        f"# claims: {json.dumps(cfg.claims.to_dict(), sort_keys=True)}",
        f"# premium: {json.dumps(cfg.premium.to_dict(), sort_keys=True)}",
        "# not fixed by the reference study (configuration only): " + ", ".join(SILENT_PARAMETERS),
    ]
    return lines


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _columns_csv(cols: dict[str, np.ndarray]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(cols)
    w.writerow(names)
    for row in zip(*(np.asarray(cols[n]) for n in names)):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _columns_json(cols: dict[str, np.ndarray]) -> str:
    names = list(cols)
    recs = [{n: float(v) for n, v in zip(names, row)} for row in zip(*(np.asarray(cols[n]) for n in names))]
    return json.dumps(recs, indent=1)


def _emit_columns(out: Path, stem: str, cols, formats) -> list[Path]:
    written = []
    for fmt in formats:
        p = out / f"{stem}.{fmt}"
        _write(p, _columns_csv(cols) if fmt == "csv" else _columns_json(cols))
        written.append(p)
    return written


def _floats(text: str | None, default):
    if text is None:
        return list(default)
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def cmd_validate(cfg: RunConfig, args) -> int:
    sol = Solution.build(cfg.model, cfg.claims, cfg.premium, n_steps=cfg.numerics.n_steps)
    report = validate(cfg.model, sol.curve.p_bar)
    for line in header(cfg) + report.lines():
        print(line)
    if args.out:
        out = Path(args.out)
        _write(out / "validation.json", json.dumps(asdict(report), indent=2))
    return EXIT_OK


def cmd_tables(cfg: RunConfig, args) -> int:
    out = Path(cfg.output.directory)
    t_list = _floats(args.t_list, (3.0, 5.0, 10.0))
    base = cfg.model
    num = cfg.numerics
    p0s = _floats(args.p0_list, (0.0, 0.01, 0.03))
    rhos = _floats(args.rho_list, (0.0, 0.2, 0.7))
    t1 = table_delta_zeta("p0", p0s, t_list, base.with_(rho=0.0), num.n_steps, num.table_tolerance)
    t2 = table_delta_zeta("rho", rhos, t_list, base.with_(p0=0.0), num.n_steps, num.table_tolerance)
    for line in header(cfg):
        print(line)
    for title, cells in (("table1 (rows P0, rho=0)", t1), ("table2 (rows rho, P0=0)", t2)):
        print(title)
        for c in cells:
            rec = c.record()
            print("  " + "  ".join(f"{k}={v}" for k, v in rec.items()))
        stem = title.split()[0]
        for fmt in cfg.output.formats:
            _write(out / f"{stem}.{fmt}", cells_to_csv(cells) if fmt == "csv" else cells_to_json(cells))
    return EXIT_OK


def cmd_figures(cfg: RunConfig, args) -> int:
    from invreins.mc import figure_data

    rhos = _floats(args.rhos, (0.0, 0.2, 0.7, 1.0))
    sols = {}
    for rho in rhos:
        prm = cfg.model.with_(rho=rho)
        sols[rho] = Solution.build(prm, cfg.claims, cfg.premium, n_steps=cfg.numerics.n_steps)
    data = figure_data(sols, cfg.numerics.n_paths, cfg.numerics.seed, cfg.numerics.workers)
    out = Path(cfg.output.directory)
    for stem, cols in data.items():
        for p in _emit_columns(out, stem, cols, cfg.output.formats):
            print(f"wrote {p}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    from invreins.mc import simulate

    prm = cfg.model
    sol = Solution.build(prm, cfg.claims, cfg.premium, n_steps=cfg.numerics.n_steps)
    res = simulate(sol, args.strategy, cfg.numerics.n_paths, seed=cfg.numerics.seed, workers=cfg.numerics.workers)
    util, se = res.empirical_utility(prm.eta)
    summary = {
        "strategy": res.strategy,
        "n_paths": res.n_paths,
        "n_steps": int(sol.curve.n_steps),
        "seed": res.seed,
        "empirical_utility": util,
        "empirical_utility_se": se,
        "closed_form_utility_affine_psi": sol.expected_utility(),
        "closed_form_utility_quadratic_psi": sol.expected_utility(quadratic=True),
        "indifference_value": indifference_value(prm, sol.curve),
        "terminal_wealth_mean": float(res.terminal_wealth.mean()),
        "terminal_wealth_quantiles": {
            f"q{round(100 * q):02d}": float(v) for q, v in zip(QUANTILES, np.quantile(res.terminal_wealth, QUANTILES))
        },
        "warnings": res.warnings,
    }
    for line in header(cfg):
        print(line)
    for k, v in summary.items():
        print(f"{k}: {v}")
    out = Path(cfg.output.directory)
    _write(out / "simulate_summary.json", json.dumps(summary, indent=2))
    cols = {"t": res.grid}
    for name in ("x", "pi", "err2", "theta", "wealth"):
        cols[f"{name}_mean"] = res.mean[name]
        cols[f"{name}_se"] = res.std_error(name)
    _emit_columns(out, "simulate_series", cols, cfg.output.formats)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=["csv", "json"], action="append", dest="formats")
    common.add_argument("--paths", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--threads", type=int)

    parser = argparse.ArgumentParser(prog="invreins", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check the parameter bounds")
    p = sub.add_parser("tables", parents=[common], help="indifference value tables")
    p.add_argument("--t-list", help="comma-separated horizons (default 3,5,10)")
    p.add_argument("--p0-list", help="comma-separated P0 rows (default 0,0.01,0.03)")
    p.add_argument("--rho-list", help="comma-separated rho rows (default 0,0.2,0.7)")
    p = sub.add_parser("figures", parents=[common], help="figure data for a seed")
    p.add_argument("--rhos", help="comma-separated correlations (default 0,0.2,0.7,1)")
    p = sub.add_parser("simulate", parents=[common], help="strategy simulation and utility")
    p.add_argument("--strategy", default="optimal", choices=["optimal", "myopic", "passive", "full"])
    sub.add_parser("dump-config", parents=[common], help="print the effective configuration as TOML")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    num = cfg.numerics
    if args.seed is not None:
        num.seed = args.seed
    if args.paths is not None:
        num.n_paths = args.paths
    if args.steps is not None:
        num.n_steps = args.steps
    if args.threads is not None:
        num.workers = args.threads
    if args.out is not None:
        cfg.output.directory = args.out
    if args.formats:
        cfg.output.formats = list(dict.fromkeys(args.formats))
    if num.n_paths < 2 or num.n_steps < 200 or num.workers < 1:
        raise ConfigError("numerics: need n_paths >= 2, n_steps >= 200, workers >= 1")
    return cfg


COMMANDS = {"validate": cmd_validate, "tables": cmd_tables, "figures": cmd_figures, "simulate": cmd_simulate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "dump-config":
            sys.stdout.write(cfg.dumps_toml())
            return EXIT_OK
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    except Exception as exc:  # noqa: BLE001 - report, never traceback
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
