"""Pipeline driver: ingestion -> pre-tests -> estimation -> serialized outputs.

Outputs are UTF-8 CSV (RFC 4180, dates as YYYY-MM) written atomically;
a JSON manifest records everything needed to replay a run byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from .adf import LagSelection, adf_test
from .bootstrap import BootstrapConfig, bootstrap_bands, flag_significance
from .errors import ConfigError, MissingSeries, TvFactorError
from .french import DatasetId, Kind, Region, cache_vintage, fetch
from .models import Model, ModelSpec, static_ols
from .panel import MonthStamp, ReturnPanel, align, describe, excess_returns
from .tv import DEFAULT_LAMBDA_GRID, build_problem, select_lambda, solve_tv

# First month with usable data, per region and model.
AVAILABILITY_START = {
    (Region.US, Model.FF3): MonthStamp(1926, 7),
    (Region.US, Model.FF5): MonthStamp(1963, 7),
    (Region.US, Model.FF6): MonthStamp(1963, 7),
    (Region.JAPAN, Model.FF3): MonthStamp(1990, 7),
    (Region.JAPAN, Model.FF5): MonthStamp(1990, 7),
    (Region.JAPAN, Model.FF6): MonthStamp(1990, 11),
    (Region.EUROPE, Model.FF3): MonthStamp(1990, 7),
    (Region.EUROPE, Model.FF5): MonthStamp(1990, 7),
    (Region.EUROPE, Model.FF6): MonthStamp(1990, 11),
}


@dataclass(frozen=True)
class RunConfig:
    model: Model
    region: Region
    start: MonthStamp | None = None
    end: MonthStamp | None = None
    lam: float | None = None
    n_boot: int = 500
    level: float = 0.95
    seed: int = 0
    cache_dir: Path = Path("cache")
    out_dir: Path = Path("out")
    offline: bool = False


def datasets_for(config: RunConfig) -> list[DatasetId]:
    kinds = {
        Model.FF3: [Kind.FACTORS3],
        Model.FF5: [Kind.FACTORS5],
        Model.FF6: [Kind.FACTORS5, Kind.MOMENTUM],
    }[config.model]
    kinds = kinds + [Kind.PORTFOLIOS25_SIZE_BM]
    return [DatasetId(config.region, kind) for kind in kinds]


def _normalize_momentum(panel: ReturnPanel) -> ReturnPanel:
    # The U.S. momentum file labels its single column "Mom"; regional files
    # use "WML". Canonical label is WML.
    names = tuple("WML" if n.strip().lower() in ("mom", "wml") else n for n in panel.names)
    return ReturnPanel(panel.dates, names, panel.values, panel.mask)


def load_panels(config: RunConfig) -> tuple[ReturnPanel, ReturnPanel, dict[str, str]]:
    """Fetch, align and window the factor and excess-portfolio panels."""
    spec = ModelSpec(config.model)
    panels = []
    vintages: dict[str, str] = {}
    portfolio_names: tuple[str, ...] = ()
    for ds in datasets_for(config):
        panel = fetch(ds, config.cache_dir, offline=config.offline)
        if ds.kind is Kind.MOMENTUM:
            panel = _normalize_momentum(panel)
        if ds.kind is Kind.PORTFOLIOS25_SIZE_BM:
            portfolio_names = panel.names
        panels.append(panel)
        vintages[ds.slug] = cache_vintage(ds, config.cache_dir) or "unknown"

    aligned = align(panels)
    start = AVAILABILITY_START[(config.region, config.model)]
    if config.start is not None and config.start > start:
        start = config.start
    aligned = aligned.window(start, config.end)

    factors = aligned.select(spec.factor_labels)
    ports = aligned.select(tuple(portfolio_names) + ("RF",))
    excess = excess_returns(ports, "RF")
    return factors, excess, vintages


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def _csv_bytes(header: list[str], rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _fmt(x: float) -> str:
    return repr(float(x))


def run_describe(config: RunConfig) -> bytes:
    """Per-factor descriptive statistics and unit-root tests as CSV."""
    factors, _, _ = load_panels(config)
    rows = []
    for name in factors.names:
        series = factors.column(name)
        stats = describe(series)
        adf = adf_test(series, LagSelection())
        rows.append(
            [
                config.model.value,
                config.region.value,
                name,
                f"{stats.mean:.4f}",
                f"{stats.sd:.4f}",
                f"{stats.min:.4f}",
                f"{stats.max:.4f}",
                f"{adf.statistic:.4f}",
                adf.lag,
                stats.n,
                "yes" if adf.reject_1pct else "no",
            ]
        )
    header = [
        "model", "region", "factor", "mean", "sd", "min", "max",
        "adf", "lags", "n", "reject_1pct",
    ]
    return _csv_bytes(header, rows)


def run_estimate(config: RunConfig) -> dict[str, Path]:
    """Full pipeline; writes estimates.csv, bands.csv and manifest.json."""
    spec = ModelSpec(config.model)
    factors, excess, vintages = load_panels(config)
    fit = static_ols(spec, excess, factors)
    gamma0 = fit.coef.ravel()

    if config.lam is not None:
        lam = config.lam
    else:
        lam, _ = select_lambda(spec, excess, factors, gamma0=gamma0,
                               grid=DEFAULT_LAMBDA_GRID)

    problem = build_problem(spec, excess, factors, gamma0=gamma0, lam=lam)
    solution = solve_tv(problem)
    bands = bootstrap_bands(
        spec, excess, factors, fit,
        BootstrapConfig(n_reps=config.n_boot, level=config.level,
                        seed=config.seed, lam=lam),
    )
    significant = flag_significance(solution, bands)

    m = spec.m
    coef_names = spec.coef_names
    est_rows = []
    band_rows = []
    for i, portfolio in enumerate(excess.names):
        for j, coef in enumerate(coef_names):
            col = i * m + j
            for t, date in enumerate(excess.dates):
                est_rows.append(
                    [
                        config.model.value,
                        config.region.value,
                        portfolio,
                        str(date),
                        coef,
                        _fmt(solution.gamma[t, col]),
                        _fmt(bands.lower[t, col]),
                        _fmt(bands.upper[t, col]),
                        int(significant[t, col]),
                    ]
                )
                band_rows.append(
                    [
                        portfolio,
                        str(date),
                        coef,
                        _fmt(bands.lower[t, col]),
                        _fmt(bands.upper[t, col]),
                    ]
                )

    out = Path(config.out_dir)
    paths = {
        "estimates": out / "estimates.csv",
        "bands": out / "bands.csv",
        "manifest": out / "manifest.json",
    }
    _atomic_write(
        paths["estimates"],
        _csv_bytes(
            ["model", "region", "portfolio", "date", "coefficient",
             "estimate", "lower", "upper", "significant"],
            est_rows,
        ),
    )
    _atomic_write(
        paths["bands"],
        _csv_bytes(["portfolio", "date", "coefficient", "lower", "upper"], band_rows),
    )
    manifest = {
        "tool_version": __version__,
        "model": config.model.value,
        "region": config.region.value,
        "start": str(excess.start),
        "end": str(excess.end),
        "lambda": lam,
        "lambda_source": "cli" if config.lam is not None else "likelihood-grid",
        "gamma0_policy": "static-ols",
        "n_boot": config.n_boot,
        "level": config.level,
        "seed": config.seed,
        "vintages": vintages,
    }
    _atomic_write(
        paths["manifest"],
        (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"),
    )
    return paths


def run_plotdata(config: RunConfig, portfolio: str, coefficient: str) -> list[Path]:
    """Emit tidy (date, estimate, lower, upper) files from a finished run."""
    est_path = Path(config.out_dir) / "estimates.csv"
    if not est_path.is_file():
        raise TvFactorError(f"no estimates at {est_path}; run estimate first")
    with est_path.open(newline="", encoding="utf-8") as fh:
        records = list(csv.DictReader(fh))

    portfolios = sorted({r["portfolio"] for r in records})
    if portfolio != "all" and portfolio not in portfolios:
        raise MissingSeries(f"portfolio {portfolio!r} not in estimates")
    if coefficient not in {r["coefficient"] for r in records}:
        raise MissingSeries(f"coefficient {coefficient!r} not in estimates")
    wanted = portfolios if portfolio == "all" else [portfolio]

    written = []
    for name in wanted:
        rows = [
            [r["date"], r["estimate"], r["lower"], r["upper"]]
            for r in records
            if r["portfolio"] == name and r["coefficient"] == coefficient
        ]
        slug = "".join(c if c.isalnum() else "_" for c in f"{name}_{coefficient}")
        path = Path(config.out_dir) / "plotdata" / f"{slug}.csv"
        _atomic_write(path, _csv_bytes(["date", "estimate", "lower", "upper"], rows))
        written.append(path)
    return written


def _month(_ctx, _param, value):
    if value is None:
        return None
    try:
        return MonthStamp.parse(value)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc


def _common_options(fn):
    fn = click.option("--model", type=click.Choice([m.value for m in Model]),
                      required=True)(fn)
    fn = click.option("--region", type=click.Choice([r.value for r in Region]),
                      required=True)(fn)
    fn = click.option("--start", callback=_month, default=None,
                      help="YYYY-MM window start")(fn)
    fn = click.option("--end", callback=_month, default=None,
                      help="YYYY-MM window end")(fn)
    fn = click.option("--cache-dir", type=click.Path(path_type=Path),
                      default=Path("cache"))(fn)
    fn = click.option("--out", "out_dir", type=click.Path(path_type=Path),
                      default=Path("out"))(fn)
    fn = click.option("--offline", is_flag=True, default=False)(fn)
    return fn


def _config(model, region, start, end, cache_dir, out_dir, offline, **extra) -> RunConfig:
    if start is not None and end is not None and end < start:
        raise ConfigError(f"start {start} is after end {end}")
    return RunConfig(
        model=Model(model), region=Region(region), start=start, end=end,
        cache_dir=cache_dir, out_dir=out_dir, offline=offline, **extra,
    )


def _run(action):
    try:
        action()
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except TvFactorError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@click.group()
@click.version_option(__version__)
def main():
    """Time-varying Fama-French factor loadings with bootstrap bands."""


@main.command("fetch")
@_common_options
def cmd_fetch(**kw):
    """Download (or verify, with --offline) the datasets for a run."""

    def action():
        config = _config(**kw)
        for ds in datasets_for(config):
            fetch(ds, config.cache_dir, offline=config.offline)
            vintage = cache_vintage(ds, config.cache_dir)
            click.echo(f"{ds.slug}: cached, vintage {vintage}")

    _run(action)


@main.command("describe")
@_common_options
def cmd_describe(**kw):
    """Print a per-factor descriptive-statistics and ADF report (CSV)."""
    _run(lambda: click.echo(run_describe(_config(**kw)).decode("utf-8"), nl=False))


@main.command("estimate")
@_common_options
@click.option("--lambda", "lam", type=float, default=None,
              help="Smoothness ratio; default: likelihood grid search")
@click.option("--n-boot", type=int, default=500, show_default=True)
@click.option("--level", type=float, default=0.95, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_estimate(**kw):
    """Estimate coefficient paths and bootstrap bands; write CSV outputs."""

    def action():
        paths = run_estimate(_config(**kw))
        for name, path in paths.items():
            click.echo(f"{name}: {path}")

    _run(action)


@main.command("plotdata")
@_common_options
@click.option("--portfolio", default="all", show_default=True)
@click.option("--coefficient", required=True)
def cmd_plotdata(portfolio, coefficient, **kw):
    """Write per-series (date, estimate, lower, upper) files."""

    def action():
        for path in run_plotdata(_config(**kw), portfolio, coefficient):
            click.echo(str(path))

    _run(action)


if __name__ == "__main__":
    main()
