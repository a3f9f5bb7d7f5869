"""Shared fixtures: synthetic French-format files and a prebuilt cache."""

import os
from pathlib import Path

import numpy as np
import pytest

from tvfactor.french import DatasetId, Kind, Region, fetch
from tvfactor.panel import MonthStamp, ReturnPanel, month_range


def french_portfolio_labels():
    """Column labels in the order the 25-portfolio files use."""
    labels = []
    for me in range(1, 6):
        for bm in range(1, 6):
            if me in (1, 5) and bm in (1, 5):
                size = "SMALL" if me == 1 else "BIG"
                value = "LoBM" if bm == 1 else "HiBM"
                labels.append(f"{size} {value}")
            else:
                labels.append(f"ME{me} BM{bm}")
    return labels


def french_csv_text(header, start, values_pct, title="", preamble=None):
    """Render a monthly section in the French library layout (percent units)."""
    lines = list(
        preamble
        if preamble is not None
        else ["This file was created for tests.", "Monthly returns in percent.", ""]
    )
    if title:
        lines.append(title)
    lines.append("," + ",".join(header))
    date = start
    for row in values_pct:
        cells = ",".join(f"{v:.2f}" for v in row)
        lines.append(f"{date.year:04d}{date.month:02d},{cells}")
        date = date.successor()
    lines.append("")
    return "\r\n".join(lines) + "\r\n"


def write_cached(cache_dir: Path, dataset: DatasetId, text: str, vintage="2022-04-01"):
    dest = cache_dir / dataset.slug / vintage
    dest.mkdir(parents=True, exist_ok=True)
    (dest / f"{dataset.remote_name}.CSV").write_text(text, encoding="utf-8")


def build_synthetic_cache(cache_dir: Path, seed=7, T=120, start=MonthStamp(1990, 1),
                          betas=None, noise_sd=2.0):
    """US FF3 factor + 25-portfolio files with a known linear DGP (percent).

    Portfolio returns are RF + alpha + B @ factors + noise; ``betas`` maps
    factor name -> length-25 loading vector (defaults are heterogeneous).
    """
    rng = np.random.default_rng(seed)
    mkt = rng.normal(0.6, 4.5, T)
    smb = rng.normal(0.2, 3.0, T)
    hml = rng.normal(0.3, 3.0, T)
    rf = np.full(T, 0.25)
    factors = np.column_stack([mkt, smb, hml, rf])
    write_cached(
        cache_dir,
        DatasetId(Region.US, Kind.FACTORS3),
        french_csv_text(["Mkt-RF", "SMB", "HML", "RF"], start, factors),
    )

    labels = french_portfolio_labels()
    if betas is None:
        grid = np.arange(25)
        betas = {
            "Mkt-RF": 0.9 + 0.2 * rng.random(25),
            "SMB": 1.2 - 0.3 * (grid // 5),    # small caps load higher
            "HML": -0.3 + 0.15 * (grid % 5),   # growth loads lower
        }
    B = np.column_stack([betas["Mkt-RF"], betas["SMB"], betas["HML"]])
    ports = (
        rf[:, None]
        + np.column_stack([mkt, smb, hml]) @ B.T
        + rng.normal(0.0, noise_sd, (T, 25))
    )
    write_cached(
        cache_dir,
        DatasetId(Region.US, Kind.PORTFOLIOS25_SIZE_BM),
        french_csv_text(labels, start, ports, title="Average Value Weighted Returns -- Monthly"),
    )
    return cache_dir


@pytest.fixture
def synthetic_cache(tmp_path):
    cache = tmp_path / "cache"
    return build_synthetic_cache(cache)


def random_panel(rng, start, end, names, scale=0.05):
    dates = month_range(start, end)
    values = rng.normal(0.0, scale, (len(dates), len(names)))
    return ReturnPanel(dates, tuple(names), values)


@pytest.fixture(scope="session")
def real_cache():
    """Cache directory holding real French-library downloads, if present.

    Point TVFACTOR_CACHE at a cache populated by `tvfactor fetch` to enable
    the data-vintage-conditional checks.
    """
    candidates = [os.environ.get("TVFACTOR_CACHE"), "data/cache"]
    for cand in candidates:
        if not cand:
            continue
        path = Path(cand)
        try:
            fetch(DatasetId(Region.US, Kind.FACTORS3), path, offline=True)
        except Exception:
            continue
        return path
    pytest.skip("no cached French-library data (set TVFACTOR_CACHE to enable)")
