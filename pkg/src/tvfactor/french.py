"""Kenneth French data-library ingestion.

Parses the library's CSV layout (free-text preamble, one or more titled
sections, YYYYMM-keyed monthly rows, YYYY-keyed annual rows) into
``RawSection`` objects, converts monthly sections to ``ReturnPanel``, and
manages a local download cache keyed by dataset and download vintage.
"""

from __future__ import annotations

import csv
import datetime
import enum
import io
import urllib.request
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from filelock import FileLock

from .errors import (
    CorruptDataset,
    FetchFailed,
    GapInSeries,
    NoMonthlySection,
    RaggedRow,
)
from .panel import MonthStamp, ReturnPanel

BASE_URL = "https://mba.tuck.dartmouth.edu/pages/faculty/ken.french/ftp"

# Cells the library uses to mark unavailable observations.
MISSING_SENTINELS = {"-99.99", "-999"}


class Region(enum.Enum):
    US = "us"
    JAPAN = "japan"
    EUROPE = "europe"


class Kind(enum.Enum):
    FACTORS3 = "factors3"
    FACTORS5 = "factors5"
    MOMENTUM = "momentum"
    PORTFOLIOS25_SIZE_BM = "portfolios25_size_bm"


# Canonical remote file names (without the "_CSV.zip" suffix).
REGISTRY: dict[tuple[Region, Kind], str] = {
    (Region.US, Kind.FACTORS3): "F-F_Research_Data_Factors",
    (Region.US, Kind.FACTORS5): "F-F_Research_Data_5_Factors_2x3",
    (Region.US, Kind.MOMENTUM): "F-F_Momentum_Factor",
    (Region.US, Kind.PORTFOLIOS25_SIZE_BM): "25_Portfolios_5x5",
    (Region.JAPAN, Kind.FACTORS3): "Japan_3_Factors",
    (Region.JAPAN, Kind.FACTORS5): "Japan_5_Factors",
    (Region.JAPAN, Kind.MOMENTUM): "Japan_Mom_Factor",
    (Region.JAPAN, Kind.PORTFOLIOS25_SIZE_BM): "Japan_25_Portfolios_ME_BE-ME",
    (Region.EUROPE, Kind.FACTORS3): "Europe_3_Factors",
    (Region.EUROPE, Kind.FACTORS5): "Europe_5_Factors",
    (Region.EUROPE, Kind.MOMENTUM): "Europe_Mom_Factor",
    (Region.EUROPE, Kind.PORTFOLIOS25_SIZE_BM): "Europe_25_Portfolios_ME_BE-ME",
}


@dataclass(frozen=True)
class DatasetId:
    region: Region
    kind: Kind

    @property
    def remote_name(self) -> str:
        return REGISTRY[(self.region, self.kind)]

    @property
    def slug(self) -> str:
        return f"{self.region.value}_{self.kind.value}"

    @property
    def url(self) -> str:
        return f"{BASE_URL}/{self.remote_name}_CSV.zip"


@dataclass(frozen=True)
class RawSection:
    """One titled block of a French-library CSV file."""

    title: str
    header: tuple[str, ...]
    keys: tuple[str, ...]          # date keys as written (YYYYMM or YYYY)
    rows: np.ndarray               # len(keys) x len(header) floats, NaN = missing

    @property
    def is_monthly(self) -> bool:
        return len(self.keys) > 0 and all(len(k) == 6 for k in self.keys)


def _parse_cell(cell: str) -> float:
    s = cell.strip()
    if s in MISSING_SENTINELS or s == "":
        return np.nan
    return float(s)


def _is_date_key(cell: str) -> bool:
    s = cell.strip()
    return s.isdigit() and len(s) in (4, 6)


def parse_french_csv(text: str) -> list[RawSection]:
    """Split a French-library CSV into sections, in file order.

    Line endings (CRLF vs LF) do not affect the result. Sentinel cells
    (-99.99, -999) are parsed as missing (NaN).
    """
    reader = csv.reader(io.StringIO(text.replace("\r\n", "\n").replace("\r", "\n")))
    lines = list(reader)

    sections: list[RawSection] = []
    title_lines: list[str] = []
    header: tuple[str, ...] | None = None
    keys: list[str] = []
    rows: list[list[float]] = []

    def flush():
        nonlocal header, keys, rows, title_lines
        if header is not None and keys:
            data = np.array(rows, dtype=float).reshape(len(keys), len(header))
            sections.append(
                RawSection(
                    title=" ".join(title_lines).strip(),
                    header=header,
                    keys=tuple(keys),
                    rows=data,
                )
            )
            title_lines = []
        header, keys, rows = None, [], []

    for cells in lines:
        if not cells or all(c.strip() == "" for c in cells):
            flush()
            continue
        first = cells[0].strip()
        if header is not None and _is_date_key(first):
            if len(cells) - 1 != len(header):
                raise RaggedRow(
                    f"row {first}: {len(cells) - 1} values, header has {len(header)}"
                )
            keys.append(first)
            rows.append([_parse_cell(c) for c in cells[1:]])
        elif first == "" and len(cells) > 1:
            # Header row: leading empty cell, then the column labels.
            flush()
            header = tuple(c.strip() for c in cells[1:])
        else:
            # Free text: preamble or a section title.
            if header is not None:
                flush()
            title_lines.append(",".join(cells).strip())
    flush()
    return sections


def serialize_section(section: RawSection) -> str:
    """Inverse of parse_french_csv for a single section (round-trip exact)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    if section.title:
        writer.writerow([section.title])
    writer.writerow([""] + list(section.header))
    for key, row in zip(section.keys, section.rows):
        cells = [key]
        for v in row:
            cells.append("-99.99" if np.isnan(v) else repr(float(v)))
        writer.writerow(cells)
    writer.writerow([])
    return out.getvalue()


def first_monthly_section(sections: list[RawSection]) -> RawSection:
    for s in sections:
        if s.is_monthly:
            return s
    raise NoMonthlySection("no section keyed by YYYYMM dates")


def to_panel(section: RawSection, percent: bool = True) -> ReturnPanel:
    """Convert a monthly section to a ReturnPanel (percent -> decimal)."""
    if not section.is_monthly:
        raise NoMonthlySection(f"section {section.title!r} is not monthly")
    dates = [MonthStamp.parse(k) for k in section.keys]
    idx = [d.index for d in dates]
    if any(b - a != 1 for a, b in zip(idx, idx[1:])):
        raise GapInSeries("monthly section has non-contiguous dates")
    values = section.rows / 100.0 if percent else section.rows
    return ReturnPanel(tuple(dates), section.header, values)


def _cached_file(dataset: DatasetId, cache_dir: Path) -> Path | None:
    """Most recent cached raw file for a dataset, or None."""
    root = cache_dir / dataset.slug
    if not root.is_dir():
        return None
    candidates = sorted(
        (p for vintage in sorted(root.iterdir()) if vintage.is_dir()
         for p in vintage.iterdir() if p.is_file()),
        key=lambda p: (p.parent.name, p.name),
    )
    return candidates[-1] if candidates else None


def cache_vintage(dataset: DatasetId, cache_dir: Path) -> str | None:
    path = _cached_file(dataset, Path(cache_dir))
    return path.parent.name if path is not None else None


def _download(dataset: DatasetId, cache_dir: Path) -> Path:
    vintage = datetime.date.today().isoformat()
    dest_dir = cache_dir / dataset.slug / vintage
    lock = FileLock(str(cache_dir / f".{dataset.slug}.lock"))
    with lock:
        try:
            with urllib.request.urlopen(dataset.url, timeout=60) as resp:
                payload = resp.read()
        except Exception as exc:
            raise FetchFailed(f"download of {dataset.url} failed: {exc}") from exc
        dest_dir.mkdir(parents=True, exist_ok=True)
        if zipfile.is_zipfile(io.BytesIO(payload)):
            with zipfile.ZipFile(io.BytesIO(payload)) as zf:
                members = [n for n in zf.namelist() if not n.endswith("/")]
                if len(members) != 1:
                    raise CorruptDataset(
                        f"{dataset.url}: expected one CSV in archive, got {members}"
                    )
                name = Path(members[0]).name
                raw = zf.read(members[0])
        else:
            name = f"{dataset.remote_name}.CSV"
            raw = payload
        dest = dest_dir / name
        tmp = dest.with_suffix(dest.suffix + ".tmp")
        tmp.write_bytes(raw)
        tmp.replace(dest)
    return dest


def fetch(dataset: DatasetId, cache_dir, offline: bool = False) -> ReturnPanel:
    """Return the dataset's monthly panel, downloading into the cache if needed.

    Raw files are stored byte-exact under <cache_dir>/<dataset>/<vintage>/.
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = _cached_file(dataset, cache_dir)
    if path is None:
        if offline:
            raise FetchFailed(
                f"offline and no cached copy of {dataset.slug} under {cache_dir}"
            )
        path = _download(dataset, cache_dir)
    text = path.read_bytes().decode("utf-8", errors="replace")
    try:
        section = first_monthly_section(parse_french_csv(text))
    except NoMonthlySection as exc:
        raise CorruptDataset(f"{path}: {exc}") from exc
    if len(section.keys) < 12:
        raise CorruptDataset(f"{path}: monthly section has only {len(section.keys)} rows")
    return to_panel(section, percent=True)
