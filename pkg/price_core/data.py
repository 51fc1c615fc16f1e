"""
Sales-record ingestion: schema, loading, cleaning, correlation and CSV echoes.
"""
import datetime as dt
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .errors import ContractError, EmptyDatasetError, PriceRadarError, RowParseError, SchemaError

logger = logging.getLogger("price_radar.data")

SENTINEL = -99.0

COLUMNS = ["Date", "AveragePrice", "type", "year", "Region", "4046", "4225", "4770", "Salesvolume", "weather"]
NUMERIC_COLUMNS = ["AveragePrice", "4046", "4225", "4770", "Salesvolume", "weather"]
TYPES = ("conventional", "organic")
SERIES_KEY = ["Region", "type"]
CORRELATION_COLUMNS = ["Date", "AveragePrice", "4046", "4225", "4770", "Salesvolume", "weather", "year"]

COLUMN_MAP = {
    "date": "Date", "averageprice": "AveragePrice", "type": "type", "year": "year",
    "region": "Region", "4046": "4046", "plu4046": "4046", "4225": "4225", "plu4225": "4225",
    "4770": "4770", "plu4770": "4770", "salesvolume": "Salesvolume", "totalvolume": "Salesvolume",
    "weather": "weather",
}


@dataclass(frozen=True)
class RawRecord:
    date: dt.date
    average_price: float
    type: str
    year: int
    region: str
    plu4046: float
    plu4225: float
    plu4770: float
    sales_volume: float
    weather: float


@dataclass
class CleanReport:
    rows_before: int
    rows_after: int
    dropped: Dict[str, int] = field(default_factory=dict)

    @property
    def total_dropped(self) -> int:
        return self.rows_before - self.rows_after


@dataclass
class RecordTable:
    """Validated frame with the canonical columns, one row per (Date, Region, type) week."""
    frame: pd.DataFrame
    null_counts: Dict[str, int] = field(default_factory=dict)
    report: Optional[CleanReport] = None

    def __len__(self) -> int:
        return len(self.frame)

    def records(self) -> List[RawRecord]:
        return [
            RawRecord(
                date=row["Date"].date(), average_price=float(row["AveragePrice"]), type=row["type"],
                year=int(row["year"]), region=row["Region"], plu4046=float(row["4046"]),
                plu4225=float(row["4225"]), plu4770=float(row["4770"]),
                sales_volume=float(row["Salesvolume"]), weather=float(row["weather"]),
            )
            for row in self.frame[COLUMNS].to_dict("records")
        ]

    @property
    def dates(self) -> np.ndarray:
        return self.frame["Date"].to_numpy()


def canonicalize_columns(df: pd.DataFrame) -> pd.DataFrame:
    m = {}
    for c in df.columns:
        key = str(c).strip().lower().replace(" ", "").replace("_", "")
        m[c] = COLUMN_MAP.get(key, str(c).strip())
    return df.rename(columns=m)


def _first_bad(bad: pd.Series) -> Optional[int]:
    idx = np.flatnonzero(bad.to_numpy())
    return int(idx[0]) if idx.size else None


def _parse_numeric(raw: pd.Series, column: str) -> pd.Series:
    text = raw.str.strip()
    values = pd.to_numeric(text.where(text != ""), errors="coerce")
    bad = (text != "") & (values.isna() | ~np.isfinite(values.fillna(0.0)))
    first = _first_bad(bad)
    if first is not None:
        raise RowParseError(first + 2, column, raw.iloc[first])
    return values.astype(np.float64)


_FIELD_COUNT = re.compile(r"Expected (\d+) fields in line (\d+), saw (\d+)")


def _row_error(path: Path, error: pd.errors.ParserError) -> PriceRadarError:
    """Map a tokenizer failure to the offending file line."""
    match = _FIELD_COUNT.search(str(error))
    if match is None:
        return SchemaError(f"❌ {path} is not a well-formed CSV: {error}")
    expected, line, saw = (int(g) for g in match.groups())
    return RowParseError(line, "row", f"{saw} fields, expected {expected}")


def load_csv(path: Union[str, Path]) -> RecordTable:
    """Parse a sales CSV into a RecordTable; empty cells become nulls."""
    path = Path(path)
    if not path.exists():
        raise PriceRadarError(f"❌ Dataset file not found: {path}")
    logger.info(f"📊 Loading dataset from: {path}")
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"❌ {path} has no header row") from None
    except pd.errors.ParserError as e:
        raise _row_error(path, e) from None
    except UnicodeDecodeError as e:
        raise SchemaError(f"❌ {path} is not UTF-8 text (byte {e.start}: {e.reason})") from None

    raw = canonicalize_columns(raw)
    missing = [c for c in COLUMNS if c not in raw.columns]
    if missing:
        raise SchemaError(f"❌ Mandatory column missing: {missing[0]}"
                          + (f" (also {', '.join(missing[1:])})" if len(missing) > 1 else ""),
                          column=missing[0])
    raw = raw[COLUMNS]

    frame = pd.DataFrame(index=raw.index)
    dates_text = raw["Date"].str.strip()
    frame["Date"] = pd.to_datetime(dates_text.where(dates_text != ""), format="%Y-%m-%d", errors="coerce")
    first = _first_bad((dates_text != "") & frame["Date"].isna())
    if first is not None:
        raise RowParseError(first + 2, "Date", raw["Date"].iloc[first])

    for col in NUMERIC_COLUMNS:
        frame[col] = _parse_numeric(raw[col], col)

    year = _parse_numeric(raw["year"], "year")
    first = _first_bad(year.notna() & (year != np.round(year)))
    if first is not None:
        raise RowParseError(first + 2, "year", raw["year"].iloc[first])
    date_year = frame["Date"].dt.year
    first = _first_bad(year.notna() & date_year.notna() & (year != SENTINEL) & (year != date_year))
    if first is not None:
        raise RowParseError(first + 2, "year", raw["year"].iloc[first])
    frame["year"] = year.fillna(date_year.astype(np.float64))

    kind = raw["type"].str.strip().str.lower()
    first = _first_bad((kind != "") & ~kind.isin(TYPES))
    if first is not None:
        raise RowParseError(first + 2, "type", raw["type"].iloc[first])
    frame["type"] = kind.where(kind != "")

    region = raw["Region"].str.strip()
    frame["Region"] = region.where(region != "")
    frame = frame[COLUMNS]

    null_counts = {c: int(n) for c, n in frame.isnull().sum().items()}
    logger.info(f"✅ Raw data loaded: {len(frame):,} rows, {len(frame.columns)} columns")
    for col, n in null_counts.items():
        if n:
            logger.info(f"   • {col}: {n:,} null values")
    return RecordTable(frame, null_counts)


def clean(table: RecordTable) -> RecordTable:
    """Drop sentinel, null, non-positive-price and duplicate rows; sort by series then date."""
    df = table.frame
    rows_before = len(df)
    dropped: Dict[str, int] = {}

    numeric = df[NUMERIC_COLUMNS + ["year"]]
    sentinel = (numeric == SENTINEL).any(axis=1)
    dropped["sentinel"] = int(sentinel.sum())
    df = df[~sentinel]

    nulls = df.isnull().any(axis=1)
    dropped["null"] = int(nulls.sum())
    df = df[~nulls]

    non_positive = df["AveragePrice"] <= 0
    dropped["non_positive_price"] = int(non_positive.sum())
    df = df[~non_positive]

    before_dedup = len(df)
    df = df.drop_duplicates(subset=["Date"] + SERIES_KEY, keep="last")
    dropped["duplicate"] = before_dedup - len(df)

    df = df.sort_values(SERIES_KEY + ["Date"], kind="mergesort").reset_index(drop=True)
    df["year"] = df["year"].astype(np.int64)
    report = CleanReport(rows_before, len(df), dropped)

    for reason, n in dropped.items():
        if n:
            logger.info(f"🔧 Dropped {n:,} rows ({reason})")
    if df.empty:
        raise EmptyDatasetError(f"❌ No rows left after cleaning ({rows_before:,} rows in, all dropped)")
    logger.info(f"✅ Clean: {rows_before:,} → {len(df):,} rows")
    return RecordTable(df, {c: 0 for c in COLUMNS}, report)


def _numeric_view(frame: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    out = pd.DataFrame(index=frame.index)
    for col in columns:
        if col not in frame.columns:
            raise SchemaError(f"unknown column {col!r}", column=col)
        if col == "Date":
            out[col] = frame[col].map(pd.Timestamp.toordinal).astype(np.float64)
        elif pd.api.types.is_numeric_dtype(frame[col]):
            out[col] = frame[col].astype(np.float64)
        else:
            raise ContractError(f"column {col!r} is not numeric")
    return out


def correlation_matrix(table: RecordTable, columns: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Pearson correlations between numeric columns (Date as its ordinal).
    Entries involving a zero-variance column are NaN ("undefined"); the diagonal is 1.
    """
    columns = list(columns or CORRELATION_COLUMNS)
    if len(table) < 2:
        raise ContractError("correlation needs at least 2 rows")
    values = _numeric_view(table.frame, columns)
    corr = values.corr(method="pearson").clip(-1.0, 1.0)
    constant = values.std(ddof=0) == 0
    for col in constant[constant].index:
        logger.warning(f"⚠️ {col} has zero variance; its correlations are undefined")
        corr.loc[col, :] = np.nan
        corr.loc[:, col] = np.nan
    for col in columns:
        corr.loc[col, col] = 1.0
    return corr


def write_correlation_csv(matrix: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix.to_csv(path, na_rep="undefined")
    return path


def write_table_csv(table: RecordTable, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.frame.to_csv(path, index=False, date_format="%Y-%m-%d")
    return path


def price_by_type(table: RecordTable) -> pd.DataFrame:
    """Weekly mean price per avocado type, the series behind the density and trend views."""
    out = table.frame.groupby(["Date", "type"])["AveragePrice"].mean().unstack("type")
    return out.reset_index()
