"""Raw defect visit records and their projection onto a regular time grid.

Crack-length inspections happen at irregular dates. Training needs a
fixed-frequency grid, so each defect's visits are linearly interpolated
(on the day axis) onto a grid of calendar-month steps spanning the
observed date range. Exogenous features are carried from the nearest
visit in time. Series showing a physically impossible drop between
consecutive grid points are rejected wholesale; small drops are kept
because the ultrasonic measurement itself can shrink under e.g. thermal
compression of the rail.
"""

from __future__ import annotations

import calendar
import csv
import datetime as dt
from dataclasses import dataclass

import numpy as np

DEFAULT_STEP_MONTHS = 3
DEFAULT_LENGTH_CAP = 59
DEFAULT_DROP_THRESHOLD_MM = 15.0


@dataclass
class DefectSeries:
    """One defect's raw visit records, ordered by date."""

    defect_id: str
    dates: list[dt.date]
    lengths_mm: np.ndarray  # (V,)
    features: np.ndarray    # (V, M)

    def __post_init__(self):
        self.lengths_mm = np.asarray(self.lengths_mm, dtype=np.float64)
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim == 1:
            self.features = self.features[:, np.newaxis]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


@dataclass
class RegularSeries:
    """Fixed-frequency series: grid point i sits `i * step_months` after start."""

    defect_id: str
    grid_start: dt.date
    step_months: int
    lengths_mm: np.ndarray  # (T,)
    features: np.ndarray    # (T, M)

    def __post_init__(self):
        self.lengths_mm = np.asarray(self.lengths_mm, dtype=np.float64)
        self.features = np.asarray(self.features, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.lengths_mm)

    def grid_dates(self) -> list[dt.date]:
        return [add_months(self.grid_start, i * self.step_months) for i in range(len(self))]


def add_months(date: dt.date, months: int) -> dt.date:
    """Calendar-month shift, clamping the day to the target month's length."""
    month_index = date.year * 12 + (date.month - 1) + months
    year, month = divmod(month_index, 12)
    month += 1
    day = min(date.day, calendar.monthrange(year, month)[1])
    return dt.date(year, month, day)


def validate_and_interpolate(
    raw: DefectSeries,
    step_months: int = DEFAULT_STEP_MONTHS,
    length_cap: int = DEFAULT_LENGTH_CAP,
) -> RegularSeries:
    """Validate a raw series and resample it onto the regular grid.

    Lengths are linearly interpolated against day ordinals; features are
    copied from the visit nearest in time (ties resolve to the earlier
    visit). The grid spans [first visit, last visit] and is truncated to
    `length_cap` points.
    """
    if len(raw.dates) == 0:
        raise ValueError(f"defect {raw.defect_id}: series has no visits")
    if not (len(raw.dates) == len(raw.lengths_mm) == len(raw.features)):
        raise ValueError(f"defect {raw.defect_id}: misaligned visit fields")
    if not np.all(np.isfinite(raw.lengths_mm)) or np.any(raw.lengths_mm < 0):
        raise ValueError(f"defect {raw.defect_id}: lengths must be finite and >= 0")
    if not np.all(np.isfinite(raw.features)):
        raise ValueError(f"defect {raw.defect_id}: features must be finite")
    if step_months < 1:
        raise ValueError("step_months must be >= 1")

    order = np.argsort([d.toordinal() for d in raw.dates], kind="stable")
    dates = [raw.dates[i] for i in order]
    lengths = raw.lengths_mm[order]
    features = raw.features[order]
    for prev, cur in zip(dates, dates[1:]):
        if cur == prev:
            raise ValueError(f"defect {raw.defect_id}: duplicate visit date {cur.isoformat()}")

    start = dates[0]
    last_ordinal = dates[-1].toordinal()
    grid_dates = []
    i = 0
    while len(grid_dates) < length_cap:
        d = add_months(start, i * step_months)
        if d.toordinal() > last_ordinal:
            break
        grid_dates.append(d)
        i += 1

    visit_x = np.array([d.toordinal() for d in dates], dtype=np.float64)
    grid_x = np.array([d.toordinal() for d in grid_dates], dtype=np.float64)
    grid_lengths = np.interp(grid_x, visit_x, lengths)
    nearest = np.abs(grid_x[:, np.newaxis] - visit_x[np.newaxis, :]).argmin(axis=1)
    grid_features = features[nearest]

    return RegularSeries(
        defect_id=raw.defect_id,
        grid_start=start,
        step_months=step_months,
        lengths_mm=grid_lengths,
        features=grid_features,
    )


def filter_physical_drops(
    series: RegularSeries, threshold_mm: float = DEFAULT_DROP_THRESHOLD_MM
) -> bool:
    """True iff no consecutive pair drops by more than `threshold_mm`."""
    drops = series.lengths_mm[:-1] - series.lengths_mm[1:]
    return bool(drops.size == 0 or drops.max() <= threshold_mm)


def write_visits_csv(path, corpus: list[DefectSeries]) -> None:
    """Visit CSV: one row per visit, `defect_id,date,length_mm,f1..fM`."""
    feature_dim = corpus[0].feature_dim if corpus else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["defect_id", "date", "length_mm"] + [f"f{i + 1}" for i in range(feature_dim)]
        )
        for series in corpus:
            for date, length, feats in zip(series.dates, series.lengths_mm, series.features):
                writer.writerow(
                    [series.defect_id, date.isoformat(), repr(float(length))]
                    + [repr(float(v)) for v in feats]
                )


def read_visits_csv(path) -> list[DefectSeries]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: missing CSV header") from None
        if header[:3] != ["defect_id", "date", "length_mm"]:
            raise ValueError(f"{path}: unexpected header {header[:3]}")
        feature_names = header[3:]
        rows: dict[str, list] = {}
        order: list[str] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3 + len(feature_names):
                raise ValueError(f"{path}:{line_no}: expected {3 + len(feature_names)} fields")
            defect_id = row[0]
            if defect_id not in rows:
                rows[defect_id] = []
                order.append(defect_id)
            rows[defect_id].append(
                (
                    dt.date.fromisoformat(row[1]),
                    float(row[2]),
                    [float(v) for v in row[3:]],
                )
            )
    corpus = []
    for defect_id in order:
        visits = rows[defect_id]
        corpus.append(
            DefectSeries(
                defect_id=defect_id,
                dates=[v[0] for v in visits],
                lengths_mm=np.array([v[1] for v in visits], dtype=np.float64),
                features=np.array([v[2] for v in visits], dtype=np.float64).reshape(
                    len(visits), len(feature_names)
                ),
            )
        )
    return corpus
