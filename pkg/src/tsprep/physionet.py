"""PhysioNet 2012 and 2019 challenge record parsing.

The 2012 challenge stores one patient per text file in a long format
(``Time,Parameter,Value`` rows, ``HH:MM`` stamps, ``-1`` marking missing
values, channels in arbitrary order). Records are pivoted to a wide matrix
in the fixed 45-column order below. The 2019 challenge uses one
pipe-separated ``.psv`` row per hour with a per-row ``SepsisLabel``.
"""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

# Wide-format 2012 column order. Column 0 is the time stamp in minutes since
# ICU admission; 1-37 are time series; 38-44 are derived from the static
# descriptors (ICUType one-hot encoded into 41-44).
PHYSIONET_2012_CHANNELS: tuple[str, ...] = (
    "Mins",
    "Albumin",
    "ALP",
    "ALT",
    "AST",
    "Bilirubin",
    "BUN",
    "Cholesterol",
    "Creatinine",
    "DiasABP",
    "FiO2",
    "GCS",
    "Glucose",
    "HCO3",
    "HCT",
    "HR",
    "K",
    "Lactate",
    "Mg",
    "MAP",
    "MechVent",
    "Na",
    "NIDiasABP",
    "NIMAP",
    "NISysABP",
    "PaCO2",
    "PaO2",
    "pH",
    "Platelets",
    "RespRate",
    "SaO2",
    "SysABP",
    "Temp",
    "TroponinI",
    "TroponinT",
    "Urine",
    "WBC",
    "Weight",
    "Age",
    "Gender",
    "Height",
    "ICUType1",
    "ICUType2",
    "ICUType3",
    "ICUType4",
)

# Time series parameter -> data-column index (0-based within the 44 data
# columns, i.e. channel number minus one). The data dictionary's TropI/TropT
# spellings are accepted alongside the full names used in the record files.
_SERIES_PARAMS: dict[str, int] = {
    name: i for i, name in enumerate(PHYSIONET_2012_CHANNELS[1:38])
}
_SERIES_PARAMS["TropI"] = _SERIES_PARAMS["TroponinI"]
_SERIES_PARAMS["TropT"] = _SERIES_PARAMS["TroponinT"]

_STATIC_PARAMS = ("Age", "Gender", "Height", "ICUType")


class RecordParseError(ValueError):
    """Raised for malformed patient record or outcome files."""


@dataclass
class PatientRecord:
    """One patient's observations on a strictly increasing time grid.

    ``times`` are minutes since admission (2012) or ICULOS hours (2019);
    ``values`` is a rows x data-channels matrix with NaN for missing cells.
    2019 records carry per-row ``step_labels``; 2012 records carry the
    static descriptor values in ``static_fields``.
    """

    record_id: str
    times: np.ndarray
    values: np.ndarray
    channel_names: tuple[str, ...]
    static_fields: Optional[dict[str, float]] = None
    step_labels: Optional[np.ndarray] = None

    @property
    def n_steps(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class Outcome2012:
    record_id: str
    in_hospital_death: int


def _clean(value: str) -> float:
    """Parse a 2012 value; -1 is the challenge's missing indicator."""
    value = value.strip()
    if value == "":
        return math.nan
    try:
        v = float(value)
    except ValueError:
        raise RecordParseError(f"unparseable value {value!r}") from None
    return math.nan if v == -1.0 else v


def _parse_minutes(stamp: str) -> int:
    parts = stamp.strip().split(":")
    if len(parts) != 2:
        raise RecordParseError(f"unparseable time stamp {stamp!r}")
    try:
        hours, minutes = int(parts[0]), int(parts[1])
    except ValueError:
        raise RecordParseError(f"unparseable time stamp {stamp!r}") from None
    if hours < 0 or not 0 <= minutes < 60:
        raise RecordParseError(f"unparseable time stamp {stamp!r}")
    return 60 * hours + minutes


def parse_patient_2012(text: str) -> PatientRecord:
    """Pivot one long-format 2012 record to the wide 44-data-channel layout.

    The time grid is the sorted set of minutes carrying at least one time
    series measurement; a later duplicate of the same (parameter, minute)
    cell wins. Static descriptors (including any -1 in the descriptor rows,
    which parses as missing) are broadcast to every row, with ICUType one-hot
    encoded and an unknown ICUType leaving all four indicator columns NaN.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        head = next(reader)
    except StopIteration:
        raise RecordParseError("empty record file") from None
    if [h.strip() for h in head] != ["Time", "Parameter", "Value"]:
        raise RecordParseError(f"unexpected header {head!r}")

    record_id: Optional[str] = None
    statics: dict[str, float] = {}
    cells: dict[tuple[int, int], float] = {}
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise RecordParseError(f"expected 3 columns, got {row!r}")
        stamp, param, value = (col.strip() for col in row)
        minute = _parse_minutes(stamp)
        if param == "RecordID":
            record_id = str(int(float(value)))
            continue
        if param in _STATIC_PARAMS:
            statics[param] = _clean(value)
            continue
        col = _SERIES_PARAMS.get(param)
        if col is None:
            raise RecordParseError(f"unknown parameter name {param!r}")
        cells[(minute, col)] = _clean(value)

    if record_id is None:
        raise RecordParseError("missing RecordID row")

    grid = sorted({minute for minute, _ in cells})
    row_of = {minute: i for i, minute in enumerate(grid)}
    values = np.full((len(grid), 44), np.nan)
    for (minute, col), v in cells.items():
        values[row_of[minute], col] = v

    # statics broadcast to every time step; data columns are channel - 1
    age = statics.get("Age", math.nan)
    gender = statics.get("Gender", math.nan)
    height = statics.get("Height", math.nan)
    icu_type = statics.get("ICUType", math.nan)
    values[:, 37] = age  # channel 38
    values[:, 38] = gender  # channel 39
    values[:, 39] = height  # channel 40
    if icu_type in (1.0, 2.0, 3.0, 4.0):
        onehot = np.zeros(4)
        onehot[int(icu_type) - 1] = 1.0
        values[:, 40:44] = onehot  # channels 41-44
    else:
        values[:, 40:44] = np.nan

    return PatientRecord(
        record_id=record_id,
        times=np.array(grid, dtype=np.float64),
        values=values,
        channel_names=PHYSIONET_2012_CHANNELS[1:],
        static_fields={
            "age": age,
            "gender": gender,
            "height": height,
            "icu_type": icu_type,
        },
    )


def parse_outcomes_2012(text: str) -> dict[str, Outcome2012]:
    """Parse an ``Outcomes-*.txt`` file to a record_id -> outcome map."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "In-hospital_death" not in reader.fieldnames:
        raise RecordParseError("outcomes file lacks an In-hospital_death column")
    outcomes: dict[str, Outcome2012] = {}
    for row in reader:
        record_id = str(int(float(row["RecordID"])))
        if record_id in outcomes:
            raise RecordParseError(f"duplicate record id {record_id}")
        label = row["In-hospital_death"].strip()
        if label not in ("0", "1"):
            raise RecordParseError(f"label {label!r} for record {record_id} not in {{0, 1}}")
        outcomes[record_id] = Outcome2012(record_id=record_id, in_hospital_death=int(label))
    return outcomes


def parse_patient_2019(text: str, record_id: str = "") -> PatientRecord:
    """Parse one 2019 ``.psv`` file: one row per hour, ``|``-separated,
    empty cells missing, ``ICULOS`` as the time stamp and per-row
    ``SepsisLabel`` targets."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise RecordParseError("empty record file")
    header = [h.strip() for h in lines[0].split("|")]
    for required in ("ICULOS", "SepsisLabel"):
        if required not in header:
            raise RecordParseError(f"missing {required} column")
    iculos_col = header.index("ICULOS")
    label_col = header.index("SepsisLabel")
    data_cols = [i for i in range(len(header)) if i not in (iculos_col, label_col)]

    times, labels, rows = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("|")
        if len(cells) != len(header):
            raise RecordParseError(
                f"line {lineno}: expected {len(header)} columns, got {len(cells)}"
            )

        def cell(i: int) -> float:
            token = cells[i].strip()
            if token == "" or token.lower() == "nan":
                return math.nan
            return float(token)

        times.append(cell(iculos_col))
        label = cell(label_col)
        if label not in (0.0, 1.0):
            raise RecordParseError(f"line {lineno}: SepsisLabel must be 0 or 1")
        labels.append(int(label))
        rows.append([cell(i) for i in data_cols])

    times_arr = np.array(times, dtype=np.float64)
    if np.isnan(times_arr).any() or (np.diff(times_arr) <= 0).any():
        raise RecordParseError("ICULOS values must be strictly increasing")
    return PatientRecord(
        record_id=record_id,
        times=times_arr,
        values=np.array(rows, dtype=np.float64).reshape(len(times), len(data_cols)),
        channel_names=tuple(header[i] for i in data_cols),
        step_labels=np.array(labels, dtype=np.int64),
    )


def to_binary_2019(record: PatientRecord) -> tuple[PatientRecord, int]:
    """Binary sepsis variant: keep the first 72 ICULOS hours; the label is 1
    iff any row of the full stay is septic (onset after the cutoff still
    labels 1)."""
    if record.step_labels is None:
        raise ValueError("record has no per-step sepsis labels")
    keep = record.times <= 72.0
    if not keep.any():
        raise RecordParseError(f"record {record.record_id}: no rows within 72 hours")
    label = int(record.step_labels.max())
    truncated = PatientRecord(
        record_id=record.record_id,
        times=record.times[keep],
        values=record.values[keep],
        channel_names=record.channel_names,
        step_labels=record.step_labels[keep],
    )
    return truncated, label


def _read_parallel(paths: list[Path], parse, workers: int) -> list:
    def job(path: Path):
        return parse(path)

    if workers <= 1:
        return [job(p) for p in paths]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, paths))


def load_records_2012(directory: Path, workers: int = 1) -> tuple[list[PatientRecord], int]:
    """Parse every ``set-*/*.txt`` record under ``directory``.

    Returns records sorted by record id (so output is independent of file
    order and worker count) plus the count of records dropped for having no
    time series rows.
    """
    paths = sorted(directory.glob("set-*/*.txt"))
    if not paths:
        raise FileNotFoundError(f"no set-*/ record files under {directory}")

    def parse(path: Path) -> PatientRecord:
        return parse_patient_2012(path.read_text())

    records = _read_parallel(paths, parse, workers)
    kept = [r for r in records if r.n_steps > 0]
    kept.sort(key=lambda r: int(r.record_id))
    return kept, len(records) - len(kept)


def load_outcomes_2012(directory: Path) -> dict[str, Outcome2012]:
    paths = sorted(directory.glob("Outcomes-*.txt"))
    if not paths:
        raise FileNotFoundError(f"no Outcomes-*.txt under {directory}")
    outcomes: dict[str, Outcome2012] = {}
    for path in paths:
        part = parse_outcomes_2012(path.read_text())
        dupes = outcomes.keys() & part.keys()
        if dupes:
            raise RecordParseError(f"duplicate record ids across outcome files: {sorted(dupes)}")
        outcomes.update(part)
    return outcomes


def load_records_2019(
    directory: Path, workers: int = 1, binary: bool = False
) -> tuple[list[PatientRecord], np.ndarray, int]:
    """Parse every ``training_set*/*.psv`` under ``directory``, sorted by
    record id.

    Returns ``(records, labels, dropped)``. For the binary variant, records
    are truncated to 72 ICULOS hours, ``labels`` are the per-stay binary
    outcomes and patients with no rows inside the window are dropped (and
    counted); otherwise ``labels`` is empty and per-step labels stay on the
    records.
    """
    paths = sorted(directory.glob("training_set*/*.psv"))
    if not paths:
        raise FileNotFoundError(f"no training_set*/ .psv files under {directory}")

    def parse(path: Path) -> PatientRecord:
        return parse_patient_2019(path.read_text(), record_id=path.stem)

    records = _read_parallel(paths, parse, workers)
    records = [r for r in records if r.n_steps > 0]
    dropped = len(paths) - len(records)
    records.sort(key=lambda r: r.record_id)
    if not binary:
        return records, np.empty(0, dtype=np.int64), dropped

    kept: list[PatientRecord] = []
    labels: list[int] = []
    for record in records:
        try:
            truncated, label = to_binary_2019(record)
        except RecordParseError:
            dropped += 1
            continue
        kept.append(truncated)
        labels.append(label)
    return kept, np.array(labels, dtype=np.int64), dropped
