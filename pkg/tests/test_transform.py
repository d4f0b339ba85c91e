import pytest

from sepserve.records import (
    EmptySeriesError,
    NoTimestampsError,
    align_temporal,
    impute_series,
    parse_psv,
    verify_record,
)
from sepserve.records.types import HourlyRow, PatientRecord


def _record(rows_spec) -> PatientRecord:
    """rows_spec: list of (iculos, vitals overrides dict)."""
    rows = []
    for iculos, vitals in rows_spec:
        row = HourlyRow.empty(iculos)
        row.vitals.update(vitals)
        rows.append(row)
    return PatientRecord(patient_id="px", rows=rows)


# --- verify_record ---------------------------------------------------------

def test_verify_flags_duplicate_hours():
    rec = _record([(1, {}), (2, {}), (2, {})])
    report = verify_record(rec)
    assert report.duplicate_iculos == [2]
    assert not report.clean


def test_verify_flags_out_of_range_values():
    rec = _record([(1, {"HR": -5.0})])
    report = verify_record(rec)
    assert [v.variable for v in report.out_of_range] == ["HR"]
    violation = report.out_of_range[0]
    assert (violation.low, violation.high) == (0.0, 300.0)
    # report-only: record untouched
    assert rec.rows[0].vitals["HR"] == -5.0


def test_verify_missing_fraction_direct_count():
    rows = [(i, {"HR": 80.0}) for i in range(1, 8)] + [(i, {}) for i in range(8, 11)]
    report = verify_record(_record(rows))
    assert report.missing_fraction["HR"] == pytest.approx(0.30)


# --- align_temporal --------------------------------------------------------

def test_align_sorts_by_hour():
    rec = _record([(3, {"HR": 70.0}), (1, {"HR": 71.0}), (2, {"HR": 72.0})])
    aligned = align_temporal(rec)
    assert [r.iculos for r in aligned.rows] == [1, 2, 3]
    assert [r.vitals["HR"] for r in aligned.rows] == [71.0, 72.0, 70.0]


def test_align_fills_gaps_with_absent_rows():
    rec = _record([(1, {"HR": 70.0}), (3, {"HR": 72.0})])
    aligned = align_temporal(rec)
    assert [r.iculos for r in aligned.rows] == [1, 2, 3]
    gap = aligned.rows[1]
    assert all(v is None for v in gap.vitals.values())
    assert all(v is None for v in gap.labs.values())


def test_align_duplicate_merge_last_observation_wins():
    rec = _record([(5, {"HR": 80.0, "Temp": 37.0}), (5, {"HR": 82.0})])
    aligned = align_temporal(rec)
    assert len(aligned.rows) == 1
    assert aligned.rows[0].vitals["HR"] == 82.0
    assert aligned.rows[0].vitals["Temp"] == 37.0  # observed value survives


def test_align_idempotent():
    rec = _record([(4, {"HR": 70.0}), (1, {"HR": 71.0}), (1, {"Temp": 36.0})])
    once = align_temporal(rec)
    twice = align_temporal(once)
    assert once == twice


def test_align_requires_timestamps():
    rec = _record([(None, {"HR": 70.0})])
    with pytest.raises(NoTimestampsError):
        align_temporal(rec)


def test_align_without_iculos_column():
    rec = parse_psv("HR|O2Sat\n90|95\n", patient_id="p1")
    with pytest.raises(NoTimestampsError):
        align_temporal(rec)


# --- impute_series ---------------------------------------------------------

def test_impute_linear_midpoint():
    assert impute_series([1.0, None, 3.0], fallback=0.0) == [1.0, 2.0, 3.0]


def test_impute_backfill_leading():
    assert impute_series([None, None, 7.0], fallback=0.0) == [7.0, 7.0, 7.0]


def test_impute_forward_fill_trailing():
    assert impute_series([4.0, None, None], fallback=0.0) == [4.0, 4.0, 4.0]


def test_impute_all_absent_uses_fallback():
    assert impute_series([None] * 5, fallback=36.6) == [36.6] * 5


def test_impute_empty_series_rejected():
    with pytest.raises(EmptySeriesError):
        impute_series([], fallback=1.0)


def test_impute_interior_multi_gap_interpolation():
    out = impute_series([10.0, None, None, None, 18.0], fallback=0.0)
    assert out == [10.0, 12.0, 14.0, 16.0, 18.0]
