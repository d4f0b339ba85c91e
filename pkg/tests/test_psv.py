import pytest

from sepserve.records import (
    EmptyFileError,
    HeaderMismatchError,
    LAB_KEYS,
    NonNumericValueError,
    VITAL_KEYS,
    parse_psv,
)


def test_basic_field_mapping():
    rec = parse_psv("HR|O2Sat|ICULOS\n90|NaN|1\n", patient_id="p1")
    assert len(rec.rows) == 1
    row = rec.rows[0]
    assert row.vitals["HR"] == 90.0
    assert row.vitals["O2Sat"] is None
    assert row.iculos == 1


def test_header_only_file_gives_zero_rows():
    rec = parse_psv("HR|O2Sat|ICULOS\n", patient_id="p1")
    assert rec.rows == []


def test_canonical_key_sets_always_present():
    rec = parse_psv("HR|ICULOS\n81|3\n", patient_id="p1")
    row = rec.rows[0]
    assert set(row.vitals) == set(VITAL_KEYS)
    assert set(row.labs) == set(LAB_KEYS)


def test_empty_file_rejected():
    with pytest.raises(EmptyFileError):
        parse_psv(b"", patient_id="p1")
    with pytest.raises(EmptyFileError):
        parse_psv("\n\n", patient_id="p1")


def test_header_mismatch_reports_line_number():
    with pytest.raises(HeaderMismatchError) as exc:
        parse_psv("HR|O2Sat|ICULOS\n90|95|1\n80|1\n", patient_id="p1")
    assert exc.value.line_no == 3


def test_non_numeric_reports_column_and_line():
    with pytest.raises(NonNumericValueError) as exc:
        parse_psv("HR|ICULOS\nhigh|1\n", patient_id="p1")
    assert exc.value.column == "HR"
    assert exc.value.line_no == 2


def test_fractional_iculos_rejected():
    with pytest.raises(NonNumericValueError):
        parse_psv("HR|ICULOS\n90|1.5\n", patient_id="p1")


def test_unknown_columns_go_to_spill():
    rec = parse_psv("HR|Weird|ICULOS\n90|7.5|1\n80|NaN|2\n", patient_id="p1")
    assert rec.spill == {"Weird": [7.5, None]}


def test_sepsis_label_parsed_and_validated():
    rec = parse_psv("HR|ICULOS|SepsisLabel\n90|1|0\n91|2|1\n", patient_id="p1")
    assert [r.sepsis_label for r in rec.rows] == [0, 1]
    with pytest.raises(NonNumericValueError):
        parse_psv("HR|ICULOS|SepsisLabel\n90|1|2\n", patient_id="p1")


def test_physionet_fixture_nan_counts_match_text_scan(psv_dir):
    # independent oracle: count NaN tokens per column straight off the text
    path = psv_dir / "p000001.psv"
    lines = path.read_text().strip().splitlines()
    header = lines[0].split("|")
    nan_counts = {name: 0 for name in header}
    for line in lines[1:]:
        for name, token in zip(header, line.split("|")):
            if token == "NaN":
                nan_counts[name] += 1

    rec = parse_psv(path.read_bytes(), patient_id="p000001")
    assert len(rec.rows) == len(lines) - 1
    for name in header:
        if name in VITAL_KEYS:
            absent = sum(1 for r in rec.rows if r.vitals[name] is None)
        elif name in LAB_KEYS:
            absent = sum(1 for r in rec.rows if r.labs[name] is None)
        else:
            continue
        assert absent == nan_counts[name], name
