import pytest

from keytone.cgats import CgatsDocument, parse_cgats


def _doc():
    d = CgatsDocument()
    d.keywords["ORIGINATOR"] = "test"
    d.keywords["DESCRIPTOR"] = "two words"
    d.fields = ["SAMPLE_ID", "LAB_L"]
    d.rows = [["A1", "50.0"], ["A2", "60.5"]]
    return d


def test_round_trip():
    text = _doc().serialize()
    back = parse_cgats(text)
    assert back.preamble == "CGATS.17"
    assert back.keywords["ORIGINATOR"] == "test"
    assert back.keywords["DESCRIPTOR"] == "two words"
    assert back.fields == ["SAMPLE_ID", "LAB_L"]
    assert back.rows == [["A1", "50.0"], ["A2", "60.5"]]


def test_serialized_shape():
    text = _doc().serialize()
    lines = text.split("\n")
    assert lines[0] == "CGATS.17"
    assert "NUMBER_OF_FIELDS 2" in lines
    assert "NUMBER_OF_SETS 2" in lines
    assert text.endswith("END_DATA\n")
    assert "\r" not in text


def test_blank_lines_ignored():
    text = _doc().serialize().replace("BEGIN_DATA\n", "BEGIN_DATA\n\n")
    assert len(parse_cgats(text).rows) == 2


def test_row_width_mismatch():
    text = _doc().serialize().replace("A2 60.5", "A2 60.5 extra")
    with pytest.raises(ValueError):
        parse_cgats(text)


def test_missing_format_block():
    with pytest.raises(ValueError):
        parse_cgats("CGATS.17\nKEY \"v\"\n")
