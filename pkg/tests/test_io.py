import numpy as np
import pytest

from ellwishart.io import DatasetFormatError, RecordNotSPDError, read_matrix_file, write_matrix_file
from oracles import random_spd


def test_round_trip_is_lossless(tmp_path, rng):
    mats = np.stack([random_spd(rng, 3) for _ in range(4)])
    path = tmp_path / "m.csv"
    write_matrix_file(path, mats, labels=["a", "b", "a", "c"], header="two\nlines")
    text = path.read_text()
    assert text.startswith("# two\n# lines\n") and "\r" not in text
    labels, back = read_matrix_file(path, 3, labeled=True)
    assert labels == ["a", "b", "a", "c"]
    np.testing.assert_array_equal(back, mats)


def test_column_major_layout(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("2,1,1,3\n")
    _, m = read_matrix_file(path, 2)
    np.testing.assert_array_equal(m[0], [[2, 1], [1, 3]])


@pytest.mark.parametrize("text,record", [("1,0,0\n", 0), ("1,0,0,1\n1,x,0,1\n", 1)])
def test_format_errors(tmp_path, text, record):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DatasetFormatError) as info:
        read_matrix_file(path, 2)
    assert info.value.record == record


def test_missing_file(tmp_path):
    with pytest.raises(DatasetFormatError):
        read_matrix_file(tmp_path / "nope.csv", 2)


def test_not_spd_names_record(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# c\n1,0,0,1\n\n1,0.2,0.3,1\n")
    with pytest.raises(RecordNotSPDError) as info:
        read_matrix_file(path, 2)
    assert info.value.record == 1
    _, m = read_matrix_file(path, 2, check=False)
    assert m.shape == (2, 2, 2)
