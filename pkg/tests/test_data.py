import json

import pytest

from drf import data
from drf.core import FiniteSet
from drf.data import DatasetError, DatasetSpec, generate, load_rows, write

from conftest import load_json


def test_350_rows(dataset_350):
    assert len(dataset_350) == 350
    for m in ("digit", "hand"):
        assert len(FiniteSet(dataset_350.columns[m])) == 350
    assert set(dataset_350.labels) == set(range(5))
    assert len(FiniteSet(dataset_350.streams()["label"])) == 5


def test_noiseless_rows_collapse_to_prototypes(dataset_noiseless):
    assert len(dataset_noiseless) == 350
    for m in ("digit", "hand"):
        assert len(FiniteSet(dataset_noiseless.columns[m])) == 5


def test_classes_align_rows(dataset_350):
    assert dataset_350.classes["digit"] == dataset_350.classes["hand"] == dataset_350.labels


def test_independent_mode_shuffles_partner():
    ds = generate(DatasetSpec.from_dict(load_json("dataset_independent.json")))
    assert ds.classes["a"] != ds.classes["b"]
    assert sorted(ds.classes["a"]) == sorted(ds.classes["b"])
    assert ds.labels is None and "label" not in ds.streams()


def test_same_seed_same_files(tmp_path):
    spec = DatasetSpec.from_dict(load_json("dataset_350.json"))
    a, b = write(generate(spec), tmp_path / "a"), write(generate(spec), tmp_path / "b")
    for name in (data.CSV_NAME, data.SIDECAR_NAME):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_write_load_round_trip(tmp_path, dataset_350):
    out = write(dataset_350, tmp_path)
    back = load_rows(out)
    assert back == dataset_350
    assert back.fingerprint == dataset_350.fingerprint
    assert load_rows(out / data.CSV_NAME) == dataset_350


def test_scalar_label_stream():
    d = load_json("dataset_350.json")
    d["label_slot"] = "scalar"
    ds = generate(DatasetSpec.from_dict(d))
    assert {s.values[0] for s in ds.streams()["label"]} == {1.0, 2.0, 3.0, 4.0, 5.0}


def _small(tmp_path):
    d = load_json("dataset_independent.json")
    return write(generate(DatasetSpec.from_dict(d)), tmp_path)


def _edit_row(path, row, new):
    lines = (path / data.CSV_NAME).read_text().splitlines()
    lines[row] = new
    (path / data.CSV_NAME).write_text("\n".join(lines) + "\n")


def test_ragged_row_reports_row(tmp_path):
    out = _small(tmp_path)
    _edit_row(out, 3, "0.1,0.2,0.3")
    with pytest.raises(DatasetError, match="row 3"):
        load_rows(out)


def test_nan_cell_reports_row_and_column(tmp_path):
    out = _small(tmp_path)
    _edit_row(out, 2, "0.1,nan,0.3,0.4")
    with pytest.raises(DatasetError, match=r"row 2, column a\.1"):
        load_rows(out)


def test_non_numeric_cell(tmp_path):
    out = _small(tmp_path)
    _edit_row(out, 1, "0.1,0.2,x,0.4")
    with pytest.raises(DatasetError, match=r"column b\.0"):
        load_rows(out)


def test_missing_files(tmp_path):
    with pytest.raises(DatasetError):
        load_rows(tmp_path)
    out = _small(tmp_path / "d")
    (out / data.SIDECAR_NAME).unlink()
    with pytest.raises(DatasetError, match="sidecar"):
        load_rows(out)


@pytest.mark.parametrize("edit", [
    lambda d: d.update(correlation="sideways"),
    lambda d: d.update(label_slot="binary"),
    lambda d: d["modalities"][0].update(classes=1),
    lambda d: d["modalities"][0].update(noise_std=-1),
    lambda d: d["modalities"][0].update(samples_per_class=3),
    lambda d: d["modalities"][1].update(name="a"),
    lambda d: d["modalities"][0].pop("seed"),
    lambda d: d.update(modalities=[]),
])
def test_bad_specs(edit):
    d = load_json("dataset_independent.json")
    edit(d)
    with pytest.raises(DatasetError):
        DatasetSpec.from_dict(d)


def test_load_spec(configs_dir):
    spec = data.load_spec(configs_dir / "dataset_350.json")
    assert spec.rows == 350 and spec.label_slot == "onehot"
    json.dumps(generate(spec).info())
