import json
from pathlib import Path

import pytest

from drf.data import DatasetSpec, generate

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def load_json(name):
    return json.loads((CONFIGS / name).read_text())


@pytest.fixture(scope="session")
def configs_dir():
    return CONFIGS


@pytest.fixture(scope="session")
def dataset_350():
    return generate(DatasetSpec.from_dict(load_json("dataset_350.json")))


@pytest.fixture(scope="session")
def dataset_noiseless():
    return generate(DatasetSpec.from_dict(load_json("dataset_noiseless.json")))


@pytest.fixture(scope="session")
def arch_configs():
    return [load_json(n) for n in ("arch1_al_only.json", "arch2_columns_al.json", "arch3_columns_mid_top.json")]
