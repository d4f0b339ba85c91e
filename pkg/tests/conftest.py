import json
from pathlib import Path

import pytest

from sepserve.gbdt import bundled_model_path, load_model
from sepserve.records import parse_psv, to_clinical_document
from sepserve.store import DocumentStore

FIXTURES = Path(__file__).parent / "fixtures"
PSV_DIR = FIXTURES / "psv"


@pytest.fixture(scope="session")
def psv_dir() -> Path:
    return PSV_DIR


@pytest.fixture(scope="session")
def fixture_ids() -> list[str]:
    return sorted(p.stem for p in PSV_DIR.glob("*.psv"))


@pytest.fixture(scope="session")
def fixture_docs():
    docs = {}
    for path in sorted(PSV_DIR.glob("*.psv")):
        rec = parse_psv(path.read_bytes(), patient_id=path.stem, source_file=path.name)
        docs[path.stem] = to_clinical_document(rec)
    return docs


@pytest.fixture(scope="session")
def seeded_store(tmp_path_factory, fixture_docs) -> DocumentStore:
    root = tmp_path_factory.mktemp("store")
    store = DocumentStore(root)
    for doc in fixture_docs.values():
        store.put(doc)
    return store


@pytest.fixture(scope="session")
def model():
    return load_model(bundled_model_path())


@pytest.fixture(scope="session")
def raw_model() -> dict:
    return json.loads(bundled_model_path().read_text())


def oracle_walk(node: dict, values) -> float:
    """Independent recursive interpreter over the raw model JSON."""
    while "leaf_value" not in node:
        v = values[node["feature_index"]]
        if v is None:
            node = node["left"] if node.get("default_left", True) else node["right"]
        elif v < node["threshold"]:
            node = node["left"]
        else:
            node = node["right"]
    return node["leaf_value"]


def oracle_margin(raw: dict, values) -> float:
    # accumulate in tree order starting from base_score: the documented
    # margin semantics, and what bit-exact equality is defined against
    margin = raw["base_score"]
    for tree in raw["trees"]:
        margin += oracle_walk(tree, values)
    return margin
