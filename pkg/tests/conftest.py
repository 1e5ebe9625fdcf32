import json
from pathlib import Path

import pytest

from sciagent.fixtures import DEMO_PLAN, hilbert_fixture, write_fixture
from sciagent.gateway import Gateway, ModelDescriptor, RoleAssignment, ScriptedBackend

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def scripted_roles():
    return RoleAssignment.uniform(ModelDescriptor("scripted", "scripted"))


def scripted_gateway(records, **kw):
    return Gateway({"scripted": ScriptedBackend(records)}, **kw)


@pytest.fixture
def demo_fixture(tmp_path):
    return write_fixture(hilbert_fixture(DEMO_PLAN), tmp_path / "demo.jsonl")


def read_jsonl(path):
    return [json.loads(ln) for ln in Path(path).read_text().splitlines() if ln.strip()]
