"""Smoke test against a real OpenAI-compatible endpoint.

Excluded by default. Run with ``SCIAGENT_API_BASE=... SCIAGENT_MODEL=... pytest -m live``.
"""

import json
import os

import pytest
from click.testing import CliRunner

from sciagent.cli import main

pytestmark = [
    pytest.mark.live,
    pytest.mark.skipif(not os.environ.get("SCIAGENT_API_BASE"), reason="SCIAGENT_API_BASE is not set"),
]


def test_live_hilbert_single_sample(tmp_path):
    model = os.environ.get("SCIAGENT_MODEL", "gpt-4o-mini")
    res = CliRunner().invoke(main, ["run", "--backend", "live", "--model", model, "--problem", "hilbert",
                                    "--samples", "1", "--reviews", "1", "--out", str(tmp_path)])
    assert res.exit_code in (0, 1), res.output
    report = json.loads((tmp_path / "reports" / "hilbert.json").read_text())
    assert [s["stage"] for s in report["stages"]] == ["answer0", "review1"]
    lines = (tmp_path / "transcripts" / "hilbert.jsonl").read_text().splitlines()
    assert lines and all(json.loads(ln)["calls"] for ln in lines)
