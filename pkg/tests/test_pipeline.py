import json

import pytest

from sciagent.catalog import get_problem
from sciagent.fixtures import (CONSULTANT_REPLY, REVIEWER_REPLY, hilbert_fixture, hilbert_program,
                               programmer_reply)
from sciagent.gateway import Gateway, ScriptedBackend
from sciagent.pipeline import SandboxConfig, run_campaign, run_pipeline, stage_name, write_campaign
from sciagent.sandbox import Verdict

from conftest import scripted_gateway


@pytest.fixture(scope="module")
def hilbert():
    return get_problem("hilbert")


def verdicts(run):
    return [s.classification.value for s in run.stages]


def test_stage_names():
    assert [stage_name(k) for k in range(3)] == ["answer0", "review1", "review2"]


def test_zero_reviews_gives_single_stage(hilbert, scripted_roles, tmp_path):
    gw = scripted_gateway(hilbert_fixture([[5e-3]]))
    run = run_pipeline(hilbert, scripted_roles, gw, reviews=0, workdir=tmp_path)
    assert [s.stage for s in run.stages] == ["answer0"]
    assert [c["role"] for c in run.stages[0].calls] == ["consultant", "programmer"]


def test_bug_then_success(hilbert, scripted_roles, tmp_path):
    gw = scripted_gateway(hilbert_fixture([["bug", 5e-3, 5e-3]]))
    run = run_pipeline(hilbert, scripted_roles, gw, reviews=2, workdir=tmp_path)
    assert verdicts(run) == ["bug", "success", "success"]
    assert run.stages[1].error == pytest.approx(5e-3)
    assert [c["role"] for c in run.stages[1].calls] == ["reviewer", "programmer"]


def test_reviewer_sees_only_previous_stage(hilbert, scripted_roles, tmp_path):
    plan = [[0.5, 5e-3], ["bug", 5e-3]]
    run = run_campaign(hilbert, scripted_roles, scripted_gateway(hilbert_fixture(plan)), reviews=1,
                       n_samples=2, workdir=tmp_path)
    for sample, outcomes in enumerate(plan):
        review_prompt = run.runs[sample].stages[1].calls[0]["prompt"]
        assert hilbert_program(outcomes[0]) in review_prompt
        other = plan[1 - sample][0]
        assert hilbert_program(other) not in review_prompt
        assert CONSULTANT_REPLY in review_prompt
    assert "zero pivot encountered" in run.runs[1].stages[1].calls[0]["prompt"]
    revise_prompt = run.runs[1].stages[1].calls[1]["prompt"]
    assert REVIEWER_REPLY in revise_prompt and CONSULTANT_REPLY not in revise_prompt


def test_unextractable_response_still_reviewed(hilbert, scripted_roles, tmp_path):
    gw = scripted_gateway(hilbert_fixture([["nocode", 5e-3]]))
    run = run_pipeline(hilbert, scripted_roles, gw, reviews=1, workdir=tmp_path)
    assert run.stages[0].extraction_error and run.stages[0].execution is None
    assert programmer_reply("nocode") in run.stages[1].calls[0]["prompt"]
    assert verdicts(run) == ["bug", "success"]


def test_timeout_does_not_stop_later_stages(hilbert, scripted_roles, tmp_path):
    records = [{"role": "consultant", "text": CONSULTANT_REPLY},
               {"role": "programmer", "text": "```python:\nwhile True:\n    pass\n```"},
               {"role": "reviewer", "text": REVIEWER_REPLY},
               {"role": "programmer", "text": programmer_reply(5e-3)}]
    run = run_pipeline(hilbert, scripted_roles, scripted_gateway(records), reviews=1, workdir=tmp_path,
                       sandbox=SandboxConfig(wall_timeout=1))
    assert run.stages[0].execution.status.value == "timeout"
    assert verdicts(run) == ["bug", "success"]


def test_gateway_failure_keeps_partial_record(hilbert, scripted_roles, tmp_path):
    records = [{"role": "consultant", "text": CONSULTANT_REPLY},
               {"role": "programmer", "text": programmer_reply(5e-3)}]
    run = run_pipeline(hilbert, scripted_roles, scripted_gateway(records), reviews=2, workdir=tmp_path)
    assert len(run.stages) == 2 and "FixtureExhausted" in run.aborted
    assert run.classification_at(0) is Verdict.SUCCESS
    assert run.classification_at(2) is Verdict.BUG


def test_spawn_failure_is_infrastructure_error(hilbert, scripted_roles, tmp_path):
    gw = scripted_gateway(hilbert_fixture([[5e-3]]))
    run = run_pipeline(hilbert, scripted_roles, gw, reviews=0, workdir=tmp_path,
                       sandbox=SandboxConfig(interpreter_cmd=["/no/such/python", "{script}"]))
    assert run.infrastructure_error and verdicts(run) == ["bug"]


def test_campaign_rates(hilbert, scripted_roles, tmp_path):
    plan = [[5e-3, 5e-3, 5e-3]] * 4 + [["bug", 5e-3, 0.5]] * 4
    camp = run_campaign(hilbert, scripted_roles, scripted_gateway(hilbert_fixture(plan)), reviews=2,
                        n_samples=8, jobs=4, workdir=tmp_path)
    st = {s.stage: s for s in camp.report.stages}
    assert st["answer0"].execution_success_rate == 0.5
    assert st["review2"].solving_success_rate == 0.5
    assert sorted(st["review2"].errors) == pytest.approx([5e-3] * 4 + [0.5] * 4)
    assert [r.sample for r in camp.runs] == list(range(8))


def test_single_sample_aggregates_equal_run(hilbert, scripted_roles, tmp_path):
    camp = run_campaign(hilbert, scripted_roles, scripted_gateway(hilbert_fixture([["nan", 5e-3]])),
                        reviews=1, n_samples=1, workdir=tmp_path)
    run = camp.runs[0]
    for k, s in enumerate(camp.report.stages):
        assert s.execution_success_rate == (1.0 if run.classification_at(k) is Verdict.SUCCESS else 0.0)
    assert camp.report.stages[0].n_nan == 1
    assert camp.report.stages[1].box.mean == pytest.approx(run.error_at(1))


def test_replay_is_byte_identical(hilbert, scripted_roles, tmp_path):
    plan = [["bug", 0.5, 5e-3], ["nan", "nocode", 5e-3]]
    outs = []
    for k in range(2):
        camp = run_campaign(hilbert, scripted_roles, scripted_gateway(hilbert_fixture(plan)), reviews=2,
                            n_samples=2, jobs=2, workdir=tmp_path / f"w{k}")
        paths = write_campaign(camp, tmp_path / f"out{k}")
        outs.append((paths["transcript"].read_bytes(), paths["report_json"].read_bytes(),
                     paths["report_csv"].read_bytes()))
    assert outs[0] == outs[1]
    lines = outs[0][0].decode().splitlines()
    assert len(lines) == 6
    first = json.loads(lines[0])
    assert {"problem", "sample", "stage", "calls", "execution", "classification", "grade"} <= set(first)


def test_write_campaign_layout(hilbert, scripted_roles, tmp_path):
    camp = run_campaign(hilbert, scripted_roles, scripted_gateway(hilbert_fixture([[5e-3]])),
                        reviews=0, n_samples=1, workdir=tmp_path / "w")
    write_campaign(camp, tmp_path / "out")
    arts = sorted(p.name for p in (tmp_path / "out" / "artifacts").iterdir())
    assert arts[0] == "hilbert_s0_answer0_x_n10.csv" and len(arts) == 5
    header = (tmp_path / "out" / "reports" / "hilbert.csv").read_text().splitlines()[0]
    assert header.startswith("problem,programmer,stage,mean_rel_l2")


def test_negative_reviews_rejected(hilbert, scripted_roles):
    with pytest.raises(ValueError):
        run_pipeline(hilbert, scripted_roles, Gateway({"scripted": ScriptedBackend([])}), reviews=-1)
