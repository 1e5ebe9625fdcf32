import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sciagent.tokens import (CHARS_PER_TOKEN, MARKER_RESERVE, TruncationPolicy, estimate_tokens,
                             truncate_output)


def test_estimate():
    assert estimate_tokens("") == 0
    assert estimate_tokens("a" * 4000) == 1000
    assert estimate_tokens("abcde") == 2


def test_policy_validation():
    for bad in ({"prompt_budget": 0}, {"output_budget": -1}, {"head_fraction": 0.0},
                {"head_fraction": 1.0}, {"output_budget": 10}):
        with pytest.raises(ValueError):
            TruncationPolicy(**bad)


def test_short_output_unchanged():
    assert truncate_output("step 1\nstep 2\n", TruncationPolicy()) == "step 1\nstep 2\n"


def test_long_log_keeps_whole_lines_at_both_ends():
    lines = [f"iter {k:6d} residual {1.0 / (k + 1):.6e}\n" for k in range(100_000)]
    text = "".join(lines)
    policy = TruncationPolicy(output_budget=2000, head_fraction=0.5)
    out = truncate_output(text, policy)
    head, marker, tail = out.partition("[...")
    # derived: the largest line-aligned prefix within half the character room
    room = 2000 * CHARS_PER_TOKEN - MARKER_RESERVE
    expect_head = ""
    for ln in lines:
        if len(expect_head) + len(ln) > room // 2:
            break
        expect_head += ln
    assert head == expect_head
    tail = tail.split("]\n", 1)[1]
    assert text.endswith(tail) and tail.startswith("iter")
    assert estimate_tokens(head) <= 1000 and estimate_tokens(tail) <= 1000
    elided = len(text) - len(head) - len(tail)
    assert f"[... {elided} characters elided ...]" in out
    assert estimate_tokens(out) <= policy.output_budget


def test_single_huge_line_is_split():
    text = "x" * 50_000
    out = truncate_output(text, TruncationPolicy(output_budget=500))
    assert "characters elided" in out
    assert estimate_tokens(out) <= 500
    assert out.startswith("x") and out.endswith("x")


texts = st.text(alphabet=st.sampled_from("ab \n0123456789"), min_size=0, max_size=6000)


@settings(max_examples=80)
@given(texts, st.integers(min_value=41, max_value=600), st.floats(min_value=0.05, max_value=0.95))
def test_truncation_idempotent_and_bounded(text, budget, frac):
    p = TruncationPolicy(output_budget=budget, head_fraction=frac)
    once = truncate_output(text, p)
    assert truncate_output(once, p) == once
    assert estimate_tokens(once) <= p.output_budget
