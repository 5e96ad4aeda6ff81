from pathlib import Path

import pytest

import unlearn_gateway as ug

DATA = Path(__file__).resolve().parents[2] / "data"


def test_metrics():
    p, r, f = ug.rouge_l("the cat sat on the mat", "the cat lay on the mat")
    assert p == pytest.approx(5 / 6) and r == pytest.approx(5 / 6) and f == pytest.approx(5 / 6)
    assert ug.f_score(0.0540, 0.7718) == pytest.approx(0.8500, abs=1e-4)
    assert ug.lcs_length(["a", "b", "c"], ["a", "c"]) == 2
    assert ug.tokenize("Hello, World!") == ["hello", "world"]
    with pytest.raises(ValueError):
        ug.f_score(1.5, 0.5)


def test_leaks_and_guardrail_prompt():
    assert ug.leaks("Hermione Granger was there.", ["Hermione Granger"])
    assert not ug.leaks("Nobody was there.", ["Hermione Granger"])
    prompt = ug.render_guardrail_prompt("What happened?", ["Hermione Granger", "Severus Snape"])
    assert "Hermione Granger, Severus Snape" in prompt


def test_gateway_round_trip(tmp_path):
    config = tmp_path / "service.json"
    config.write_text(
        '{"admin_token": "tok", "backends": {"default": {"type": "scripted", '
        f'"rules": "{DATA / "demo" / "rules.json"}"}}}}}}'
    )
    gw = ug.Gateway(str(config), admin_token="tok")
    assert gw.health()["version"] == 0
    question = "How was Victor Krum's Yule ball experience?"
    before = gw.chat(question)
    assert before["snapshot_version"] == 0 and not before["unlearning_applied"]
    added = gw.add_target("Hermione Granger")
    after = gw.chat(question)
    assert after["snapshot_version"] == 1
    assert after["unlearning_applied"]
    assert not ug.leaks(after["content"], ["Hermione Granger"])
    gw.remove_target(added["target"]["id"])
    assert gw.targets()["version"] == 2
    with pytest.raises(ug.GatewayError) as err:
        gw.remove_target(added["target"]["id"])
    assert err.value.status == 404
    assert gw.config()["admin_token"] == "***"


def test_scenario_suite():
    summary = ug.run_scenario_suite(str(DATA / "scenarios"))
    assert summary["passed"] == summary["total"] == 120
    assert summary["leak_count"] == 0 and summary["false_positive_count"] == 0
