"""--json outputs and written files checked against schemas/.

Needs ACE_CLI (path to the ace binary); ctest sets it.
"""

import json
import os
import pathlib
import shutil
import signal
import subprocess
import time
import urllib.request

import jsonschema
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
SCHEMAS = ROOT / "schemas"
FIXTURES = ROOT / "tests" / "fixtures"
ACE = os.environ.get("ACE_CLI", str(ROOT / "build" / "tools" / "ace"))


def schema(name):
    s = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(s)
    return s


def check(name, doc):
    jsonschema.validate(doc, schema(name), cls=jsonschema.Draft202012Validator)


def ace(*args, ok=True):
    r = subprocess.run([ACE, *args], capture_output=True, text=True, timeout=120)
    if ok:
        assert r.returncode == 0, r.stderr
    return r


def ace_json(*args):
    return json.loads(ace("--json", *args).stdout)


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    shutil.copytree(FIXTURES / "corpus", d / "corpus")
    ace("--json", "augment", str(d / "corpus"), "--per-turn-pairs", "6")
    ace("--json", "--epochs", "2", "train-reward", "--pairs", str(d / "corpus" / "preferences"),
        "--out", str(d / "m.json"))
    return d


def test_corpus_fixture_files():
    for f in (FIXTURES / "corpus" / "problems").glob("*.json"):
        check("problem", json.loads(f.read_text()))
    for f in (FIXTURES / "corpus" / "threads").glob("*.json"):
        check("thread", json.loads(f.read_text()))


def test_validate():
    check("cli_validate", ace_json("validate", str(FIXTURES / "corpus")))


def test_validate_failure_still_matches(tmp_path):
    (tmp_path / "problems").mkdir()
    (tmp_path / "problems" / "x.json").write_text('{"id": 3}')
    r = ace("--json", "validate", str(tmp_path), ok=False)
    assert r.returncode == 1
    doc = json.loads(r.stdout)
    assert doc["ok"] is False and doc["issues"]
    check("cli_validate", doc)


def test_augment_and_preferences(tmp_path):
    shutil.copytree(FIXTURES / "corpus", tmp_path / "corpus")
    check("cli_augment", ace_json("augment", str(tmp_path / "corpus"), "--per-turn-pairs", "4"))
    for f in (tmp_path / "corpus" / "preferences").glob("*.json"):
        check("preferences", json.loads(f.read_text()))


def test_train_reward_and_model(work, tmp_path):
    doc = ace_json("--epochs", "2", "train-reward", "--pairs", str(work / "corpus" / "preferences"),
                   "--out", str(tmp_path / "m.json"))
    check("cli_train_reward", doc)
    check("reward_model", json.loads((tmp_path / "m.json").read_text()))


def test_calibrate(work, tmp_path):
    doc = ace_json("calibrate", "--model", str(work / "m.json"), "--pairs", str(work / "corpus" / "preferences"),
                   "--out", str(tmp_path / "cal.json"))
    check("calibration_report", doc)
    check("calibration_report", json.loads((tmp_path / "cal.json").read_text()))


def test_eval():
    doc = ace_json("eval", "--corpus", str(FIXTURES / "corpus"), "--generated",
                   str(FIXTURES / "pregenerated_first_turns.json"), "--metrics", "bleu4,rougeL,codebleu")
    check("eval_run", doc)


def test_rank(work):
    doc = ace_json("--n", "5", "--diversify", "rank", "--context", str(FIXTURES / "rank_context.json"),
                   "--model", str(work / "m.json"), "--mock-pool", str(FIXTURES / "bone_candidates_pool.json"),
                   "--mock-mode", "scripted")
    check("cli_rank", doc)
    assert len(doc["candidates"]) == 5


@pytest.mark.parametrize("method", ["ppo", "rjs"])
def test_simulate_ppo(method):
    check("cli_simulate_ppo", ace_json("simulate-ppo", "--method", method, "--config",
                                       str(FIXTURES / "ppo_bandit.json")))


@pytest.mark.parametrize("preset", ["paper", "toy"])
def test_show_config(preset):
    check("config", ace_json("--preset", preset, "--show-config"))


def test_deterministic_given_seed(work):
    args = ["--seed", "7", "rank", "--context", str(FIXTURES / "rank_context.json"), "--model", str(work / "m.json"),
            "--mock-pool", str(FIXTURES / "bone_candidates_pool.json")]
    assert ace_json(*args) == ace_json(*args)
    ppo = ["--seed", "7", "simulate-ppo", "--config", str(FIXTURES / "ppo_bandit.json")]
    assert ace_json(*ppo) == ace_json(*ppo)


def _call(port, method, path, body=None):
    req = urllib.request.Request(f"http://127.0.0.1:{port}{path}", method=method,
                                 data=None if body is None else json.dumps(body).encode(),
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=30) as r:
        return json.loads(r.read())


def test_service_documents(tmp_path):
    port_file = tmp_path / "port"
    proc = subprocess.Popen([ACE, "serve", "--config", str(FIXTURES / "service.json"), "--port", "0",
                             "--port-file", str(port_file), "--data-dir", str(tmp_path / "data")],
                            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        for _ in range(200):
            if port_file.exists():
                break
            time.sleep(0.05)
        port = int(port_file.read_text())
        sid = _call(port, "POST", "/sessions", {"problem_id": "find-the-bone", "model_slot": 1})["id"]
        _call(port, "POST", f"/sessions/{sid}/turns", {"text": "Help?", "code": "x = 1"})
        _call(port, "POST", f"/sessions/{sid}/ratings", {"rater_id": "r", "turn_idx": 1, "label": "true_positive"})
        _call(port, "POST", f"/sessions/{sid}/ratings", {"rater_id": "r", "scores": {
            "relevancy": 8, "fluency": 9, "informativeness": 7, "task_completion": 6, "overall": 7}})
        check("session", _call(port, "GET", f"/sessions/{sid}"))
        check("ratings_export", _call(port, "GET", "/ratings/export"))
    finally:
        proc.send_signal(signal.SIGTERM)
        assert proc.wait(timeout=30) == 0
