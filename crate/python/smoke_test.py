#!/usr/bin/env python3
"""Smoke test for the evimech_py extension module.

Builds nothing itself: run `cargo build -p evimech-py` (or `--release`)
first, then `python3 python/smoke_test.py`. The script locates the cdylib,
exposes it as an importable module, and drives the main surfaces end to end.
"""

import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libevimech_py.so", "evimech_py.so", "libevimech_py.dylib")
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("build the extension first: cargo build -p evimech-py")
    stage = pathlib.Path(tempfile.mkdtemp(prefix="evimech_py_"))
    shutil.copy2(lib, stage / "evimech_py.so")
    sys.path.insert(0, str(stage))
    import evimech_py

    return evimech_py


def main():
    evimech = load_module()
    Environment = evimech.Environment

    env_a = Environment.fixture("env_a")
    assert env_a.states() == ["s1", "s2"]
    assert env_a.agents() == 2
    report = json.loads(env_a.validate())
    assert report == {"e1": [], "e2": []}
    assert env_a.is_normal() and env_a.is_measurable()
    assert env_a.tightest_evidence(1, "s2") == ["s2"]
    assert env_a.equivalent_states() == [["s1"], ["s2"]]

    partition = json.loads(env_a.classify("s2"))
    assert partition["truth"] == "s2"
    assert partition["per_agent"]["1"]["SRL"] == ["s1"]
    assert partition["per_agent"]["2"]["ORL"] == ["s1"]
    assert partition["NRL"] == []

    # environments round-trip through JSON
    env_back = Environment.from_json(env_a.to_json())
    assert env_back.to_json() == env_a.to_json()

    mech = env_a.synthesize("theorem1")
    assert mech.tag() == "theorem1"
    desc = json.loads(mech.to_json())
    assert desc["parameters"]["refutation"] == "5"

    truthful = json.loads(mech.evaluate([("s2", "{s2}"), ("s2", "{s1,s2}")]))
    assert truthful["outcome"] == "b"
    assert truthful["transfers"] == ["0", "0"]

    refuted = json.loads(mech.evaluate([("s2", "{s2}"), ("s1", "{s1,s2}")]))
    assert refuted["transfers"][0] != "0"

    verdicts = {r["state"]: r["verdict"] for r in json.loads(mech.verify(samples=5))}
    assert verdicts == {"s1": "CERTIFIED_ALL_V", "s2": "CERTIFIED_ALL_V"}

    # negative control: equivalent states with distinct outcomes refuse synthesis
    env_b = Environment.fixture("env_b")
    try:
        env_b.synthesize("theorem1")
    except ValueError:
        pass
    else:
        raise AssertionError("non-measurable environment must refuse synthesis")

    env_d = Environment.fixture("env_d")
    rp = json.loads(env_d.check_rp())
    assert rp["pairs"][0]["verdict"] == "FAIL"
    assert rp["pairs"][0]["case"] == "one_sided_refuter"
    rp_ok = json.loads(Environment.fixture("env_d_modified").check_rp())
    assert rp_ok["pairs"][0]["verdict"] == "COND_A"

    env_e = Environment.fixture("env_e")
    em = json.loads(env_e.check_em())
    assert em == {"em_cp": True, "em_star": True}
    challenge = env_e.synthesize("theorem4")
    reports = json.loads(challenge.verify(samples=5))
    assert all(r["verdict"] == "IMPLEMENTS" for r in reports)

    env_3 = Environment.fixture("env_3")
    balanced = env_3.synthesize("balanced")
    assert balanced.tag() == "balanced"

    print("smoke test passed")


if __name__ == "__main__":
    main()
