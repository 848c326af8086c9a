#!/usr/bin/env python3
"""Drives the compiled bindings end to end on the two-agent example whose
answers are known exactly, plus determinism and error-path checks."""

import json
import sys
from pathlib import Path

DEMO_PROFILE = json.dumps(
    {
        "agents": [
            {
                "name": "a1",
                "density": {
                    "breakpoints": ["0", "1/10", "1/2", "1"],
                    "values": ["10", "0", "2"],
                },
            },
            {
                "name": "a2",
                "density": {
                    "breakpoints": ["0", "3/10", "1"],
                    "values": ["0", "3"],
                },
            },
        ]
    }
)


def load_bindings():
    try:
        import fairslice

        return fairslice
    except ImportError:
        pass
    # No pip install: load the cargo artifact directly.
    import importlib.machinery
    import importlib.util

    workspace = Path(__file__).resolve().parent.parent
    candidates = [
        workspace / "target" / profile / "lib_fairslice.so"
        for profile in ("release", "debug")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "bindings not found: pip install -e python/ --no-build-isolation "
            "or cargo build -p fairslice-python"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    loader = importlib.machinery.ExtensionFileLoader("_fairslice", str(newest))
    spec = importlib.util.spec_from_file_location("_fairslice", newest, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def exact_utilities(doc):
    return [u["exact"] for u in doc["utilities"]]


def main():
    fs = load_bindings()
    checks = 0

    ccea = json.loads(fs.divide(DEMO_PROFILE, "ccea"))
    assert exact_utilities(ccea) == ["8/5", "6/5"], ccea["utilities"]
    assert all(p["verdict"] != "fail" for p in ccea["properties"])
    assert ccea["allocation"]["waste"] == [["1/10", "3/10"]]
    checks += 1

    mea = json.loads(fs.divide(DEMO_PROFILE, "mea", exact=True))
    assert exact_utilities(mea) == ["6/5", "9/5"], mea["utilities"]
    assert mea["equilibrium"]["exact"] is True
    assert mea["equilibrium"]["residual"] == 0.0
    verdicts = {p["property"]: p["verdict"] for p in mea["properties"]}
    assert verdicts["po"] == "pass" and verdicts["r-prop"] == "fail"
    checks += 1

    csd = json.loads(fs.divide(DEMO_PROFILE, "csd"))
    assert exact_utilities(csd) == ["8/5", "6/5"], csd["utilities"]
    assert csd["permutations"] == 2 and csd["exact"] is True
    checks += 1

    report = json.loads(
        fs.check(DEMO_PROFILE, json.dumps(ccea["allocation"]), ["ef", "prop", "nw"])
    )
    assert report["allPassed"] is True
    checks += 1

    one = fs.generate_profile(3, max_blocks=3, seed=7)
    two = fs.generate_profile(3, max_blocks=3, seed=7)
    assert one == two
    assert len(json.loads(one)["agents"]) == 3
    checks += 1

    found = json.loads(
        fs.manipulate(DEMO_PROFILE, "uniform", [0], grid=4, ladder=2)
    )
    assert found["manipulation"] is not None
    assert found["manipulation"]["deviators"] == ["a1"]
    checks += 1

    results = json.loads(fs.fixtures())
    failed = [r["id"] for r in results if not r["passed"]]
    assert not failed, failed
    assert len(results) == 8
    checks += 1

    try:
        fs.divide("not json", "ccea")
    except ValueError:
        checks += 1
    else:
        raise AssertionError("malformed profile must raise ValueError")

    try:
        fs.divide(DEMO_PROFILE, "uniform", sample=3)
    except ValueError:
        checks += 1
    else:
        raise AssertionError("sample outside csd must raise ValueError")

    print(f"ok: {checks} binding checks passed ({fs.__version__})")


if __name__ == "__main__":
    main()
