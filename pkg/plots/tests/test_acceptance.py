"""Acceptance: all three figure kinds render from committed fixtures."""

import json
import pathlib
import time

from cluster_gas_plots import FigureSpec, render

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def test_three_kinds_render_from_fixtures(tmp_path):
    start = time.perf_counter()
    failures = []

    specs = {
        "distribution_compare": FigureSpec(
            kind="distribution_compare",
            inputs={"empirical": str(FIXTURES / "empirical.csv"), "ideal": str(FIXTURES / "solution.json")},
            output=str(tmp_path / "compare.svg"),
        ),
        "free_energy_curve": FigureSpec(
            kind="free_energy_curve",
            inputs={"solutions": sorted(str(p) for p in (FIXTURES / "curve").glob("sol_*.json"))},
            output=str(tmp_path / "curve.svg"),
        ),
        "saha_convergence": FigureSpec(
            kind="saha_convergence",
            inputs={"sweep": str(FIXTURES / "sweep.csv")},
            output=str(tmp_path / "saha.svg"),
        ),
    }
    for kind, spec in specs.items():
        try:
            out = render(spec)
            if not pathlib.Path(out).stat().st_size:
                failures.append(f"{kind}: empty output")
        except Exception as err:  # noqa: BLE001 - acceptance reporting
            failures.append(f"{kind}: {err}")

    identical = FigureSpec(
        kind="distribution_compare",
        inputs={"empirical": str(FIXTURES / "empirical.csv"), "ideal": str(FIXTURES / "empirical.csv")},
        output=str(tmp_path / "identical.svg"),
    )
    render(identical)
    if "TV = 0.000" not in (tmp_path / "identical.svg").read_text():
        failures.append("identical inputs did not annotate TV = 0.000")

    elapsed = time.perf_counter() - start
    ok = not failures and elapsed <= 10.0
    print(f"ACCEPTANCE figure-kinds: {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s / budget 10s)")
    assert ok, "; ".join(failures) or f"overran the budget: {elapsed:.2f}s"
