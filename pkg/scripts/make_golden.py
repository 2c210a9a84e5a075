"""Regenerate the golden campaign outputs under tests/golden.

Run after an intentional change to the simulation or the solver, review the
diff, and commit the new files together with the change:

    python scripts/make_golden.py
"""

import argparse
from pathlib import Path

from comgrasp.bench import Bench
from comgrasp.harness import (
    accuracy_csv,
    run_accuracy_campaign,
    run_stability_campaign,
    skipped_csv,
    stability_json,
    summary_csv,
)
from comgrasp.sceneio import default_scene_path, load_scene

GOLDEN_TRIALS = 12
GOLDEN_SEED = 7


def golden_outputs(trials=GOLDEN_TRIALS, seed=GOLDEN_SEED) -> dict:
    """{file name: text} for the small reference campaigns on the shipped scene."""
    bench = Bench(load_scene(default_scene_path()))
    records, skipped = run_accuracy_campaign(bench, trials, seed)
    table = run_stability_campaign(bench, trials, seed)
    return {
        "accuracy.csv": accuracy_csv(records),
        "accuracy_summary.csv": summary_csv(records),
        "accuracy_skipped.csv": skipped_csv(skipped),
        "stability.json": stability_json(table),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests" / "golden")
    args = p.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, text in golden_outputs().items():
        (args.out / name).write_text(text)
        print(f"wrote {args.out / name} ({text.count(chr(10))} lines)")


if __name__ == "__main__":
    main()
