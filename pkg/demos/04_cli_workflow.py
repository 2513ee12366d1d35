"""The CSV-and-JSON workflow driven through the command-line interface.

Synthesizes a historical dataset to CSV, writes a run configuration,
estimates POS, emits a JSON report, and reruns the report to show the
reproducibility contract (a saved report doubles as a configuration).

Run:  python demos/04_cli_workflow.py
"""

import json
import tempfile
from pathlib import Path

from surpos.cli import main as cli


def run(args):
    print("$ surpos " + " ".join(args))
    cli(args)
    print()


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        run(["synthesize", "--template", "ivacaftor-like", "--n", "40",
             "--seed", "8", "--out", str(tmp / "hist.csv")])

        cfg = {
            "datasets": {"newer": "hist.csv"},
            "model": {"endpoints": [
                {"covariates": ["male", "age", "weight", "bmi"],
                 "direction": d, "delta": 0.0}
                for d in (">", "<", ">")
            ]},
            "region": {"any": [
                {"endpoint": 1, "op": ">", "delta": 0.0},
                {"endpoint": 2, "op": "<", "delta": 0.0},
            ]},
            "covariate_chain": {"conditionals": [
                {"target": "male", "family": "bernoulli"},
                {"target": "age", "predictors": ["male"], "family": "gaussian"},
                {"target": "weight", "predictors": ["age"], "family": "gaussian"},
                {"target": "bmi", "predictors": ["weight"], "family": "gaussian"},
            ]},
            "pos": {"n": 69, "inner_draws": 300, "inner_burn_in": 100,
                    "n_datasets": 100, "seed": 21, "validation_burn_in": 200},
            "comparator": True,
        }
        (tmp / "run.json").write_text(json.dumps(cfg, indent=2))

        run(["pos", "--config", str(tmp / "run.json"), "--workers", "1",
             "--out", str(tmp / "report.json")])

        # a saved report is itself a valid --config: bit-identical rerun
        run(["pos", "--config", str(tmp / "report.json"), "--workers", "1"])

        run(["curve", "--config", str(tmp / "run.json"), "--n-grid", "40,69",
             "--workers", "1"])


if __name__ == "__main__":
    main()
