"""Certified accuracy curves on Diamonds for a single model and two ensembles.

Needs data/diamonds.csv (see fetch_diamonds.py).  Predictions count as
correct within 15% of the price; ridge models fit log(price).
"""
import pathlib

from certreg import ExperimentConfig, ThresholdSpec, run_experiment

data = pathlib.Path(__file__).resolve().parents[1] / "data" / "diamonds.csv"
common = dict(threshold=ThresholdSpec("fraction", 0.15), log_target=True, trials=3)
runs = {
    "single model": ExperimentConfig(str(data), "price", "pcr", q=1, lam=3.16e-3, **common),
    "PCR q=151": ExperimentConfig(str(data), "price", "pcr", q=151, lam=6.01e-2, **common),
    "OCR q=51 d=3": ExperimentConfig(str(data), "price", "ocr", q=51, d=3, lam=6.01e-2,
                                     time_limit=1.0, **common),
}
for name, config in runs.items():
    curve = run_experiment(config)
    shown = ", ".join(f"{psi}:{curve.at(psi):.2f}" for psi in (0, 10, 25, 50, 75) if psi < len(curve))
    print(f"{name:>13}  max R {len(curve) - 1:3d}  accuracy at psi {shown}")
