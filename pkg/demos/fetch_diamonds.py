"""Write data/diamonds.csv from the copy bundled with pydataset.

    pip install pydataset
    python demos/fetch_diamonds.py
"""
import pathlib

from pydataset import data

out = pathlib.Path(__file__).resolve().parents[1] / "data" / "diamonds.csv"
out.parent.mkdir(exist_ok=True)
data("diamonds").to_csv(out, index=False)
print(f"wrote {out}")
