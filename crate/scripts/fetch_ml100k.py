#!/usr/bin/env python3
"""Rebuild the raw MovieLens 100k files (u.user, u.item, u.data) from the
copy bundled in the pytorch-widedeep wheel on PyPI.

Usage: python3 scripts/fetch_ml100k.py [OUT_DIR]   (default: data/ml-100k)
"""
import io
import math
import os
import subprocess
import sys
import tempfile
import zipfile

import pandas as pd

OUT = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data", "ml-100k")
PREFIX = "pytorch_widedeep/datasets/data/MovieLens100k_"


def cell(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return str(v)


def main():
    os.makedirs(OUT, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.check_call(
            [sys.executable, "-m", "pip", "download", "--no-deps", "pytorch-widedeep==1.7.0", "-d", tmp]
        )
        wheel = next(os.path.join(tmp, f) for f in os.listdir(tmp) if f.endswith(".whl"))
        with zipfile.ZipFile(wheel) as z:
            frames = {
                n: pd.read_parquet(io.BytesIO(z.read(f"{PREFIX}{n}.parquet.brotli")))
                for n in ("users", "items", "data")
            }

    users = frames["users"].sort_values("user_id")
    with open(os.path.join(OUT, "u.user"), "w", encoding="latin-1", newline="\n") as f:
        for r in users.itertuples(index=False):
            f.write("|".join(cell(v) for v in r) + "\n")

    items = frames["items"].sort_values("movie_id")
    with open(os.path.join(OUT, "u.item"), "w", encoding="latin-1", newline="\n") as f:
        for r in items.itertuples(index=False):
            vals = list(r)
            vals[3] = ""  # video_release_date is always empty in the raw file
            f.write("|".join(cell(v) for v in vals) + "\n")

    with open(os.path.join(OUT, "u.data"), "w", newline="\n") as f:
        for r in frames["data"].itertuples(index=False):
            f.write("\t".join(str(v) for v in r) + "\n")
    print(f"wrote {len(users)} users, {len(items)} items, {len(frames['data'])} ratings to {OUT}")


if __name__ == "__main__":
    main()
