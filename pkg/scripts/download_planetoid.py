"""Fetch the public Planetoid files for cora / citeseer / pubmed and convert them.

    python scripts/download_planetoid.py --out ~/data/dropedgepp [--name cora ...]
    export DROPEDGEPP_DATA=~/data/dropedgepp

Needs network access; nothing in the test suite calls this.
"""

import argparse
import tempfile
import urllib.request
from pathlib import Path

from dropedgepp.data import convert_planetoid

BASE = "https://github.com/kimiyoung/planetoid/raw/master/data"
PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")


def fetch(name: str, raw_dir: Path) -> None:
    for part in PARTS:
        target = raw_dir / f"ind.{name}.{part}"
        if target.exists():
            continue
        url = f"{BASE}/ind.{name}.{part}"
        print("fetching", url)
        with urllib.request.urlopen(url, timeout=60) as r:
            target.write_bytes(r.read())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, help="dataset root (the value for $DROPEDGEPP_DATA)")
    ap.add_argument("--name", action="append", choices=("cora", "citeseer", "pubmed"))
    ap.add_argument("--raw", help="keep the raw files here instead of a temp dir")
    args = ap.parse_args()
    for name in args.name or ["cora"]:
        with tempfile.TemporaryDirectory() as tmp:
            raw = Path(args.raw or tmp)
            raw.mkdir(parents=True, exist_ok=True)
            fetch(name, raw)
            print("wrote", convert_planetoid(raw, name, args.out))


if __name__ == "__main__":
    main()
