"""Build data/cora and data/citeseer from the raw files shipped in the ``pgl`` wheel.

Usage::

    pip download --no-deps pgl==2.2.6 -d /tmp/pgl
    python scripts/prepare_datasets.py /tmp/pgl/pgl-2.2.6-*.whl data/

A directory that already contains ``cora/cora.content`` and
``citeseer/ind.citeseer.*`` may be passed instead of the wheel.
"""

import argparse
import tempfile
import zipfile
from pathlib import Path

from midgcn.datasets import convert_linqs, convert_planetoid


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source", type=Path, help="pgl wheel or raw data directory")
    parser.add_argument("out", type=Path, help="output root (one sub-directory per dataset)")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        if args.source.suffix == ".whl":
            with zipfile.ZipFile(args.source) as z:
                for member in z.namelist():
                    if member.startswith(("pgl/data/cora/", "pgl/data/citeseer/")):
                        z.extract(member, tmp)
            raw = Path(tmp) / "pgl" / "data"
        else:
            raw = args.source
        cora = convert_linqs(raw / "cora" / "cora.content", raw / "cora" / "cora.cites", args.out / "cora")
        cite = convert_planetoid(raw / "citeseer" / "ind.citeseer", args.out / "citeseer")
    print(cora)
    print(cite)


if __name__ == "__main__":
    main()
