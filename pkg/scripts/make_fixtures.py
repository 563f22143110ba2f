#!/usr/bin/env python3
"""Regenerate the derivation fixtures under tests/fixtures.

The fixtures are committed; rerun this after changing the derivation JSON
layout so the stored trees stay loadable.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from pdlkit.calculus import derivation_to_json, extended_axiom
from pdlkit.formula import parse

from test_calculus import box_distribution_tree

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main() -> None:
    OUT.mkdir(exist_ok=True)
    trees = {
        "box_distribution_tree.json": box_distribution_tree(),
        "ext_axiom_union.json": extended_axiom(parse("<p+r>x")),
        "ext_axiom_boolean.json": extended_axiom(parse("(x & y) | ~z")),
    }
    for name, tree in trees.items():
        path = OUT / name
        path.write_text(json.dumps(derivation_to_json(tree), indent=1) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
