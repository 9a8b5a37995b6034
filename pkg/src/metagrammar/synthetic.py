"""A small generated corpus whose solutions need only argument variables and
bitvector arithmetic, so bitwise and shift operators only slow enumeration."""
from __future__ import annotations

from pathlib import Path

HEADER = "(set-logic BV)\n(synth-fun f ((x (_ BitVec 4)) (y (_ BitVec 4))) (_ BitVec 4))\n" \
         "(declare-var a (_ BitVec 4))\n(declare-var b (_ BitVec 4))\n"

# (name, category, constraints over a, b)
SPECS = [
    ("sum", "arith", ["(= (f a b) (bvadd a b))"]),
    ("diff", "arith", ["(= (f a b) (bvsub a b))"]),
    ("prod", "arith", ["(= (f a b) (bvmul a b))"]),
    ("quot", "arith", ["(= (f a b) (bvudiv a b))"]),
    ("square", "compound", ["(= (f a b) (bvmul a a))"]),
    ("double-plus", "compound", ["(= (f a b) (bvadd (bvadd a b) b))"]),
    ("mul-add", "compound", ["(= (f a b) (bvadd (bvmul a b) a))"]),
    ("sub-square", "compound", ["(= (f a b) (bvsub a (bvmul b b)))"]),
    ("comm-sum", "relational", [
        "(= (f a b) (f b a))",
        "(= (f a #x0) a)",
        "(= (f a #x1) (bvadd a #x1))",
        "(= (f a (bvadd b #x1)) (bvadd (f a b) #x1))",
    ]),
    ("neg-diff", "relational", [
        "(= (bvadd (f a b) (f b a)) #x0)",
        "(= (f a #x0) a)",
        "(= (f a a) #x0)",
        "(= (f a (bvadd b #x1)) (bvsub (f a b) #x1))",
    ]),
    ("scaled", "relational", [
        "(= (f a #x0) #x0)",
        "(= (f a (bvadd b #x1)) (bvadd (f a b) a))",
    ]),
    ("rem", "relational", [
        "(= (bvadd (bvmul (bvudiv a b) b) (f a b)) a)",
    ]),
]


def problem_text(constraints) -> str:
    return HEADER + "".join(f"(constraint {c})\n" for c in constraints) + "(check-synth)\n"


def write_synthetic_corpus(root) -> Path:
    """Write the ``.sl`` files and a ``manifest.csv`` under ``root``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rows = ["path,category"]
    for name, category, constraints in SPECS:
        (root / f"{name}.sl").write_text(problem_text(constraints))
        rows.append(f"{name}.sl,{category}")
    (root / "manifest.csv").write_text("\n".join(rows) + "\n")
    return root
