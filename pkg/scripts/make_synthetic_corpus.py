"""Write the 12-benchmark synthetic descent corpus (default: benchmarks/synthetic)."""
import argparse

from metagrammar.synthetic import write_synthetic_corpus

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", nargs="?", default="benchmarks/synthetic")
    root = write_synthetic_corpus(ap.parse_args().out)
    print(f"wrote {root}")
