"""Run the scaled dominance sweep and write per-instance results as JSON lines.

    python scripts/scaled_dominance.py --out results/dominance.jsonl
"""

import argparse
import json
import sys

from qbfzero.experiment import dominance_sweep, summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--base-seed", type=int, default=0)
    ap.add_argument("--vars", type=int, default=7)
    ap.add_argument("--clauses", type=int, default=4)
    ap.add_argument("--out")
    args = ap.parse_args()

    fh = open(args.out, "w") if args.out else None

    def progress(r):
        line = json.dumps(r.to_dict())
        print(line, flush=True)
        if fh:
            fh.write(line + "\n")
            fh.flush()

    results = dominance_sweep(args.count, args.base_seed, args.vars, args.clauses, progress=progress)
    print(json.dumps(summarize(results)), file=sys.stderr)
    if fh:
        fh.close()


if __name__ == "__main__":
    main()
