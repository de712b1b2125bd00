"""Write the alert-probability curve and the boundary/grid CSVs for every preset.

    python scripts/reproduce_figures.py --out results/ [--mode exact] [--threads 4]

Equivalent to ``ctseir sweep --preset fig2 ... --preset fig5`` run once per
requested mode; each mode gets its own subdirectory.
"""

import argparse
import sys

from ctseir.cli import main


def run(out: str, modes: list[str], threads: int) -> int:
    for mode in modes:
        argv = ["sweep", "--out", f"{out}/{mode}", "--mode", mode, "--threads", str(threads)]
        for name in ("fig2", "fig3", "fig4", "fig5"):
            argv += ["--preset", name]
        code = main(argv)
        if code:
            return code
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--mode", action="append", choices=["normal-approx", "exact"],
                    help="repeatable; default both")
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    sys.exit(run(a.out, a.mode or ["normal-approx", "exact"], a.threads))
