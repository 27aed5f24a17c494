"""Run both worked examples into ``out/`` (same as ``pwqnet repro``)."""
import sys
from pathlib import Path

from pwqnet.pwq import ToleranceConfig
from pwqnet.repro import run_repro


def main(root="out"):
    tol = ToleranceConfig.from_env()
    codes = [run_repro(ex, Path(root) / ex, tol) for ex in ("1d", "2d")]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
