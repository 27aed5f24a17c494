"""Write the one-dimensional fixtures (example function, its two published
lifts, and the small positive/negative controls) to ``src/pwqnet/fixtures``.
"""
from pathlib import Path

from pwqnet.jsonio import write_json

OUT = Path(__file__).resolve().parents[1] / "src" / "pwqnet" / "fixtures"
BP = [-5 / 3, -1.0, 1.0, 5 / 3]


def pwq(breakpoints, segments):
    return {"breakpoints": breakpoints,
            "segments": [{"q": q, "l": l, "c": c} for q, l, c in segments]}


def pwa(breakpoints, alpha, beta):
    return {"breakpoints": breakpoints,
            "pieces": [{"alpha": a, "beta": b} for a, b in zip(alpha, beta)]}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_json(OUT / "eq16.json", pwq(BP, [(11.0, 12.0, 6.0), (5.0, 0.0, 0.0), (11.0, -12.0, 6.0)]))
    write_json(OUT / "eq17_lift.json", pwa(BP, [-56 / 3, 10 / 3, 76 / 3], [-56 / 3, 10 / 3, -56 / 3]))
    write_json(OUT / "eq19_lift.json", pwa(BP, [-22.0, 0.0, 22.0], [-22 / 3, 44 / 3, -22 / 3]))
    write_json(OUT / "eq16_zero_lift.json", pwa(BP, [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]))
    write_json(OUT / "single_segment.json", pwq([-1.0, 1.0], [(1.0, 0.0, 0.0)]))
    write_json(OUT / "nonconvex.json", pwq([-1.0, 0.0, 1.0], [(0.0, 1.0, 0.0), (1.0, 0.0, 0.0)]))
    print("wrote", *sorted(p.name for p in OUT.glob("*.json")))


if __name__ == "__main__":
    main()
