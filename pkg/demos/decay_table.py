"""Regenerate the table of boundary classes against their decay rates.

Each row fits the computed bound over its x grid and compares the fitted
exponent with the reference rate.
"""

from quantaub.appendix import ROWS, appendix_table

print(f"{'row':>3} {'label':<40} {'fitted':>8} {'ref':>8} {'pass':>5}")
for k in sorted(ROWS):
    r = appendix_table(k)
    print(f"{r.row:3d} {r.label:<40} {r.fitted['a']:8.3f} {r.reference['a']:8.3f} {str(r.passed):>5}")
