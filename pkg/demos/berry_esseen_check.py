"""Compare distribution pairs through the smoothed Berry-Esseen inequality.

For each pair in the bundled corpus the sup distance of the CDFs is set
against the right-hand side built from the characteristic functions.
"""

from quantaub.berry_esseen import load_corpus, verify_be

print(f"{'pair':<28} {'T':>5} {'sup|F-G|':>10} {'rhs':>10} {'margin':>10}")
for pair in load_corpus()[:8]:
    for row in verify_be(pair, (1.0, 10.0), strict=False):
        print(f"{row['label']:<28} {row['T']:5g} {row['sup_diff']:10.4g} {row['rhs']:10.4g} {row['margin']:10.4g}")
