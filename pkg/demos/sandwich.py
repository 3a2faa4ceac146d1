"""Build a band-limited test function and check the convolution sandwich.

The data S(x) = sin(x) for x >= 0 is bounded below by -F' with F(x) = x, so
both smoothed convolutions must enclose S(x) up to the penalty term.
"""

import numpy as np

from quantaub.tauber import TauberianData, sandwich_bounds
from quantaub.testfn import build_phi_n, verify_testfn

phi = build_phi_n(4, 0.5)
report = verify_testfn(phi)
print("test function phi_4 checks:", {k: v["pass"] for k, v in report.items() if isinstance(v, dict)})

data = TauberianData(S="sin(x) * indicator(x, 0, inf)", X=0.0, F="x", f=1.0)
print(f"\n{'lambda':>7} {'x':>7} {'lower':>10} {'S(x)':>10} {'upper':>10} {'margin':>10}")
for lam in (1.0, 2.0, 10.0):
    for x in (5.0, 20.0, 80.0):
        r = sandwich_bounds(data, phi, lam, x)
        print(f"{lam:7g} {x:7g} {r.lower:10.4f} {r.S_x:10.4f} {r.upper:10.4f} {r.margin:10.3g}")
