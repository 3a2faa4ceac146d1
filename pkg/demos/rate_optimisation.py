"""Optimise the regularisation parameter for a few boundary classes.

For each class the script prints the optimal lambda, the error term and the
resulting bound across a grid of x, then the fitted decay exponent.
"""

import math

import numpy as np

from quantaub.rates import BoundaryClass, optimize_rate

LOG_E = {"kind": "log", "shift": math.e}

classes = {
    "Dif, N=2, G=1": BoundaryClass("Dif", N=2, G={"kind": "const", "value": 1.0}),
    "An, G=log(t+e), H=G/(1+t)": BoundaryClass(
        "An", G=LOG_E, H={"kind": "product", "of": [LOG_E, {"kind": "power", "exp": -1.0, "shift": 1.0}]}),
}

xs = np.geomspace(1e2, 1e5, 7)
for name, cls in classes.items():
    print(f"\n{name}")
    print(f"{'x':>10} {'lambda*':>12} {'bound':>12}")
    bounds = []
    for x in xs:
        r = optimize_rate(cls, 1.0, x, lambda_max="auto")
        bounds.append(r.bound)
        print(f"{x:10.4g} {r.lambda_star:12.5g} {r.bound:12.5g}")
    if cls.tag == "Dif":
        slope = np.polyfit(np.log(xs), np.log(bounds), 1)[0]
        print(f"log-log slope of the bound: {slope:.3f} (polynomial decay)")
    else:
        print("analytic boundary data: the bound decays faster than any power of x")
