"""Shared helpers for the test suite.

Random model families are generated from seeded numpy Generators so every
run sees the same cases; tests that want their own stream create one with
an explicit seed instead of sharing global state.
"""

import numpy as np

from osc3 import build_model


def poly_source(coeffs) -> str:
    """Render polynomial coefficients (constant first) as an expression."""
    parts = []
    for k, c in enumerate(coeffs):
        c = float(c)
        if k == 0:
            parts.append(repr(c))
        elif k == 1:
            parts.append(f"{c!r}*t")
        else:
            parts.append(f"{c!r}*t^{k}")
    return " + ".join(parts)


def random_poly_model(rng: np.random.Generator, degree: int = 2, scale: float = 2.0):
    """A model with independent random polynomial p, q, r on [1, 1e4+1]."""
    p = poly_source(rng.uniform(-scale, scale, degree + 1))
    q = poly_source(rng.uniform(-scale, scale, degree + 1))
    r = poly_source(rng.uniform(-scale, scale, degree + 1))
    return build_model(p, q, r, {}, t0=1.0)
