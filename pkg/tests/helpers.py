import math

import numpy as np

from cmrac.controllers import ConstrainedState, auxiliary_control, saturate


def random_interior_states(paper, count, seed=0):
    """Closed-loop states with e strictly inside the barrier and saturation mostly active."""
    rng = np.random.default_rng(seed)
    cert, B = paper.cert, paper.plant.B
    n, m = B.shape
    for _ in range(count):
        d = rng.normal(size=n)
        ratio = rng.uniform(0.0, 0.99)
        e = d * math.sqrt(ratio * cert.kb_prime_sq / float(d @ cert.P @ d))
        s = ConstrainedState(
            rng.normal(scale=3.0, size=(m, n)), rng.normal(scale=3.0, size=(m, m)),
            rng.normal(size=(n, m)), rng.normal(size=(n, m)), rng.normal(scale=0.1, size=n),
            np.diag(rng.uniform(1, 10, m)), np.diag(rng.uniform(1, 10, m)),
            np.diag(rng.uniform(0.5, 2, n)), np.diag(rng.uniform(0.5, 2, n)),
        )
        x, r = rng.normal(size=n), rng.uniform(0, 1, size=m)
        dec = saturate(auxiliary_control(s, x, r), 2.5)
        yield e, e - s.e1, x, r, dec, s


def charpoly_min_root(M: np.ndarray) -> float:
    """Smallest root of det(lambda I - M) for symmetric 3x3 M, by bisection."""
    c2 = -np.trace(M)
    c1 = 0.5 * (np.trace(M) ** 2 - np.trace(M @ M))
    c0 = -np.linalg.det(M)

    def p(lam):
        return ((lam + c2) * lam + c1) * lam + c0

    # Gershgorin bound: every eigenvalue is >= lo, so p(lo) <= 0
    lo = min(M[i, i] - sum(abs(M[i, j]) for j in range(3) if j != i) for i in range(3)) - 1.0
    # upper bracket: local max of the cubic or the largest diagonal, whichever sign change comes first
    disc = c2 * c2 - 3 * c1
    hi = (-c2 - math.sqrt(max(disc, 0.0))) / 3.0 if disc > 0 else np.max(np.diag(M)) + 1.0
    if p(hi) < 0:  # repeated smallest root at the local max
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if p(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
