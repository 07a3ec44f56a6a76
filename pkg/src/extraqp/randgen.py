"""Random positivity-constrained QP generator with controlled conditioning.

An instance is built from a Haar-distributed orthogonal matrix Q and a
diagonal T whose extreme entries are sqrt(t) and 1/sqrt(t), giving
H = Q T Q' an exact 2-norm condition number of t.  The linear cost is
uniform on (-1/2, 1/2) and the constraints are positivity on every
variable.  One seed feeds three independent substreams (Q, the diagonal
exponents, c) so instances are reproducible regardless of how much
randomness each part consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import QpProblem, make_problem


@dataclass(frozen=True)
class RandomSpec:
    """Parameters of one generated instance."""

    n: int
    t: float
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.t < 1.0:
            raise ValueError("condition number t must be at least 1")


def _substreams(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _gaussian_polar(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normals via the Marsaglia polar method.

    Avoids library normal samplers so fixtures stay bit-stable at a fixed
    seed within one build.
    """
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        m = max(need, 64)
        u = 2.0 * rng.random(m) - 1.0
        v = 2.0 * rng.random(m) - 1.0
        s = u * u + v * v
        ok = (s > 0.0) & (s < 1.0)
        u, v, s = u[ok], v[ok], s[ok]
        f = np.sqrt(-2.0 * np.log(s) / s)
        pair = np.empty(2 * s.size)
        pair[0::2] = u * f
        pair[1::2] = v * f
        take = min(pair.size, need)
        out[filled:filled + take] = pair[:take]
        filled += take
    return out


def random_orthogonal(n: int, seed: int | np.random.Generator = 0) -> np.ndarray:
    """Haar-uniform orthogonal matrix via QR with sign correction."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else _substreams(seed, 1)[0]
    gauss = _gaussian_polar(rng, n * n).reshape(n, n)
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def random_qp(spec: RandomSpec) -> QpProblem:
    """Generate a dense positivity-constrained instance for the spec."""
    q_rng, t_rng, c_rng = _substreams(spec.seed, 3)
    n, t = spec.n, spec.t
    sqrt_t = np.sqrt(t)

    diag = np.empty(n)
    if n == 1:
        diag[0] = 1.0
    else:
        diag[0] = sqrt_t
        diag[-1] = 1.0 / sqrt_t
        if n > 2:
            exponents = 2.0 * t_rng.random(n - 2) - 1.0
            diag[1:-1] = sqrt_t ** exponents

    if t == 1.0:
        hessian = np.eye(n)
    else:
        q = random_orthogonal(n, q_rng)
        hessian = (q * diag) @ q.T
        hessian = 0.5 * (hessian + hessian.T)

    cost = c_rng.random(n) - 0.5
    return make_problem(hessian, cost, a_ineq=np.eye(n), b_ineq=np.zeros(n),
                        name=f"rand-n{n}-t{t:g}-s{spec.seed}")
