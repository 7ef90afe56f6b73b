"""Seeded instance generators with a fixed, documented random stream.

Reproducibility contract
------------------------
All randomness comes from the splitmix64 sequence: starting from the 64-bit
seed as state, each draw updates

    state <- state + 0x9E3779B97F4A7C15          (mod 2^64)
    z <- state
    z <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9  (mod 2^64)
    z <- (z XOR (z >> 27)) * 0x94D049BB133111EB  (mod 2^64)
    output:  z XOR (z >> 31)

Uniforms in [0, 1) take the top 53 bits: u = (output >> 11) * 2^-53.
Normals use the Box-Muller transform on consecutive uniform pairs
(u1, u2), with u1 = 0 replaced by 2^-53:

    n0 = sqrt(-2 ln u1) cos(2 pi u2),   n1 = sqrt(-2 ln u1) sin(2 pi u2).

Index subsets of size s are the first s entries of a Fisher-Yates shuffle
driven by j = floor(u * (i + 1)) at step i.  Given the same seed, instances
are bit-identical on any platform with faithfully rounded libm.
"""

import numpy as np

from .problems import BpProblem, EmdProblem, SmcProblem, SpcpProblem

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = float(2.0**-53)


class RandomStream:
    """splitmix64 stream with uniform, normal, and shuffle draws."""

    def __init__(self, seed):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        self._state = np.uint64(seed)

    def next_raw(self, count):
        """The next ``count`` raw 64-bit outputs."""
        idx = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = self._state + idx * _GAMMA
            self._state = self._state + np.uint64(count) * _GAMMA
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
            z = z ^ (z >> np.uint64(31))
        return z

    def uniform(self, size=None):
        count = 1 if size is None else int(np.prod(size))
        u = (self.next_raw(count) >> np.uint64(11)).astype(np.float64) * _U53
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def normal(self, size=None):
        count = 1 if size is None else int(np.prod(size))
        pairs = (count + 1) // 2
        u = self.uniform((2, pairs))
        u1 = np.maximum(u[0], _U53)
        u2 = u[1]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:count]
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def subset(self, total, count):
        """First ``count`` entries of a seeded Fisher-Yates shuffle of range(total)."""
        if count > total:
            raise ValueError(f"cannot draw {count} distinct indices from {total}")
        perm = np.arange(total, dtype=np.intp)
        if total > 1:
            u = self.uniform(total - 1)
            for i in range(total - 1, 0, -1):
                j = int(u[total - 1 - i] * (i + 1))
                perm[i], perm[j] = perm[j], perm[i]
        return np.sort(perm[:count])


def gen_bp(m=500, n=2000, p_nonzero=0.05, seed=0):
    """Gaussian measurement matrix with a planted sparse vector.

    Entries of A are N(0, 1/m); the planted x* has independently nonzero
    entries with probability p_nonzero and standard normal values; b = A x*.
    The defaults give the benchmark instance family at full size.
    Returns (BpProblem, x*).
    """
    if not m <= n:
        raise ValueError(f"need m <= n, got {m} > {n}")
    if not 0 < p_nonzero <= 1:
        raise ValueError(f"p_nonzero must be in (0, 1], got {p_nonzero}")
    stream = RandomStream(seed)
    a = stream.normal((m, n)) / np.sqrt(m)
    support = stream.uniform(n) < p_nonzero
    values = stream.normal(n)
    xstar = np.where(support, values, 0.0)
    b = a @ xstar
    return BpProblem(a, b), xstar


def gen_spcp(n1, n2, r, sparse_frac, noise_sigma, seed, lam=None):
    """Planted low-rank + sparse + noise model M = L* + S* + N.

    L* is a product of two standard normal factors of rank r, S* has
    independently nonzero N(0, 1) entries with the given fraction, N is
    entrywise N(0, noise_sigma^2), and eps = ||N||_F.
    Returns (SpcpProblem, (L*, S*)).
    """
    if r > min(n1, n2):
        raise ValueError(f"rank {r} exceeds min dimension {min(n1, n2)}")
    if not 0 <= sparse_frac <= 1:
        raise ValueError(f"sparse_frac must be in [0, 1], got {sparse_frac}")
    stream = RandomStream(seed)
    if r > 0:
        lstar = stream.normal((n1, r)) @ stream.normal((n2, r)).T
    else:
        lstar = np.zeros((n1, n2))
    support = stream.uniform((n1, n2)) < sparse_frac
    sstar = np.where(support, stream.normal((n1, n2)), 0.0)
    noise = noise_sigma * stream.normal((n1, n2)) if noise_sigma > 0 else np.zeros((n1, n2))
    eps = float(np.linalg.norm(noise))
    m = lstar + sstar + noise
    return SpcpProblem(m, lam=lam, eps=eps), (lstar, sstar)


def gen_smc(n, r, oversample, noise_sigma, seed):
    """Partially observed noisy low-rank matrix.

    M = M_L M_R^T with n-by-r standard normal factors; the mask is a uniform
    subset of size round(oversample * r(2n - r)); observations on the mask
    are corrupted by N(0, noise_sigma^2) noise and eps = ||P_Omega(N)||_F.
    ``noise_sigma=None`` picks 1e-3 * sqrt(r), giving
    eps / ||P_Omega(M)||_F of about 1e-3.
    Returns (SmcProblem, M).
    """
    if r > n:
        raise ValueError(f"rank {r} exceeds dimension {n}")
    s = int(round(oversample * r * (2 * n - r)))
    if s > n * n:
        raise ValueError(
            f"requested {s} observations exceed the {n * n} matrix entries"
        )
    if noise_sigma is None:
        noise_sigma = 1e-3 * np.sqrt(max(r, 1))
    stream = RandomStream(seed)
    m = stream.normal((n, r)) @ stream.normal((n, r)).T if r > 0 else np.zeros((n, n))
    flat = stream.subset(n * n, s)
    pairs = np.column_stack([flat // n, flat % n])
    noise = noise_sigma * stream.normal(s) if noise_sigma > 0 else np.zeros(s)
    observed = np.zeros((n, n))
    observed[pairs[:, 0], pairs[:, 1]] = m[pairs[:, 0], pairs[:, 1]] + noise
    eps = float(np.linalg.norm(noise))
    from .prox import ObservationMask

    return SmcProblem(observed, ObservationMask(pairs), eps), m


def gen_emd_pair(kind, n, params=None, seed=0):
    """Density pairs for the transport solver.

    kinds:
      ``point_masses`` - unit masses at ``source``/``target`` pixels (random
        distinct pixels when omitted);
      ``blobs`` - sums of ``count`` seeded Gaussian bumps (default 2) per
        density, rasterized on the grid;
      ``loaded_pgm`` - densities from two grayscale image files given as
        ``source``/``target`` paths: intensity is inverted (dark pixels carry
        mass) and clipped at ``threshold`` (default 0.5).

    Densities are normalized to unit mass by the problem constructor;
    eps defaults to 1e-10.  Returns an EmdProblem.
    """
    params = dict(params or {})
    eps = params.pop("eps", 1e-10)
    h = params.pop("h", 1.0)
    stream = RandomStream(seed)
    if kind == "point_masses":
        if "source" in params and "target" in params:
            (i0, j0), (i1, j1) = params.pop("source"), params.pop("target")
        else:
            i0, j0, i1, j1 = (int(u * n) for u in stream.uniform(4))
            if (i0, j0) == (i1, j1):
                i1 = (i1 + 1) % n
        rho0 = np.zeros((n, n))
        rho1 = np.zeros((n, n))
        rho0[i0, j0] = 1.0
        rho1[i1, j1] = 1.0
    elif kind == "blobs":
        count = int(params.pop("count", 2))
        width = float(params.pop("width", n / 6.0))
        grid = np.arange(n, dtype=np.float64)
        ii, jj = np.meshgrid(grid, grid, indexing="ij")

        def one(stream):
            rho = np.zeros((n, n))
            for _ in range(count):
                ci, cj = stream.uniform(2) * (n - 1)
                rho += np.exp(-((ii - ci) ** 2 + (jj - cj) ** 2) / (2 * width**2))
            return rho

        rho0, rho1 = one(stream), one(stream)
    elif kind == "loaded_pgm":
        from .io import read_pgm

        threshold = float(params.pop("threshold", 0.5))
        rho0 = np.maximum(threshold - read_pgm(params.pop("source")), 0.0)
        rho1 = np.maximum(threshold - read_pgm(params.pop("target")), 0.0)
        n = rho0.shape[0]
    else:
        raise ValueError(f"unknown density kind: {kind!r}")
    if params:
        raise ValueError(f"unused generator parameters: {sorted(params)}")
    return EmdProblem(rho0, rho1, h=h, eps=eps)
