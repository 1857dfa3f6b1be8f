"""Simultaneous approximation on the torus and return-time sets.

Everything here is exhaustive scanning: for Q-independent irrational
angles the joint powers equidistribute, so a solving power always exists
and a finite scan finds the smallest one.  Correctness over speed; every
returned power re-verifies its defining inequalities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CHUNK = 65536


def chord_to(frac: np.ndarray, target_frac) -> np.ndarray:
    """|exp(2*pi*i*x) - exp(2*pi*i*y)| = 2 |sin(pi (x - y))|."""
    return 2.0 * np.abs(np.sin(np.pi * (frac - target_frac)))


@dataclass(frozen=True)
class TorusTarget:
    """System of inequalities |lambda_j**p - mu_j| < eta."""

    angles: tuple
    targets: tuple  # unimodular complex numbers
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        object.__setattr__(self, "targets", tuple(complex(t) for t in self.targets))
        if len(self.angles) != len(self.targets):
            raise ValueError("angles and targets must have equal length")
        if not 0 < self.eta < 2:
            raise ValueError("eta must lie in (0, 2)")

    def target_fracs(self) -> np.ndarray:
        return (np.angle(np.asarray(self.targets)) / (2 * np.pi)) % 1.0


@dataclass(frozen=True)
class ReturnTimeSet:
    times: tuple
    pi_max: int

    def __post_init__(self):
        times = tuple(sorted(int(t) for t in set(self.times)))
        object.__setattr__(self, "times", times)
        if times and self.pi_max != times[-1]:
            raise ValueError("pi_max must equal max(times)")

    @classmethod
    def from_times(cls, times) -> "ReturnTimeSet":
        times = sorted(set(int(t) for t in times))
        if not times:
            raise ValueError("return-time set must be nonempty")
        return cls(tuple(times), times[-1])

    def __len__(self) -> int:
        return len(self.times)


class NetCoverageError(RuntimeError):
    """Raised when some net point has no solving power within p_max."""

    def __init__(self, net_point, p_max):
        self.net_point = net_point
        self.p_max = p_max
        super().__init__(
            f"no power p <= {p_max} solves the net point {net_point}"
        )


def solve_simultaneous(t: TorusTarget, p_max: int) -> int | None:
    """Smallest p in [1, p_max] with |lambda_j**p - mu_j| < eta for all j,
    or None if the finite scan is exhausted."""
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    if not t.angles:
        return 1
    angles = np.asarray(t.angles)
    mu_fracs = t.target_fracs()
    for start in range(1, p_max + 1, _CHUNK):
        p = np.arange(start, min(start + _CHUNK, p_max + 1))
        frac = np.outer(p, angles) % 1.0
        ok = np.all(chord_to(frac, mu_fracs[None, :]) < t.eta, axis=1)
        hits = np.flatnonzero(ok)
        if hits.size:
            return int(p[hits[0]])
    return None


@dataclass(frozen=True)
class CoveringNet:
    """Product net over the torus with one verified solving power per net
    point.

    Net points are the grid exp(2*pi*i * i/m), i < m, in each coordinate,
    with m chosen so adjacent chord spacing is at most the requested
    resolution.  Any target tuple is within resolution/2 of some net point,
    and that point's power solves the target at tolerance eta.
    """

    angles: tuple
    eta: float
    mesh: int
    cell_to_p: np.ndarray  # flat array of length mesh**k

    @property
    def return_times(self) -> ReturnTimeSet:
        return ReturnTimeSet.from_times(self.cell_to_p.tolist())

    def cell_of(self, target_fracs) -> int:
        idx = np.round(np.asarray(target_fracs) * self.mesh).astype(int) % self.mesh
        return int(np.ravel_multi_index(idx, (self.mesh,) * len(self.angles)))

    def solve_for(self, targets) -> int:
        """Power covering an arbitrary unimodular target tuple."""
        fracs = (np.angle(np.asarray(targets, dtype=complex)) / (2 * np.pi)) % 1.0
        return int(self.cell_to_p[self.cell_of(fracs)])


def covering_scan(
    angles,
    eta: float,
    net_resolution: float,
    fixed_angles=(),
    fixed_eta: float = 2.0,
    p_max: int = 10**6,
) -> CoveringNet:
    """Scan p = 1, 2, ... marking, for each net cell, the first p whose
    phase tuple lands on it, optionally restricted to p with
    |lambda_old**p - 1| < fixed_eta for every fixed angle.

    The scan stops once every cell is marked; otherwise it raises
    :class:`NetCoverageError` carrying an uncovered net point.
    """
    angles = np.asarray([float(a) for a in angles])
    fixed = np.asarray([float(a) for a in fixed_angles])
    if eta <= 0:
        raise ValueError("eta must be positive")
    k = angles.size
    trivial = eta >= 2.0
    m = 1 if trivial else int(np.ceil(2 * np.pi / net_resolution))
    if not trivial and net_resolution > eta / 2:
        raise ValueError("net resolution must be at most eta/2")
    n_cells = m**k if k else 1
    cell_to_p = np.full(n_cells, -1, dtype=np.int64)
    remaining = n_cells
    strides = m ** np.arange(k - 1, -1, -1) if k else None
    for start in range(1, p_max + 1, _CHUNK):
        p = np.arange(start, min(start + _CHUNK, p_max + 1))
        if fixed.size:
            mask = np.all(
                chord_to(np.outer(p, fixed) % 1.0, 0.0) < fixed_eta, axis=1
            )
            p = p[mask]
            if p.size == 0:
                continue
        if k == 0 or trivial:
            if cell_to_p[0] < 0 and p.size:
                cell_to_p[:] = p[0]
                remaining = 0
        else:
            frac = np.outer(p, angles) % 1.0
            idx = np.round(frac * m).astype(np.int64) % m
            flat = idx @ strides
            uniq, first = np.unique(flat, return_index=True)
            new = cell_to_p[uniq] < 0
            cell_to_p[uniq[new]] = p[first[new]]
            remaining -= int(np.sum(new))
        if remaining == 0:
            break
    if remaining > 0:
        missing = int(np.flatnonzero(cell_to_p < 0)[0])
        point = np.unravel_index(missing, (m,) * k)
        nu = tuple(np.exp(2j * np.pi * i / m) for i in point)
        raise NetCoverageError(nu, p_max)
    net = CoveringNet(tuple(angles.tolist()), float(eta), m, cell_to_p)
    _verify_net(net, fixed, fixed_eta)
    return net


def _verify_net(net: CoveringNet, fixed: np.ndarray, fixed_eta: float) -> None:
    """Re-evaluate every stored power against its net point independently."""
    k = len(net.angles)
    p = net.cell_to_p
    if k and net.mesh > 1:
        grid = np.array(
            np.unravel_index(np.arange(p.size), (net.mesh,) * k)
        ).T / float(net.mesh)
        frac = np.outer(p, np.asarray(net.angles)) % 1.0
        if not np.all(chord_to(frac, grid) < net.eta):
            raise AssertionError("covering scan produced an invalid power")
    if fixed.size:
        frac = np.outer(p, fixed) % 1.0
        if not np.all(chord_to(frac, 0.0) < fixed_eta):
            raise AssertionError("covering scan violated the fixed-angle filter")


def return_time_net(angles, eta: float, net_resolution: float, p_max: int = 10**6) -> ReturnTimeSet:
    """Return-time set with the covering guarantee: for ANY unimodular
    target tuple, some returned p satisfies |lambda_j**p - mu_j| < eta for
    all j (net mesh <= eta/2 plus per-cell verification)."""
    return covering_scan(angles, eta, net_resolution, p_max=p_max).return_times


@dataclass(frozen=True)
class SyndeticResult:
    times: tuple  # the set D
    gap_bound: int  # max gap r of D within the horizon
    d_prime: tuple  # the set D' at tolerance eta/2
    violations: tuple  # elements of (D'-D') in [1, horizon] missing from D


def syndetic_return_set(angles, eta: float, horizon: int) -> SyndeticResult:
    """D = {p <= horizon : |lambda_j**p - 1| < eta for all j}, together with
    the half-tolerance set D' and the difference-set inclusion check
    (D' - D') n N n [1, horizon] subset of D."""
    if horizon < 10**3:
        raise ValueError("horizon must be at least 10**3")
    angles = np.asarray([float(a) for a in angles])
    p = np.arange(1, horizon + 1)
    if angles.size:
        frac = np.outer(p, angles) % 1.0
        chord = chord_to(frac, 0.0)
        d_mask = np.all(chord < eta, axis=1)
        dp_mask = np.all(chord < eta / 2, axis=1)
    else:
        d_mask = np.ones(horizon, dtype=bool)
        dp_mask = d_mask
    d = p[d_mask]
    if d.size == 0:
        raise ValueError(
            f"return set empty within horizon {horizon}: eta={eta} too tight"
        )
    d_prime = p[dp_mask]
    gaps = np.diff(np.concatenate(([0], d)))
    gap_bound = int(gaps.max())
    d_set = set(d.tolist())
    diffs = (d_prime[None, :] - d_prime[:, None]).ravel()
    diffs = np.unique(diffs[(diffs >= 1) & (diffs <= horizon)])
    violations = tuple(int(x) for x in diffs if int(x) not in d_set)
    return SyndeticResult(
        tuple(int(x) for x in d), gap_bound, tuple(int(x) for x in d_prime), violations
    )
