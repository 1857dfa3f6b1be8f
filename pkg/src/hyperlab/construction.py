"""Inductive block construction of a random eigenvector series whose
sampled values visit a prescribed ladder of target balls.

Each block approximates a target by a finite eigencombination, splits the
coefficients into equal parts, swaps every part onto a fresh nearby
eigenvector with an unused angle, and certifies two things by computation:
a Monte Carlo bound on the expected block norm against the geometric
budget 4**-n / ||T||**max(pi_1..pi_{n-1}), and a covering return-time set
guaranteeing that almost every sampled value is carried into the target by
some power from the set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .diophantine import ReturnTimeSet, covering_scan
from .eigenfields import EigenExpansion, EigenFamily, EigenPair
from .linspace import StateVector, norm
from .operators import OperatorSpec

_UCB_Z = 2.326  # one-sided 99% normal quantile


class ConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CoefficientSplit:
    """Equal-part split of a coefficient: the parts reassemble exactly and
    their squared moduli sum below the requested bound."""

    parent: complex
    parts: tuple


def split_coefficient(a: complex, eps: float) -> CoefficientSplit:
    """N = floor(|a|**2/eps) + 1 equal parts a/N; then sum(parts) == a and
    sum |part|**2 = |a|**2/N < eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    a = complex(a)
    n = int(abs(a) ** 2 / eps) + 1
    return CoefficientSplit(a, (a / n,) * n)


def basis_constant(vectors) -> float:
    """Smallest M with ||sum beta_k x_k|| <= M (sum |beta_k|**2)**(1/2),
    i.e. the largest singular value of the column matrix."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("need at least one vector")
    mat = np.column_stack([v.entries for v in vectors])
    return float(np.linalg.svd(mat, compute_uv=False)[0])


@dataclass(frozen=True)
class ScheduleEntry:
    """Per-step tolerances, recorded in the order they were fixed:
    M first, then delta, then gamma, then (rho, eta, kappa)."""

    M: float
    delta: float
    gamma: float
    eta: float
    rho: float
    kappa: float


@dataclass(frozen=True)
class ConstructionTarget:
    """Target ball: an eigencombination over the seed family (coefficient,
    family index), a radius, and the known power carrying the combination
    into the ball's center."""

    coefficients: tuple  # of (complex, int)
    radius: float
    reach_power: int = 1

    def __post_init__(self):
        object.__setattr__(
            self,
            "coefficients",
            tuple((complex(c), int(i)) for c, i in self.coefficients),
        )
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.reach_power < 0:
            raise ValueError("reach power must be >= 0")


@dataclass(frozen=True)
class Block:
    index: int
    terms: tuple  # of (complex, EigenPair), fresh distinct angles
    center: StateVector
    radius: float
    reach_power: int
    return_times: ReturnTimeSet
    expected_norm_bound: float  # MC upper 99% confidence on E||Phi_n||
    budget: float  # 4**-n / ||T||**max(pi_<n)
    schedule: ScheduleEntry

    def thetas(self) -> tuple:
        return tuple(p.theta for _, p in self.terms)

    def coefficient_l1(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))

    def expansion(self) -> EigenExpansion:
        return EigenExpansion(self.terms)


@dataclass
class ConstructionState:
    op: OperatorSpec
    family: EigenFamily
    blocks: list = field(default_factory=list)
    used_thetas: set = field(default_factory=set)

    def max_pi(self) -> int:
        return max((b.return_times.pi_max for b in self.blocks), default=0)

    def all_terms(self) -> list:
        return [t for b in self.blocks for t in b.terms]

    def to_json(self) -> str:
        payload = {
            "operator": {
                "kind": self.op.kind,
                "dim": self.op.dim,
                "norm_bound": self.op.norm_bound,
            },
            "blocks": [
                {
                    "index": b.index,
                    "angles": list(b.thetas()),
                    "coefficients": [[c.real, c.imag] for c, _ in b.terms],
                    "return_times": list(b.return_times.times),
                    "radius": b.radius,
                    "reach_power": b.reach_power,
                    "expected_norm_bound": b.expected_norm_bound,
                    "budget": b.budget,
                }
                for b in self.blocks
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def _fresh_pairs(family, used, anchor: EigenPair, count: int, gamma: float):
    """The ``count`` unused family members nearest to the anchor in vector
    distance, all within gamma; None if too few exist."""
    mat = family.coordinate_matrix()
    diff = mat - anchor.vector.entries[:, None]
    dists = np.linalg.norm(diff, axis=0)
    order = np.argsort(dists)
    chosen = []
    for idx in order:
        pair = family.pairs[idx]
        if pair.theta in used:
            continue
        if dists[idx] >= gamma:
            break
        chosen.append((pair, float(dists[idx])))
        if len(chosen) == count:
            return chosen
    return None


def build_block(
    state: ConstructionState,
    op: OperatorSpec,
    family: EigenFamily,
    target: ConstructionTarget,
    rng: np.random.Generator,
    trials: int = 2000,
    max_tighten: int = 8,
    p_max: int = 10**6,
) -> Block:
    """Build block n against the given target and append it to the state.

    The target center is rescaled into the block's expectation budget when
    necessary (later blocks operate at geometrically shrinking amplitude;
    an unscaled center could never satisfy the budget at finite split
    sizes).  The block records the actual center used.
    """
    n = len(state.blocks) + 1
    max_pi = state.max_pi()
    log_budget = -n * math.log(4.0) - max_pi * math.log(op.norm_bound)
    if log_budget < math.log(5e-300):
        raise ConstructionError(
            f"block {n} budget 4**-{n}/||T||**{max_pi} underflows double precision"
        )
    budget = math.exp(log_budget)

    seeds = [(c, family.pairs[i]) for c, i in target.coefficients]
    total = sum(abs(c) for c, _ in seeds)
    scale = min(1.0, 0.4 * budget / total) if total > 0 else 1.0
    alphas = [(c * scale, pair) for c, pair in seeds]
    scaled_total = total * scale

    m_const = basis_constant([p.vector for _, p in alphas]) if alphas else 1.0
    delta = 1.25 * scaled_total if scaled_total > 0 else 1.0
    rho = target.radius / (2.0 * op.norm_bound**target.reach_power)

    last_failure = ""
    for _ in range(max_tighten + 1):
        built = _assemble_terms(state, family, alphas, delta, rho)
        if built is None:
            delta /= 2.0
            last_failure = "no admissible fresh neighbors at this gamma"
            continue
        terms, gamma, used_now = built
        report = _certify_expectation(terms, rng, trials)
        if report < budget:
            break
        delta /= 2.0
        last_failure = (
            f"E-bound {report:.3e} not below budget {budget:.3e}"
        )
    else:
        raise ConstructionError(
            f"block {n}: expectation bound failed after {max_tighten} tightenings "
            f"({last_failure})"
        )

    l1 = sum(abs(c) for c, _ in terms)
    eta = min(1.9, rho / (2.0 * l1)) if l1 > 0 else 1.9
    kappa = target.radius / 4.0
    prior_l1 = sum(abs(c) for c, _ in state.all_terms())
    old_angles = [p.theta for _, p in state.all_terms()]
    old_eta = min(1.9, kappa / prior_l1) if prior_l1 > 0 else 2.0

    net = covering_scan(
        [p.theta for _, p in terms],
        eta,
        eta / 2.0,
        fixed_angles=old_angles,
        fixed_eta=old_eta,
        p_max=p_max,
    )
    q_times = net.return_times.times
    p_times = ReturnTimeSet.from_times([target.reach_power + q for q in q_times])

    center = EigenExpansion(terms).power(target.reach_power)
    entry = ScheduleEntry(
        M=m_const, delta=delta, gamma=gamma, eta=eta, rho=rho, kappa=kappa
    )
    block = Block(
        index=n,
        terms=tuple(terms),
        center=center,
        radius=target.radius,
        reach_power=target.reach_power,
        return_times=p_times,
        expected_norm_bound=report,
        budget=budget,
        schedule=entry,
    )
    _check_block_invariants(state, block)
    state.blocks.append(block)
    state.used_thetas.update(used_now)
    return block


def _assemble_terms(state, family, alphas, delta, rho):
    """Split every coefficient under the delta schedule and pick fresh
    nearby eigenpairs with unused angles; returns (terms, gamma, used) or
    None when some coefficient has too few admissible neighbors."""
    n_coeffs = max(len(alphas), 1)
    eps = (delta / n_coeffs) ** 2
    l1 = 0.0
    splits = []
    for c, pair in alphas:
        s = split_coefficient(c, eps)
        splits.append((s, pair))
        l1 += sum(abs(x) for x in s.parts)
    gamma = min(delta / 4.0, rho / (2.0 * l1)) if l1 > 0 else delta / 4.0
    used = set(state.used_thetas)
    terms = []
    drift = 0.0
    for s, anchor in splits:
        found = _fresh_pairs(family, used, anchor, len(s.parts), gamma)
        if found is None:
            return None
        for a_j, (pair, dist) in zip(s.parts, found):
            terms.append((a_j, pair))
            used.add(pair.theta)
            drift += abs(a_j) * dist
    # ||u_n - v_n|| <= gamma * sum|a_j| by the triangle inequality
    if drift > gamma * l1 + 1e-15:
        raise ConstructionError("fresh-neighbor drift exceeded the gamma bound")
    return terms, gamma, used


def _certify_expectation(terms, rng, trials) -> float:
    """Upper 99% confidence bound on E||Phi_n|| by Monte Carlo."""
    if not terms:
        return 0.0
    coeffs = np.array([c for c, _ in terms])
    mat = np.column_stack([p.vector.entries for _, p in terms])
    chi = np.exp(2j * np.pi * rng.random((trials, coeffs.size)))
    norms = np.linalg.norm((chi * coeffs[None, :]) @ mat.T, axis=1)
    return float(np.mean(norms) + _UCB_Z * np.std(norms, ddof=1) / np.sqrt(trials))


def _check_block_invariants(state: ConstructionState, block: Block) -> None:
    thetas = block.thetas()
    if len(set(thetas)) != len(thetas):
        raise ConstructionError("block angles must be pairwise distinct")
    if state.used_thetas.intersection(thetas):
        raise ConstructionError("block angles must avoid all earlier blocks")
    if not block.expected_norm_bound < block.budget:
        raise ConstructionError("certified expectation bound above the budget")


@dataclass(frozen=True)
class BlockCertificate:
    index: int
    expected_norm_bound: float
    budget: float
    visit_rate: float
    visit_floor: float
    visit_stderr: float


@dataclass(frozen=True)
class ConstructionReport:
    certificates: tuple
    total_norm_estimate: float
    total_norm_budget: float

    def all_passed(self) -> bool:
        return all(
            c.expected_norm_bound < c.budget
            and c.visit_rate >= c.visit_floor - 3 * c.visit_stderr
            for c in self.certificates
        )


def run_construction(
    op: OperatorSpec,
    family: EigenFamily,
    targets,
    n_steps: int,
    rng: np.random.Generator,
    trials: int = 2000,
    cert_samples: int = 200,
    p_max: int = 10**6,
):
    """Build n_steps blocks, sample one realization of the full series and
    certify every block's expectation bound and visit frequency.

    Returns (state, sampled expansion, report).  The sampled expansion
    carries the Steinhaus phases folded into its coefficients, so operator
    powers act on the eigenvalues only.
    """
    targets = list(targets)
    if n_steps < 0 or len(targets) < n_steps:
        raise ValueError("need one target per construction step")
    state = ConstructionState(op=op, family=family)
    for n in range(n_steps):
        build_block(state, op, family, targets[n], rng, trials=trials, p_max=p_max)

    terms = state.all_terms()
    if terms:
        chi = np.exp(2j * np.pi * rng.random(len(terms)))
        phi = EigenExpansion(
            tuple((chi[t] * c, p) for t, (c, p) in enumerate(terms))
        )
    else:
        phi = EigenExpansion(())

    certificates = []
    total_norms = []
    if terms:
        coeffs = np.array([c for c, _ in terms])
        mat = np.column_stack([p.vector.entries for _, p in terms])
        gram = mat.conj().T @ mat
        omega = np.exp(2j * np.pi * rng.random((cert_samples, len(terms))))
        weights = omega * coeffs[None, :]
        total_norms = np.sqrt(
            np.abs(np.einsum("oi,ij,oj->o", weights.conj(), gram, weights)).real
        )
        for b in state.blocks:
            rate = _visit_rate(b, terms, weights, mat, gram)
            floor = 1.0 - (5.0 / 3.0) * 2.0 ** (-b.index)
            se = math.sqrt(max(rate * (1 - rate), 1e-12) / cert_samples)
            certificates.append(
                BlockCertificate(
                    b.index, b.expected_norm_bound, b.budget, rate, floor, se
                )
            )
    report = ConstructionReport(
        certificates=tuple(certificates),
        total_norm_estimate=float(np.mean(total_norms)) if terms else 0.0,
        total_norm_budget=sum(4.0**-n for n in range(1, n_steps + 1)),
    )
    return state, phi, report


def _visit_rate(block: Block, terms, weights, mat, gram) -> float:
    """Fraction of sampled realizations for which some p in the block's
    return-time set carries T**p Phi - Phi into the inflated target."""
    thetas = np.array([p.theta for _, p in terms])
    p_arr = np.array(block.return_times.times)
    lam_pow = np.exp(2j * np.pi * np.outer(p_arr, thetas)) - 1.0  # P x terms
    c = block.center.entries
    h = mat.conj().T @ c
    c_sq = float(np.real(np.vdot(c, c)))
    tol = block.radius + 2.0 ** (-(block.index - 1))
    hits = 0
    for w in weights:
        wp = lam_pow * w[None, :]  # P x terms
        quad = np.einsum("pi,ij,pj->p", wp.conj(), gram, wp).real
        cross = 2.0 * (wp @ h.conj()).real
        dist_sq = quad - cross + c_sq
        if np.any(dist_sq < tol * tol):
            hits += 1
    return hits / weights.shape[0]


def verify_visit(
    op: OperatorSpec,
    phi: EigenExpansion,
    block: Block,
    prior: EigenExpansion | None = None,
    slack: float = 0.0,
):
    """First p in the block's return-time set with
    T**p phi - prior in ball(center, radius + slack); (False, None) if none."""
    prior_vec = prior.to_vector().entries if prior and prior.terms else 0.0
    tol = block.radius + slack
    for p in block.return_times.times:
        moved = phi.power(p).entries - prior_vec - block.center.entries
        if np.linalg.norm(moved) < tol:
            return True, p
    return False, None
