"""Finite energy-queue Markov chain and secondary throughput optimization.

States 0..E_max count stored energy packets at slot boundaries. Within a
slot, departures happen before arrivals: on an idle slot with at least G
packets the secondary spends G (whether or not its packet decodes), then
the slot's harvested packets are added and the queue saturates at E_max.
The top state therefore absorbs all overflow mass, which also folds the
truncated pmf tails back in.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .config import DerivedConstants, SystemParams
from .harvest import HarvestPmf
from . import primary_link


class ChainError(ValueError):
    """Inconsistent inputs to chain construction."""


class StationarySolveError(RuntimeError):
    """Stationary solve failed to reach the target residual."""


class ReducibleChainWarning(UserWarning):
    """The chain is reducible; the returned vector is the long-run occupancy
    starting from an empty queue."""


@dataclass
class EnergyChain:
    """Transition matrix omega (row-stochastic, (E_max+1)^2), the energy
    budget g it was built with, and the stationary vector chi once solved."""

    omega: np.ndarray
    g: int
    chi: np.ndarray | None = None


def _at(p, m):
    return p[m] if 0 <= m < len(p) else 0.0


def _head(cum, m):
    """Sum of pmf entries 0..m-1 given the cumulative-sum array."""
    if m <= 0:
        return 0.0
    return cum[min(m, len(cum)) - 1]


def _check_pmf(pmf: HarvestPmf, role):
    s = math.fsum(pmf.probs) + pmf.tail_mass
    if abs(s - 1.0) > 1e-9 or pmf.tail_mass > 1e-6 or np.any(pmf.probs < 0):
        raise ChainError(f"{role} arrival pmf is not normalized")


def build_chain(p_idle_arrivals: HarvestPmf, p_active_arrivals: HarvestPmf,
                pi_idle, g, e_max) -> EnergyChain:
    """Assemble the transition matrix of the energy queue.

    From state j the next state is min(base + arrivals, e_max), where
    base = j - g on an idle slot with j >= g (a transmission was funded)
    and base = j otherwise; arrivals follow the idle pmf on idle slots and
    the active pmf on active slots. The e_max column takes the
    complementary sums, so every row totals 1 by construction.
    """
    if not (isinstance(g, int) and isinstance(e_max, int) and 1 <= g <= e_max):
        raise ChainError(f"need integers 1 <= g <= e_max (got g={g}, e_max={e_max})")
    if not 0.0 <= pi_idle <= 1.0:
        raise ChainError(f"pi_idle must lie in [0, 1] (got {pi_idle})")
    _check_pmf(p_idle_arrivals, "idle")
    _check_pmf(p_active_arrivals, "active")

    pp = p_idle_arrivals.probs
    pa = p_active_arrivals.probs
    cum_pp = np.cumsum(pp)
    cum_pa = np.cumsum(pa)
    pi = float(pi_idle)
    pi_bar = 1.0 - pi

    n = e_max + 1
    omega = np.zeros((n, n))
    for j in range(n):
        base = j - g if j >= g else j
        for k in range(e_max):
            omega[j, k] = pi * _at(pp, k - base) + pi_bar * _at(pa, k - j)
        # complements clamped at 0: a pmf summing to 1 + 1ulp must not
        # produce a negative transition probability
        omega[j, e_max] = pi * max(0.0, 1.0 - _head(cum_pp, e_max - base)) \
            + pi_bar * max(0.0, 1.0 - _head(cum_pa, e_max - j))
    return EnergyChain(omega=omega, g=g)


def _solve_direct(omega):
    n = omega.shape[0]
    a = np.vstack([omega.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    chi, *_ = np.linalg.lstsq(a, b, rcond=None)
    chi = np.clip(chi, 0.0, None)
    return chi / chi.sum()


def _power_iteration(omega, tol=1e-12, max_iter=10**6):
    # iterate the lazy kernel (I + omega)/2: same fixed point, no 2-cycles
    n = omega.shape[0]
    chi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = 0.5 * (chi + chi @ omega)
        if np.max(np.abs(nxt - chi)) < tol:
            return nxt / nxt.sum()
        chi = nxt
    residual = float(np.max(np.abs(chi @ omega - chi)))
    raise StationarySolveError(
        f"power iteration did not converge within {max_iter} iterations (residual {residual:.3e})")


def _terminal_components(omega, labels, n_comp):
    """Component ids with no outgoing edge into another component."""
    terminal = set(range(n_comp))
    rows, cols = np.nonzero(omega > 0.0)
    edges = set()
    for r, c in zip(rows, cols):
        if labels[r] != labels[c]:
            terminal.discard(labels[r])
            edges.add((labels[r], labels[c]))
    return terminal, edges


def _reducible_stationary(omega, labels, n_comp, start_state):
    """Long-run occupancy of a reducible chain started at start_state.

    Weights each terminal class by its absorption probability from the
    start state and mixes the per-class stationary vectors.
    """
    n = omega.shape[0]
    terminal, _ = _terminal_components(omega, labels, n_comp)
    term_states = {c: np.flatnonzero(labels == c) for c in terminal}

    start_comp = labels[start_state]
    if start_comp in terminal:
        weights = {start_comp: 1.0}
    else:
        transient = np.flatnonzero(~np.isin(labels, list(terminal)))
        idx = {s: i for i, s in enumerate(transient)}
        q = omega[np.ix_(transient, transient)]
        term_list = sorted(terminal)
        r = np.column_stack([omega[np.ix_(transient, term_states[c])].sum(axis=1)
                             for c in term_list])
        absorb = np.linalg.solve(np.eye(len(transient)) - q, r)
        weights = {c: float(absorb[idx[start_state], i]) for i, c in enumerate(term_list)}

    chi = np.zeros(n)
    for c, w in weights.items():
        if w <= 0.0:
            continue
        states = term_states[c]
        sub = omega[np.ix_(states, states)]
        chi[states] = w * (_solve_direct(sub) if len(states) > 1 else 1.0)
    return chi / chi.sum()


def stationary(chain: EnergyChain, tol=1e-10, start_state=0) -> np.ndarray:
    """Solve chi = chi @ omega, store it on the chain, and return it.

    Irreducible chains get the unique stationary vector via a direct linear
    solve (power iteration as fallback). Reducible chains are reported with
    a ReducibleChainWarning and resolved as the long-run occupancy from
    start_state (the simulator's empty-queue initial condition).
    """
    omega = np.asarray(chain.omega, dtype=float)
    n = omega.shape[0]
    row_err = float(np.max(np.abs(omega.sum(axis=1) - 1.0)))
    if omega.shape != (n, n) or row_err > 1e-9 or np.any(omega < 0):
        raise ChainError("omega must be row-stochastic")

    n_comp, labels = connected_components(
        csr_matrix(omega > 0.0), directed=True, connection="strong")
    if n_comp == 1:
        chi = _solve_direct(omega)
        if float(np.max(np.abs(chi @ omega - chi))) >= tol:
            chi = _power_iteration(omega)
    else:
        warnings.warn(
            "energy chain is reducible; returning the occupancy reached from an empty queue",
            ReducibleChainWarning, stacklevel=2)
        chi = _reducible_stationary(omega, labels, n_comp, start_state)

    residual = float(np.max(np.abs(chi @ omega - chi)))
    if residual >= tol:
        raise StationarySolveError(f"stationary residual {residual:.3e} exceeds {tol:.1e}")
    chain.chi = chi
    return chi


def solve_chain(p_idle_arrivals, p_active_arrivals, pi_idle, g, e_max) -> EnergyChain:
    """build_chain followed by stationary."""
    chain = build_chain(p_idle_arrivals, p_active_arrivals, pi_idle, g, e_max)
    stationary(chain)
    return chain


def outage_threshold(params: SystemParams, dc: DerivedConstants, g):
    """Channel gain the secondary link must reach when spending g packets."""
    return params.N0 * params.W * (params.T - params.tau) * (2.0 ** dc.R_s - 1.0) \
        / (g * params.e_pkt)


def success_probability(params: SystemParams, dc: DerivedConstants, g):
    """Probability the secondary packet decodes when g packets fund it."""
    return math.exp(-outage_threshold(params, dc, g) / params.sigma_ssd)


def _availability(chain: EnergyChain):
    if chain.chi is None:
        raise ChainError("chain is not solved; call stationary() first")
    return float(chain.chi[chain.g:].sum())


def su_throughput(chain: EnergyChain, params: SystemParams, dc: DerivedConstants):
    """Secondary packets delivered per slot for the chain's energy budget."""
    pi = primary_link.pi_idle(params, dc)
    return pi * success_probability(params, dc, chain.g) * _availability(chain)


def mu_e(chain: EnergyChain, params: SystemParams, dc: DerivedConstants):
    """Mean energy packets consumed per slot for the chain's budget."""
    return chain.g * primary_link.pi_idle(params, dc) * _availability(chain)


@dataclass(frozen=True)
class ThroughputReport:
    """Analytic summary at one operating point.

    mu_s_by_g maps every feasible energy budget to its secondary
    throughput; g_star is the smallest maximizer and mu_e the consumption
    rate of the chain built with g_star.
    """

    pi_idle: float
    mu_p: float
    pu_throughput: float
    mu_e: float
    mu_s_by_g: dict[int, float]
    g_star: int
    mu_s_star: float


def optimize_g(params: SystemParams, dc: DerivedConstants,
               pmfs: tuple[HarvestPmf, HarvestPmf]) -> ThroughputReport:
    """Exhaustively evaluate every energy budget 1..E_max and pick the best.

    Ties break toward the smallest budget, deterministically.
    """
    idle, active = pmfs
    pi = primary_link.pi_idle(params, dc)
    mu_s_by_g = {}
    chains = {}
    for g in range(1, params.E_max + 1):
        chain = solve_chain(idle, active, pi, g, params.E_max)
        chains[g] = chain
        mu_s_by_g[g] = su_throughput(chain, params, dc)
    g_star = 1
    for g in range(2, params.E_max + 1):
        if mu_s_by_g[g] > mu_s_by_g[g_star]:
            g_star = g
    return ThroughputReport(
        pi_idle=pi,
        mu_p=primary_link.mu_p(params, dc),
        pu_throughput=primary_link.pu_throughput(params, dc),
        mu_e=mu_e(chains[g_star], params, dc),
        mu_s_by_g=mu_s_by_g,
        g_star=g_star,
        mu_s_star=mu_s_by_g[g_star],
    )
