"""Response rules for level games and the behavior-model registry.

A level game is summarized by one payoff tensor per agent, each of shape
(n_actions_1, ..., n_actions_N); axis i indexes agent i's actions. All noisy
responses are logit responses computed with max-shifted exponentials.

Model keys follow ``metamodel:g1:g2:scheme``:

* ``QL0``/``QL1`` carry the level-game responses as ``g1:g2``. Under S1
  sampling level-2 games are 1x1 and the g2 choice is vacuous; the key
  repeats g1 there, e.g. ``QL0:MM:MM:S1`` next to ``QL0:BR:MM:S1B``.
* ``PNE-QE`` carries only the trajectory response, e.g. ``PNE-QE:BR:S1B`` or
  ``PNE-QE:S1``.

The registry enumerates exactly 25 models.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EmptyEquilibriumSet
from .lattice import SamplingScheme

__all__ = [
    "ResponseKind",
    "Metamodel",
    "ResponseConcept",
    "MixedResponse",
    "BehaviorModel",
    "MODEL_REGISTRY",
    "best_response_profile",
    "noisy_br",
    "maxmin_profile",
    "noisy_mm",
    "qbr",
    "ql1_response",
    "enumerate_pne",
    "pne_qe_response",
]


class ResponseKind(enum.Enum):
    BR = "BR"
    MM = "MM"
    QBR = "QBR"
    PNE = "PNE"


class Metamodel(enum.Enum):
    QL0 = "QL0"
    QL1 = "QL1"
    PNE_QE = "PNE-QE"


@dataclass(frozen=True)
class ResponseConcept:
    kind: ResponseKind
    noisy: bool = False
    lam: float | None = None

    def __post_init__(self):
        if self.noisy and (self.lam is None or self.lam < 0):
            raise ValueError("noisy concepts need lam >= 0")


@dataclass
class MixedResponse:
    """Distribution over one agent's actions."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < -1e-12) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be a simplex point")


@dataclass(frozen=True)
class BehaviorModel:
    key: str
    metamodel: Metamodel
    g1_response: ResponseKind | None  # None for PNE-QE
    g2_response: ResponseKind | None  # None under S1 sampling
    scheme: SamplingScheme


def _build_registry() -> dict[str, BehaviorModel]:
    reg = {}
    for meta in (Metamodel.QL0, Metamodel.QL1):
        for g1 in (ResponseKind.BR, ResponseKind.MM):
            key = f"{meta.value}:{g1.value}:{g1.value}:S1"
            reg[key] = BehaviorModel(key, meta, g1, None, SamplingScheme.S1)
            for g2, scheme in itertools.product(
                (ResponseKind.BR, ResponseKind.MM),
                (SamplingScheme.S1B, SamplingScheme.S1G),
            ):
                key = f"{meta.value}:{g1.value}:{g2.value}:{scheme.value}"
                reg[key] = BehaviorModel(key, meta, g1, g2, scheme)
    reg["PNE-QE:S1"] = BehaviorModel("PNE-QE:S1", Metamodel.PNE_QE, None, None,
                                     SamplingScheme.S1)
    for g2, scheme in itertools.product(
        (ResponseKind.BR, ResponseKind.MM),
        (SamplingScheme.S1B, SamplingScheme.S1G),
    ):
        key = f"PNE-QE:{g2.value}:{scheme.value}"
        reg[key] = BehaviorModel(key, Metamodel.PNE_QE, None, g2, scheme)
    assert len(reg) == 25
    return reg


MODEL_REGISTRY: dict[str, BehaviorModel] = _build_registry()


def _payoffs(g) -> list[np.ndarray]:
    arrs = g.payoffs if hasattr(g, "payoffs") else g
    return [np.asarray(a, dtype=float) for a in arrs]


def _other_axes(u: np.ndarray, i: int) -> tuple[int, ...]:
    return tuple(ax for ax in range(u.ndim) if ax != i)


def _logit(values: np.ndarray, lam: float) -> MixedResponse:
    v = np.asarray(values, dtype=float)
    # shift before scaling so a common offset cancels exactly
    e = np.exp(lam * (v - v.max()))
    return MixedResponse(e / e.sum())


def best_response_profile(g, i: int) -> set[tuple[int, ...]]:
    """Optimistic pure response: argmax of u_i over everyone's actions."""
    u = _payoffs(g)[i]
    best = u.max()
    return {tuple(idx) for idx in np.argwhere(u == best)}


def noisy_br(g, i: int, lam: float) -> MixedResponse:
    """Logit response over per-action optimistic utilities."""
    u = _payoffs(g)[i]
    opt = u.max(axis=_other_axes(u, i)) if u.ndim > 1 else u
    return _logit(opt, lam)


def maxmin_profile(g, i: int) -> set[tuple[int, ...]]:
    """Pure maxmin response: all worst-case maximizers with their minimizers."""
    u = _payoffs(g)[i]
    if u.ndim == 1:
        best = u.max()
        return {(int(a),) for a in np.flatnonzero(u == best)}
    worst = u.min(axis=_other_axes(u, i))
    best = worst.max()
    out = set()
    for a in np.flatnonzero(worst == best):
        slc = np.take(u, a, axis=i)
        for opp in np.argwhere(slc == worst[a]):
            idx = list(opp)
            idx.insert(i, int(a))
            out.add(tuple(int(k) for k in idx))
    return out


def noisy_mm(g, i: int, lam: float) -> MixedResponse:
    """Logit response over per-action worst-case utilities."""
    u = _payoffs(g)[i]
    worst = u.min(axis=_other_axes(u, i)) if u.ndim > 1 else u
    return _logit(worst, lam)


def _utility_vs_profile(u: np.ndarray, i: int, opp_profile: tuple[int, ...]) -> np.ndarray:
    """u_i(., fixed opponent profile) as a vector over i's actions."""
    idx = list(opp_profile)
    idx.insert(i, slice(None))
    return u[tuple(idx)]


def qbr(g, i: int, opponents_pure, lam: float) -> MixedResponse:
    """Quantal best response to fixed opponent pure profiles.

    ``opponents_pure`` is one opponent profile (actions of the other agents in
    agent order) or an iterable of profiles; utilities are averaged uniformly
    over the profile set.
    """
    u = _payoffs(g)[i]
    profiles = list(opponents_pure) if isinstance(opponents_pure, (list, set)) \
        else [opponents_pure]
    if profiles and not isinstance(profiles[0], tuple):
        profiles = [tuple(profiles)]
    vals = np.mean([_utility_vs_profile(u, i, p) for p in profiles], axis=0)
    return _logit(vals, lam)


def ql1_response(g, i: int, level0_kind: ResponseKind, alpha: float,
                 lam0: float, lam1: float) -> MixedResponse:
    """QL1 mixture: alpha * level-0 noisy response + (1-alpha) * QBR.

    The QBR component believes opponents play their own pure level-0 response
    (of ``level0_kind``); multiple opponent solutions are averaged uniformly.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    payoffs = _payoffs(g)
    n_agents = payoffs[0].ndim
    if level0_kind is ResponseKind.BR:
        pi0 = noisy_br(g, i, lam0)
        solver = best_response_profile
    elif level0_kind is ResponseKind.MM:
        pi0 = noisy_mm(g, i, lam0)
        solver = maxmin_profile
    else:
        raise ValueError("level-0 kind must be BR or MM")
    per_opp = []
    for j in range(n_agents):
        if j == i:
            continue
        per_opp.append(sorted({p[j] for p in solver(g, j)}))
    profiles = [tuple(c) for c in itertools.product(*per_opp)]
    pi1 = qbr(g, i, profiles, lam1)
    return MixedResponse(alpha * pi0.probs + (1.0 - alpha) * pi1.probs)


def enumerate_pne(g) -> set[tuple[int, ...]]:
    """All pure-strategy Nash equilibria (weak deviations; ties admitted)."""
    payoffs = _payoffs(g)
    mask = np.ones(payoffs[0].shape, dtype=bool)
    for i, u in enumerate(payoffs):
        mask &= u == u.max(axis=i, keepdims=True)
    return {tuple(int(k) for k in idx) for idx in np.argwhere(mask)}


def pne_qe_response(g, i: int, pne_set, lam: float) -> MixedResponse:
    """Logit response over regrets against the nearest pure equilibrium."""
    pne = list(pne_set)
    if not pne:
        raise EmptyEquilibriumSet("no pure equilibria supplied")
    u = _payoffs(g)[i]
    n_own = u.shape[i]
    regret = np.full(n_own, np.inf)
    for prof in pne:
        u_star = u[tuple(prof)]
        opp = tuple(a for j, a in enumerate(prof) if j != i)
        vals = _utility_vs_profile(u, i, opp)
        regret = np.minimum(regret, u_star - vals)
    return _logit(-regret, lam)
