"""Precision-parameter estimation from observed play.

Observed actions are scored against each behavior model's pure-strategy
solutions, producing per-agent regrets. Regrets are modeled as exponential
with rate lambda = beta . X via a Gamma(k=1) GLM with inverse link, fit by
iteratively reweighted least squares. The level-1 proportion alpha of the QL1
mixture is fit by one-dimensional concave likelihood maximization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import concepts as C
from .concepts import BehaviorModel, Metamodel, ResponseKind
from .errors import (InvalidSplit, NonPositiveEta, ObservedActionMissing,
                     SingularDesign)
from .lattice import SamplingScheme

__all__ = [
    "FEATURE_NAMES",
    "DEFAULT_FIT_COLUMNS",
    "G1Decision",
    "RegretRecord",
    "GlmFit",
    "ModelReport",
    "compute_regrets",
    "fit_gamma_glm",
    "predict_lambda",
    "estimate_alpha",
    "model_aic",
    "evaluate_predictive",
    "response_probabilities",
]

# Fixed feature ordering of RegretRecord.features.
FEATURE_NAMES = (
    "intercept", "speed", "dist_conflict",
    "seg_APPROACH", "seg_TURN_EXEC", "seg_EXIT",
    "light_GREEN", "light_AMBER", "light_RED",
)

# Default design for fitting: one level of each one-hot block is dropped so
# the design stays full rank next to the intercept.
DEFAULT_FIT_COLUMNS = (
    "intercept", "speed", "dist_conflict",
    "seg_TURN_EXEC", "seg_EXIT", "light_AMBER", "light_RED",
)

EPS_MIN = 1e-6    # regret floor before GLM fitting
ETA_MIN = 1e-4    # inverse-link positivity floor
NEG_REGRET_TOL = -1e-9


@dataclass
class G1Decision:
    """One agent's level-1 decision within one game, under one model's
    propagated level-1 payoffs."""

    game_id: int
    ego: int                       # agent index within the payoff tensors
    payoffs: list[np.ndarray]      # per-agent level-1 payoff tensors
    observed: tuple[int, ...]      # joint observed maneuver indices
    features: np.ndarray           # full FEATURE_NAMES vector for the ego
    g2_block: np.ndarray | None = None       # ego x opponent trajectory utilities
    g2_block_scheme: SamplingScheme | None = None
    observed_traj: int | None = None


@dataclass
class RegretRecord:
    game_id: int
    agent_id: int
    level: int
    model_key: str
    epsilon: float
    features: np.ndarray
    observed_action: int
    solution_actions: tuple


@dataclass
class GlmFit:
    beta: np.ndarray
    cov: np.ndarray
    loglik: float
    n_obs: int
    converged: bool
    feature_columns: tuple[str, ...]
    deviance: float = float("nan")


@dataclass
class ModelReport:
    model_key: str
    lambda_mean: float = float("nan")
    lambda_se: float = float("nan")
    aic: float = float("nan")
    test_loglik_mean: float = float("nan")
    test_loglik_std: float = float("nan")
    alpha: float | None = None
    discarded: int = 0
    status: str = "OK"
    n_records: int = 0


def _pure_regret(payoffs: list[np.ndarray], i: int, observed: tuple[int, ...],
                 kind: ResponseKind) -> tuple[float, tuple] | None:
    """Regret of the observed joint play for agent i under one evaluation rule.

    Returns (epsilon, solution own-actions) or None when the rule has no
    solution (empty PNE set).
    """
    u = payoffs[i]
    if observed[i] >= u.shape[i]:
        raise ObservedActionMissing(
            f"observed action {observed[i]} outside {u.shape[i]} actions")
    if kind is ResponseKind.MM:
        other = tuple(ax for ax in range(u.ndim) if ax != i)
        worst = u.min(axis=other) if u.ndim > 1 else u
        best = float(worst.max())
        eps = best - float(worst[observed[i]])
        sols = tuple(int(a) for a in np.flatnonzero(worst == worst.max()))
        return eps, sols
    if kind is ResponseKind.BR:
        sols = C.best_response_profile(payoffs, i)
    elif kind is ResponseKind.PNE:
        sols = C.enumerate_pne(payoffs)
        if not sols:
            return None
    else:
        raise ValueError(f"unsupported evaluation rule {kind}")
    eps = np.inf
    for prof in sols:
        u_star = float(u[tuple(prof)])
        obs_prof = list(prof)
        obs_prof[i] = observed[i]
        eps = min(eps, u_star - float(u[tuple(obs_prof)]))
    own = tuple(sorted({int(p[i]) for p in sols}))
    return float(eps), own


def _clamp_eps(eps: float) -> float:
    if eps < NEG_REGRET_TOL:
        raise AssertionError(f"negative regret {eps} indicates a solver bug")
    return max(eps, 0.0)


def _g1_rule(model: BehaviorModel) -> ResponseKind:
    return ResponseKind.PNE if model.metamodel is Metamodel.PNE_QE \
        else model.g1_response


def compute_regrets(decisions: list[G1Decision], model: BehaviorModel
                    ) -> tuple[list[RegretRecord], int]:
    """Regret records for all decisions under one behavior model.

    Games where the model's solution concept has no solution (empty pure
    equilibrium set) are discarded and counted. Level-2 records are emitted
    when a decision carries a trajectory-utility block matching the model's
    sampling scheme.
    """
    rule = _g1_rule(model)
    records: list[RegretRecord] = []
    discarded = 0
    for d in decisions:
        res = _pure_regret(d.payoffs, d.ego, d.observed, rule)
        if res is None:
            discarded += 1
            continue
        eps, sols = res
        records.append(RegretRecord(
            d.game_id, d.ego, 1, model.key, _clamp_eps(eps), d.features,
            d.observed[d.ego], sols))
        if (d.g2_block is not None and model.g2_response is not None
                and d.g2_block_scheme is model.scheme
                and d.observed_traj is not None):
            # block axes: 0 = ego trajectories, rest = opponents'; only the
            # ego component of the observed tuple is consulted under BR/MM.
            obs2 = (d.observed_traj,) + (0,) * (d.g2_block.ndim - 1)
            res2 = _pure_regret([d.g2_block], 0, obs2, model.g2_response)
            if res2 is not None:
                eps2, sols2 = res2
                records.append(RegretRecord(
                    d.game_id, d.ego, 2, model.key, _clamp_eps(eps2),
                    d.features, d.observed_traj, sols2))
    return records, discarded


def _design(records: list[RegretRecord],
            feature_columns: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
    idx = [FEATURE_NAMES.index(c) for c in feature_columns]
    X = np.array([r.features[idx] for r in records], dtype=float)
    y = np.array([max(r.epsilon, EPS_MIN) for r in records], dtype=float)
    return X, y


def fit_gamma_glm(records: list[RegretRecord],
                  feature_columns: tuple[str, ...] = DEFAULT_FIT_COLUMNS,
                  max_iter: int = 100, tol: float = 1e-8) -> GlmFit:
    """Gamma(k=1) GLM with inverse link: lambda(X) = beta . X, E[eps] = 1/lambda.

    Newton/IRLS with step halving keeping the linear predictor above ETA_MIN.
    """
    X, y = _design(records, feature_columns)
    return fit_gamma_glm_xy(X, y, feature_columns, max_iter=max_iter, tol=tol)


def fit_gamma_glm_xy(X: np.ndarray, y: np.ndarray,
                     feature_columns: tuple[str, ...] = (),
                     max_iter: int = 100, tol: float = 1e-8) -> GlmFit:
    X = np.asarray(X, dtype=float)
    y = np.maximum(np.asarray(y, dtype=float), EPS_MIN)
    n, p = X.shape
    if n < p + 5:
        raise ValueError(f"need at least {p + 5} records, got {n}")
    if np.linalg.matrix_rank(X) < p:
        raise SingularDesign("design matrix is rank deficient")

    beta = np.zeros(p)
    if np.allclose(X[:, 0], 1.0):
        beta[0] = 1.0 / y.mean()
    else:
        beta, *_ = np.linalg.lstsq(X, 1.0 / np.maximum(y, y.mean() / 10), rcond=None)
    eta = X @ beta
    if np.any(eta <= ETA_MIN):
        beta = np.zeros(p)
        beta[np.argmax(np.abs(X).mean(axis=0))] = ETA_MIN * 2
        eta = X @ beta
        if np.any(eta <= 0):
            raise NonPositiveEta("could not find a feasible starting point")

    def deviance(eta_):
        return float(2.0 * np.sum(-np.log(y * eta_) + y * eta_ - 1.0))

    dev = deviance(eta)
    converged = False
    for _ in range(max_iter):
        score = X.T @ (1.0 / eta - y)
        H = X.T @ (X / (eta * eta)[:, None])
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError as exc:
            raise SingularDesign("singular information matrix") from exc
        t = 1.0
        for _ in range(60):
            cand = beta + t * step
            eta_c = X @ cand
            if np.all(eta_c > ETA_MIN):
                dev_c = deviance(eta_c)
                if dev_c <= dev + 1e-12:
                    break
            t *= 0.5
        else:
            raise NonPositiveEta("step halving failed to keep eta positive")
        beta, eta = cand, eta_c
        rel = abs(dev - dev_c) / (abs(dev) + 1e-10)
        dev = dev_c
        if rel < tol:
            converged = True
            break

    H = X.T @ (X / (eta * eta)[:, None])
    cov = np.linalg.inv(H)
    loglik = float(np.sum(np.log(eta) - eta * y))
    return GlmFit(beta, cov, loglik, n, converged, tuple(feature_columns), dev)


def predict_lambda(fit: GlmFit, x: np.ndarray) -> tuple[float, float, bool]:
    """Predicted precision beta . x and its delta-method standard error.

    Returns (lambda, se, clamped); clamped predictions are floored at ETA_MIN
    and should be excluded from averages by the caller.
    """
    if not fit.converged:
        raise ValueError("fit did not converge")
    x = np.asarray(x, dtype=float)
    lam = float(fit.beta @ x)
    se = float(np.sqrt(x @ fit.cov @ x))
    if lam <= ETA_MIN:
        return ETA_MIN, se, True
    return lam, se, False


def estimate_alpha(p0: np.ndarray, p1: np.ndarray,
                   tol: float = 1e-10, max_iter: int = 1000
                   ) -> tuple[float, float, bool]:
    """MLE of the QL1 mixing proportion by projected gradient ascent.

    ``p0``/``p1`` are the level-0 and QBR probabilities of each observed
    action. The objective sum(log(alpha p0 + (1-alpha) p1)) is concave in
    alpha. Returns (alpha, loglik, flat_objective).
    """
    p0 = np.maximum(np.asarray(p0, dtype=float), 1e-12)
    p1 = np.maximum(np.asarray(p1, dtype=float), 1e-12)
    diff = p0 - p1
    if np.max(np.abs(diff)) < 1e-12:
        return 0.5, float(np.sum(np.log(p0))), True

    def loglik(a):
        return float(np.sum(np.log(a * p0 + (1 - a) * p1)))

    alpha = 0.5
    ll = loglik(alpha)
    step = 1.0
    for _ in range(max_iter):
        grad = float(np.sum(diff / (alpha * p0 + (1 - alpha) * p1)))
        # projected gradient with backtracking
        t = step
        moved = False
        while t > 1e-14:
            cand = min(max(alpha + t * grad / len(p0), 0.0), 1.0)
            if cand != alpha:
                ll_c = loglik(cand)
                if ll_c >= ll - 1e-15:
                    alpha, ll = cand, ll_c
                    moved = True
                    break
            t *= 0.5
        if not moved:
            break
        proj_grad = grad
        if (alpha == 0.0 and grad < 0) or (alpha == 1.0 and grad > 0):
            proj_grad = 0.0
        if abs(proj_grad) / len(p0) < tol:
            break
    return alpha, ll, False


def model_aic(fit: GlmFit, model: BehaviorModel) -> float:
    """2k - 2 lnL with k = dim(beta), plus one for QL1's alpha."""
    if not fit.converged:
        raise ValueError("fit did not converge")
    k = len(fit.beta) + (1 if model.metamodel is Metamodel.QL1 else 0)
    return 2.0 * k - 2.0 * fit.loglik


# ---------------------------------------------------------------------------
# Response probabilities and predictive evaluation
# ---------------------------------------------------------------------------

def _opponent_level0_profiles(payoffs: list[np.ndarray], ego: int,
                              kind: ResponseKind) -> list[tuple[int, ...]]:
    import itertools
    solver = C.best_response_profile if kind is ResponseKind.BR else C.maxmin_profile
    per_opp = []
    for j in range(payoffs[0].ndim):
        if j == ego:
            continue
        per_opp.append(sorted({p[j] for p in solver(payoffs, j)}))
    return [tuple(c) for c in itertools.product(*per_opp)]


def response_probabilities(d: G1Decision, model: BehaviorModel, lam: float,
                           alpha: float | None = None) -> np.ndarray | None:
    """The model's level-1 mixed response for the decision's ego agent.

    Returns None for PNE-QE when the game has no pure equilibrium.
    """
    meta = model.metamodel
    if meta is Metamodel.PNE_QE:
        pne = C.enumerate_pne(d.payoffs)
        if not pne:
            return None
        return C.pne_qe_response(d.payoffs, d.ego, pne, lam).probs
    kind = model.g1_response
    if meta is Metamodel.QL0:
        fn = C.noisy_br if kind is ResponseKind.BR else C.noisy_mm
        return fn(d.payoffs, d.ego, lam).probs
    if meta is Metamodel.QL1:
        a = 0.5 if alpha is None else alpha
        return C.ql1_response(d.payoffs, d.ego, kind, a, lam, lam).probs
    raise ValueError(f"unknown metamodel {meta}")


def ql1_component_probs(d: G1Decision, model: BehaviorModel, lam: float
                        ) -> tuple[float, float]:
    """(pi_QL0, pi_QBR) of the observed action, for alpha estimation."""
    kind = model.g1_response
    fn = C.noisy_br if kind is ResponseKind.BR else C.noisy_mm
    p0 = fn(d.payoffs, d.ego, lam).probs[d.observed[d.ego]]
    profs = _opponent_level0_profiles(d.payoffs, d.ego, kind)
    p1 = C.qbr(d.payoffs, d.ego, profs, lam).probs[d.observed[d.ego]]
    return float(p0), float(p1)


@dataclass
class ModelFit:
    """A behavior model fit on one set of decisions."""

    model: BehaviorModel
    glm: GlmFit
    alpha: float | None
    discarded: int
    records: list[RegretRecord] = field(repr=False, default_factory=list)


def fit_model(decisions: list[G1Decision], model: BehaviorModel,
              feature_columns: tuple[str, ...] = DEFAULT_FIT_COLUMNS) -> ModelFit:
    """Regret extraction + GLM fit (+ alpha for QL1) for one model."""
    records, discarded = compute_regrets(decisions, model)
    l1 = [r for r in records if r.level == 1]
    glm = fit_gamma_glm(l1, feature_columns)
    alpha = None
    if model.metamodel is Metamodel.QL1:
        by_game = {r.game_id for r in l1}
        p0s, p1s = [], []
        for d in decisions:
            if d.game_id not in by_game:
                continue
            lam, _, _ = predict_lambda(glm, d.features[
                [FEATURE_NAMES.index(c) for c in feature_columns]])
            p0, p1 = ql1_component_probs(d, model, lam)
            p0s.append(p0)
            p1s.append(p1)
        alpha, _, _ = estimate_alpha(np.array(p0s), np.array(p1s))
    return ModelFit(model, glm, alpha, discarded, records)


def evaluate_predictive(decisions: list[G1Decision], model: BehaviorModel,
                        split: float = 0.75, runs: int = 30, seed: int = 0,
                        feature_columns: tuple[str, ...] = DEFAULT_FIT_COLUMNS
                        ) -> tuple[float, float, list[dict]]:
    """Repeated random-subsampling predictive log-likelihood.

    Per run, the GLM (and alpha for QL1) is fit on a ``split`` fraction of the
    games and the summed log probability of the observed level-1 actions is
    computed on the held-out games. Splits derive deterministically from
    ``seed``. Returns (mean, std, per-run details).
    """
    if not (0.0 < split < 1.0):
        raise InvalidSplit(f"split must lie in (0, 1), got {split}")
    if runs < 1:
        raise InvalidSplit("runs must be >= 1")
    order = sorted(range(len(decisions)), key=lambda k: (decisions[k].game_id, k))
    decs = [decisions[k] for k in order]
    n = len(decs)
    n_train = int(round(split * n))
    if n_train == 0 or n_train == n:
        raise InvalidSplit("split leaves an empty train or test set")
    col_idx = [FEATURE_NAMES.index(c) for c in feature_columns]
    rng = np.random.default_rng(seed)
    run_info = []
    lls = []
    for run in range(runs):
        perm = rng.permutation(n)
        train = [decs[k] for k in perm[:n_train]]
        test = [decs[k] for k in perm[n_train:]]
        try:
            mf = fit_model(train, model, feature_columns)
        except Exception as exc:  # failed runs are reported, not dropped
            run_info.append({"run": run, "status": f"FIT_FAILED: {exc}"})
            continue
        ll = 0.0
        skipped = 0
        for d in test:
            lam, _, _ = predict_lambda(mf.glm, d.features[col_idx])
            probs = response_probabilities(d, model, lam, mf.alpha)
            if probs is None:
                skipped += 1
                continue
            ll += float(np.log(max(probs[d.observed[d.ego]], 1e-12)))
        lls.append(ll)
        run_info.append({"run": run, "status": "OK", "test_loglik": ll,
                         "skipped": skipped})
    if not lls:
        return float("nan"), float("nan"), run_info
    return float(np.mean(lls)), float(np.std(lls)), run_info
