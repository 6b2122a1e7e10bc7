"""Single-parameter exchange update for a doubly-intractable posterior.

The update proposes from a symmetric random walk, simulates an
auxiliary network at the proposed parameter, and accepts with the ratio
in which the intractable normalizing constants cancel. The prior enters
only through an opaque log-density callable, so the same kernel drives
both individual-level updates and the non-centered group-mean update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .graphs import Graph, NodeCovariates
from .model import ModelSpec, TermProgram, compile_program
from .sampler import SamplerConfig, run_sampler

__all__ = ["ExchangeProposal", "ExchangeResult", "exchange_update"]


@dataclass
class ExchangeProposal:
    """Symmetric multivariate normal random walk, centered at the
    current parameter passed to :meth:`sample`."""

    covariance: np.ndarray
    _chol: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        if cov.shape[0] != cov.shape[1]:
            raise NumericalError("proposal covariance must be square")
        if not np.any(cov):
            # degenerate proposal: always propose the current value
            chol = np.zeros_like(cov)
        else:
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise NumericalError("proposal covariance is not positive definite") from None
        self.covariance = cov
        self._chol = chol

    def sample(self, center: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(len(center))
        return center + self._chol @ z


@dataclass(frozen=True)
class ExchangeResult:
    theta: np.ndarray
    accepted: bool
    aux_stats: np.ndarray | None


def exchange_step(
    theta: np.ndarray,
    s_obs: np.ndarray,
    log_prior,
    proposal,
    program: TermProgram,
    init_adj: np.ndarray,
    init_stats: np.ndarray,
    n_steps: int,
    rng: np.random.Generator,
) -> ExchangeResult:
    """Core exchange move on precompiled model data.

    ``init_adj``/``init_stats`` give the auxiliary chain's start state
    (normally the observed network); both are copied, not mutated.
    """
    theta_prop = proposal.sample(theta, rng)
    lp_prop = float(log_prior(theta_prop))
    if not math.isfinite(lp_prop):
        # proposal landed in a probability-zero region
        return ExchangeResult(theta, False, None)
    lp_cur = float(log_prior(theta))

    adj = init_adj.copy()
    aux_stats = init_stats.copy()
    run_sampler(program, np.ascontiguousarray(theta_prop, dtype=np.float64),
                adj, aux_stats, n_steps, rng)

    log_ar = float((theta_prop - theta) @ (s_obs - aux_stats)) + lp_prop - lp_cur
    if log_ar >= 0.0 or rng.random() < math.exp(log_ar):
        return ExchangeResult(theta_prop, True, aux_stats)
    return ExchangeResult(theta, False, aux_stats)


def exchange_update(
    theta: np.ndarray,
    y: Graph,
    s_y: np.ndarray,
    log_prior,
    proposal,
    spec: ModelSpec,
    cov: NodeCovariates,
    sampler_config: SamplerConfig,
    rng: np.random.Generator,
) -> ExchangeResult:
    """One exchange update of ``theta`` given observed network ``y``.

    Parameters
    ----------
    theta : array
        Current parameter value.
    y : Graph
        Observed network.
    s_y : array
        Cached summary statistics of ``y`` (callers keep these around
        to avoid recounting every update).
    log_prior : callable
        Maps a parameter vector to its log prior density; may return
        -inf to auto-reject.
    proposal : object with ``sample(center, rng)``
        Symmetric proposal, e.g. :class:`ExchangeProposal`.

    Returns
    -------
    ExchangeResult
        New parameter, acceptance flag, and the auxiliary network's
        statistics (None when the prior auto-rejected).
    """
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    s_y = np.ascontiguousarray(s_y, dtype=np.float64)
    program = compile_program(spec, cov, y.n_nodes)
    if sampler_config.init == "observed":
        init_adj = y.adjacency
        init_stats = s_y
    else:
        from .model import summary_from_program
        from .sampler import _resolve_init

        init = _resolve_init(sampler_config, y.n_nodes, y)
        init_adj = init.adjacency
        init_stats = summary_from_program(init_adj, program)
    n_steps = sampler_config.burn_in + sampler_config.steps_for(y.n_nodes)
    return exchange_step(
        theta, s_y, log_prior, proposal, program, init_adj, init_stats, n_steps, rng
    )
