"""Gaussian-mixture belief propagation for Latin-square LDLC.

Check nodes convolve the incoming messages on all other edges and periodize
the result over the integer shift set; variable nodes multiply the incoming
messages with the channel evidence.  Both run forward-backward recursions
with greedy mixture reduction applied after every step, so message sizes
stay bounded while everything else is exact mixture algebra.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels as _k
from .gmix import GaussianMixture, ReductionParams
from .lattice import LdlcCode, integer_estimate

_IDENTITY = None  # symbolic unit element of the scaled convolution


@dataclass(frozen=True)
class DecoderParams:
    """Decoder configuration.

    reduction: greedy-reduction knobs applied after every recursion step.
    gamma: minimum variance of any stored message component (clamp).
    b_set: ordered symmetric integer shift set for check-node periodization.
    max_iters: iteration cap.
    stability_window: stop once the integer estimate is unchanged for this
        many consecutive iterations.
    """

    reduction: ReductionParams = field(default_factory=lambda: ReductionParams(theta=0.01, m_max=1000))
    gamma: float = 1e-4
    b_set: tuple[int, ...] = (-1, 0, 1)
    max_iters: int = 200
    stability_window: int = 5

    def __post_init__(self):
        if not isinstance(self.reduction, ReductionParams):
            raise ValueError("reduction must be ReductionParams")
        if not (isinstance(self.gamma, (int, float)) and 0 < self.gamma < math.inf):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma!r}")
        bs = tuple(int(b) for b in self.b_set)
        if not bs:
            raise ValueError("b_set must be non-empty")
        if sorted(bs) != sorted(-b for b in bs):
            raise ValueError(f"b_set must be symmetric around 0, got {bs}")
        object.__setattr__(self, "b_set", bs)
        if not (isinstance(self.max_iters, (int, np.integer)) and self.max_iters >= 1):
            raise ValueError("max_iters must be a positive integer")
        if not (isinstance(self.stability_window, (int, np.integer)) and self.stability_window >= 1):
            raise ValueError("stability_window must be a positive integer")

    def b_array(self) -> np.ndarray:
        return np.asarray(self.b_set, dtype=np.float64)


@dataclass(frozen=True)
class EdgeMessage:
    """A message living on one factor-graph edge."""

    mixture: GaussianMixture
    variable_index: int
    check_index: int
    coeff_label: int
    coeff_value: float

    def __post_init__(self):
        if self.coeff_value == 0:
            raise ValueError("coeff_value must be nonzero")
        if self.coeff_label < 1:
            raise ValueError("coeff_label must be >= 1")


@dataclass
class DecodeResult:
    """Outcome of decode(); iterates as (b_hat, iterations, converged)."""

    b_hat: np.ndarray
    iterations: int
    converged: bool
    x_tilde: np.ndarray
    beliefs: list | None = None

    def __iter__(self):
        return iter((self.b_hat, self.iterations, self.converged))


# ---------------------------------------------------------------------------
# Pairwise operations (public wrappers around the array kernels)
# ---------------------------------------------------------------------------

def convolve_pair(a: GaussianMixture, u: GaussianMixture, h: float) -> GaussianMixture:
    """Convolution of a(z) with the h-scaled message u(z/h).

    Components combine all-pairs: mean m_i + h*m_j, variance v_i + h^2*v_j,
    weight c_i*c_j; the result is normalized.
    """
    if h == 0:
        raise ValueError("h must be nonzero")
    m, v, c = _k._convolve_raw(a.means, a.variances, a.weights,
                               u.means, u.variances, u.weights, float(h))
    return GaussianMixture(m, v, c)


def product_pair(a: GaussianMixture, r: GaussianMixture) -> GaussianMixture:
    """Pointwise product of two mixtures, normalized.

    Pair (i, j) has precision 1/v_i + 1/v_j, precision-weighted mean, and
    weight c_i*c_j*(2*pi*(v_i+v_j))^(-1/2)*exp(-(m_i-m_j)^2/(2*(v_i+v_j))).
    Weights accumulate in log domain; if all underflow, the single pair with
    the largest log-weight survives with weight 1 (numerically disjoint
    supports).
    """
    m, v, c = _k._product_norm(a.means, a.variances, a.weights,
                               r.means, r.variances, r.weights)
    return GaussianMixture(m, v, c)


def shift_repeat(rho_tilde: GaussianMixture, h: float, b_set: Sequence[int]) -> GaussianMixture:
    """Periodization sum_b rho_tilde(b - h*z) as a mixture in z.

    Each component (m, v, c) contributes ((b - m)/h, v/h^2, c/|h|) for every
    b; the output (period 1/|h| for a full integer set) is normalized.
    """
    if h == 0:
        raise ValueError("h must be nonzero")
    bs = np.asarray(list(b_set), dtype=np.float64)
    if bs.size == 0:
        raise ValueError("b_set must be non-empty")
    m, v, c = _k._shift_repeat_norm(rho_tilde.means, rho_tilde.variances,
                                    rho_tilde.weights, float(h), bs)
    return GaussianMixture(m, v, c)


def hard_decision(belief: GaussianMixture) -> float:
    """Mode surrogate: the component mean with the highest belief density."""
    return float(_k._argmax_mode_mean(belief.means, belief.variances, belief.weights))


# ---------------------------------------------------------------------------
# Array-level node cores (hot path; also used by density evolution)
# ---------------------------------------------------------------------------

def _scale(msg, h):
    """Message u(z/h) as a mixture in z: means h*m, variances h^2*v."""
    m, v, c = msg
    return h * m, (h * h) * v, c


def _conv_step(acc, msg, h, theta, m_max):
    """One forward/backward check step: GMR(C(acc, msg(z/h))).

    acc is None for the symbolic unit (convolution identity), in which case
    the step is the scaled message, reduced.
    """
    if acc is _IDENTITY:
        m, v, c = _scale(msg, h)
        m, v, c = _k._floor_normalize(m, v, c.copy())
        return _k._reduce(m, v, c, theta, m_max)
    return _k._conv_reduce(acc[0], acc[1], acc[2], msg[0], msg[1], msg[2],
                           h, theta, m_max)


def _check_node_arrays(mus, hs, theta, m_max, gamma, b_arr, stats=None, labels=None):
    """Full check node: d periodized outputs from d inputs.

    mus: list of d array triples in coefficient-label order; hs: the signed
    edge coefficients in the same order.  Returns the d outputs in that
    order, variance-clamped.
    """
    d = len(mus)
    # alpha[k], k=0..d-1 (alpha[0] is the identity); beta[k], k=1..d.
    alpha = [_IDENTITY] * d
    for k in range(1, d):
        alpha[k] = _conv_step(alpha[k - 1], mus[k - 1], hs[k - 1], theta, m_max)
    beta = [_IDENTITY] * (d + 1)
    for k in range(d - 1, 0, -1):
        beta[k] = _conv_step(beta[k + 1], mus[k], hs[k], theta, m_max)
    outs = []
    for k in range(1, d + 1):
        a = alpha[k - 1]
        b = beta[k] if k < d else _IDENTITY
        if a is _IDENTITY and b is _IDENTITY:
            # d = 1: empty convolution, a unit spike at 0 (periodization will
            # spread it; the variance clamp restores admissibility).
            rt = (np.zeros(1), np.zeros(1), np.ones(1))
        elif a is _IDENTITY:
            rt = b  # already reduced; reducing again is a no-op
        elif b is _IDENTITY:
            rt = a
        else:
            rt = _k._conv_reduce(a[0], a[1], a[2], b[0], b[1], b[2],
                                 1.0, theta, m_max)
        if stats is not None:
            stats.rho_tilde(labels[k - 1] if labels is not None else k, rt[0].shape[0])
        m, v, c = _k._shift_repeat_norm(rt[0], rt[1], rt[2], hs[k - 1], b_arr)
        outs.append((m, _k._clamp_variances(v, gamma), c))
    return outs


def _check_node_single(mus_other, hs_other, h_out, theta, m_max, gamma, b_arr,
                       stats=None, label_out=None):
    """Single check output: fold the other edges' messages, then periodize."""
    acc = _IDENTITY
    for msg, h in zip(mus_other, hs_other):
        acc = _conv_step(acc, msg, h, theta, m_max)
    if acc is _IDENTITY:
        acc = (np.zeros(1), np.zeros(1), np.ones(1))
    if stats is not None:
        stats.rho_tilde(label_out, acc[0].shape[0])
    m, v, c = _k._shift_repeat_norm(acc[0], acc[1], acc[2], h_out, b_arr)
    return m, _k._clamp_variances(v, gamma), c


def _prod_step(acc, msg, theta, m_max, stats=None, label=None):
    """One variable-node product step: GMR(V(acc, msg))."""
    if stats is not None:
        stats.combine(label, acc[0].shape[0])
        stats.combine(label, msg[0].shape[0])
    return _k._prod_reduce(acc[0], acc[1], acc[2], msg[0], msg[1], msg[2],
                           theta, m_max)


def _variable_node_arrays(rhos, y, sigma2, theta, m_max, gamma,
                          stats=None, labels=None):
    """Full variable node: d outgoing messages plus the belief.

    rhos: d array triples in label order.  The recursion seeds with the
    half-evidence (y, 2*sigma^2) at both ends so an outgoing message carries
    the full channel evidence once, and the belief (which multiplies the two
    seeds) carries it once as well.
    """
    d = len(rhos)
    sq = (np.array([y]), np.array([2.0 * sigma2]), np.array([1.0]))
    lab = labels if labels is not None else list(range(1, d + 1))
    alpha = [sq] * (d + 1)
    for k in range(1, d + 1):
        alpha[k] = _prod_step(alpha[k - 1], rhos[k - 1], theta, m_max, stats, lab[k - 1])
    beta = [sq] * (d + 1)
    for k in range(d - 1, 0, -1):
        beta[k] = _prod_step(beta[k + 1], rhos[k], theta, m_max, stats, lab[k])
    outs = []
    for k in range(1, d + 1):
        m, v, c = _prod_step(alpha[k - 1], beta[k], theta, m_max, stats, lab[k - 1])
        outs.append((m, _k._clamp_variances(v, gamma), c))
    m, v, c = _prod_step(alpha[d], sq, theta, m_max, stats, lab[d - 1] if d else 1)
    belief = (m, _k._clamp_variances(v, gamma), c)
    return outs, belief


def _variable_node_single(rhos_other, y, sigma2, theta, m_max, gamma,
                          stats=None, label_out=None):
    """Single outgoing variable message: y(z) times the other edges' inputs,
    computed as a sqrt-evidence-seeded fold."""
    sq = (np.array([y]), np.array([2.0 * sigma2]), np.array([1.0]))
    acc = sq
    for msg in rhos_other:
        acc = _prod_step(acc, msg, theta, m_max, stats, label_out)
    m, v, c = _prod_step(acc, sq, theta, m_max, stats, label_out)
    return m, _k._clamp_variances(v, gamma), c


# ---------------------------------------------------------------------------
# Public node functions
# ---------------------------------------------------------------------------

def _sorted_edges(inputs: Sequence[EdgeMessage]) -> list[EdgeMessage]:
    return sorted(inputs, key=lambda e: (e.coeff_label, e.variable_index, e.check_index))


def check_node(inputs: Sequence[EdgeMessage], params: DecoderParams) -> list[EdgeMessage]:
    """Check-node update: output on each edge is the convolution of the other
    edges' messages (each pre-scaled by its coefficient), periodized over
    b_set with that edge's coefficient, variances clamped to gamma.

    Inputs are processed in coefficient-label order regardless of list order.
    """
    edges = _sorted_edges(inputs)
    d = len(edges)
    if d == 0:
        raise ValueError("check_node needs at least one input")
    if len({e.coeff_label for e in edges}) != d:
        raise ValueError("coeff_labels must be distinct within a check node")
    mus = [(e.mixture.means, e.mixture.variances, e.mixture.weights) for e in edges]
    hs = [e.coeff_value for e in edges]
    red = params.reduction
    outs = _check_node_arrays(mus, hs, red.theta, red.m_max, params.gamma,
                              params.b_array())
    return [EdgeMessage(mixture=GaussianMixture(*o),
                        variable_index=e.variable_index,
                        check_index=e.check_index,
                        coeff_label=e.coeff_label,
                        coeff_value=e.coeff_value)
            for e, o in zip(edges, outs)]


def variable_node(inputs: Sequence[EdgeMessage], y: float, sigma2: float,
                  params: DecoderParams) -> tuple[list[EdgeMessage], GaussianMixture]:
    """Variable-node update: each outgoing message is the product of the
    channel evidence y(z) = N(z; y, sigma2) with the other edges' inputs; the
    belief additionally includes this edge's input.  Returns (messages,
    belief), all variance-clamped and normalized."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    edges = _sorted_edges(inputs)
    if not edges:
        raise ValueError("variable_node needs at least one input")
    rhos = [(e.mixture.means, e.mixture.variances, e.mixture.weights) for e in edges]
    red = params.reduction
    outs, belief = _variable_node_arrays(rhos, float(y), float(sigma2),
                                         red.theta, red.m_max, params.gamma)
    out_edges = [EdgeMessage(mixture=GaussianMixture(*o),
                             variable_index=e.variable_index,
                             check_index=e.check_index,
                             coeff_label=e.coeff_label,
                             coeff_value=e.coeff_value)
                 for e, o in zip(edges, outs)]
    return out_edges, GaussianMixture(*belief)


# ---------------------------------------------------------------------------
# Decoder
# ---------------------------------------------------------------------------

def _graph(code: LdlcCode):
    """Edge bookkeeping for the flooding schedule, cached on the code.

    Edges are CSR positions of the parity matrix.  check_edges[i] lists row
    i's positions in coefficient-label order; var_edges[j] lists column j's
    positions ordered by (label, row).
    """
    g = getattr(code, "_bp_graph", None)
    if g is not None:
        return g
    H = code.parity
    n, d = code.n, code.d
    rows = np.repeat(np.arange(n), np.diff(H.indptr))
    cols = H.indices
    labels = code.labels
    check_edges = np.lexsort((labels, rows)).reshape(n, d)
    var_edges = np.lexsort((rows, labels, cols)).reshape(n, d)
    g = (rows, cols, H.data.copy(), labels, check_edges, var_edges)
    object.__setattr__(code, "_bp_graph", g)
    return g


def decode(code: LdlcCode, y, sigma2: float, params: DecoderParams | None = None,
           *, stats=None, trace=None, keep_beliefs: bool = False) -> DecodeResult:
    """Iterative decoding of the noisy observation y.

    Flooding schedule: every check node fires, then every variable node;
    after each iteration the belief modes give x~ and b_hat = round(H x~).
    Stops at max_iters or once b_hat is unchanged for stability_window
    consecutive iterations (converged=True in that case).

    stats: optional MessageStats collecting mixture-size observations.
    trace: optional writable text stream; one JSONL record per (iteration,
        edge, message kind) — large, for debugging only.
    keep_beliefs: keep each iteration's belief mixtures on the result.
    """
    if params is None:
        params = DecoderParams()
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (code.n,):
        raise ValueError(f"y must have shape ({code.n},), got {y.shape}")
    if not (sigma2 > 0 and math.isfinite(sigma2)):
        raise ValueError("sigma2 must be positive and finite")
    n, d = code.n, code.d
    rows, cols, hvals, labels, check_edges, var_edges = _graph(code)
    theta, m_max = params.reduction.theta, params.reduction.m_max
    gamma = params.gamma
    b_arr = params.b_array()

    one = np.ones(1)
    mu = [None] * (n * d)
    for e in range(n * d):
        mu[e] = (np.array([y[cols[e]]]), np.array([sigma2]), one)
    rho = [None] * (n * d)

    x_tilde = np.empty(n)
    prev_b = None
    streak = 0
    iterations = 0
    converged = False
    beliefs_log = [] if keep_beliefs else None

    for it in range(1, params.max_iters + 1):
        iterations = it
        if stats is not None:
            stats.iteration = it
        for i in range(n):
            edges = check_edges[i]
            outs = _check_node_arrays([mu[e] for e in edges],
                                      [hvals[e] for e in edges],
                                      theta, m_max, gamma, b_arr,
                                      stats, labels[edges] if stats is not None else None)
            for e, o in zip(edges, outs):
                rho[e] = o
        belief_row = [] if keep_beliefs else None
        for j in range(n):
            edges = var_edges[j]
            outs, belief = _variable_node_arrays(
                [rho[e] for e in edges], y[j], sigma2, theta, m_max, gamma,
                stats, labels[edges] if stats is not None else None)
            for e, o in zip(edges, outs):
                mu[e] = o
            x_tilde[j] = _k._argmax_mode_mean(*belief)
            if keep_beliefs:
                belief_row.append(GaussianMixture(*belief))
        if keep_beliefs:
            beliefs_log.append(belief_row)
        if trace is not None:
            _write_trace(trace, it, rows, cols, labels, rho, mu)
        b_hat = integer_estimate(code, x_tilde)
        if prev_b is not None and np.array_equal(b_hat, prev_b):
            streak += 1
        else:
            streak = 0
        prev_b = b_hat
        if streak >= params.stability_window:
            converged = True
            break

    return DecodeResult(b_hat=prev_b, iterations=iterations, converged=converged,
                        x_tilde=x_tilde.copy(), beliefs=beliefs_log)


def _write_trace(fh, iteration, rows, cols, labels, rho, mu):
    for e in range(len(rho)):
        for kind, msg in (("rho", rho[e]), ("mu", mu[e])):
            rec = {"iteration": iteration, "check": int(rows[e]),
                   "variable": int(cols[e]), "label": int(labels[e]),
                   "kind": kind,
                   "components": [[float(a), float(b), float(c)]
                                  for a, b, c in zip(*msg)]}
            fh.write(json.dumps(rec) + "\n")
