"""
Feature and output fusion for the shared/private branches.

Every effective weight comes from a two-way (Gumbel-)softmax over a raw pair
in FusionParams. Forward passes optionally fill a FusionTrace; the backward
functions read it, return the branch gradients and accumulate psi.grad.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from src.autofuse.params import FusionMode, FusionParams
from src.nncore.softmax import sample_gumbel_pair, softmax_pair, softmax_pair_backward
from src.utils.exceptions import ProtocolError, UsageError

Pair = Tuple[float, float]
NO_NOISE: Pair = (0.0, 0.0)


@dataclass
class GumbelDraws:
    """Noise for one minibatch: one pair for the features, one for the outputs"""

    alpha: Pair = NO_NOISE
    beta: Pair = NO_NOISE

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "GumbelDraws":
        alpha = sample_gumbel_pair(rng)
        return cls(alpha, sample_gumbel_pair(rng))


NOISE_FREE = GumbelDraws()


@dataclass
class FusionTrace:
    h_s: Optional[np.ndarray] = None
    h_p: Optional[np.ndarray] = None
    alpha: Tuple[float, ...] = ()
    o_s: Optional[np.ndarray] = None
    o_p: Optional[np.ndarray] = None
    beta: Pair = (0.5, 0.5)
    draws: GumbelDraws = field(default_factory=GumbelDraws)


def _same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ProtocolError(f"{what} differ in shape: {a.shape} vs {b.shape}")


def _hs_noise(rng: Optional[np.random.Generator], noise: Optional[Pair]) -> Pair:
    if noise is not None:
        return noise
    if rng is None:
        raise UsageError("hard selection needs an rng or explicit Gumbel draws")
    return sample_gumbel_pair(rng)


def fuse_features_cs(h_s: np.ndarray, h_p: np.ndarray, psi: FusionParams,
                     trace: Optional[FusionTrace] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Cross-stitch: asymmetric 2x2 convex mixing"""
    _same_shape(h_s, h_p, "branch features")
    lam = psi.temperature
    w00, w01 = softmax_pair(psi["alpha00"], psi["alpha01"], lam)
    w10, w11 = softmax_pair(psi["alpha10"], psi["alpha11"], lam)
    if trace is not None:
        trace.h_s, trace.h_p, trace.alpha = h_s, h_p, (w00, w01, w10, w11)
    return w00 * h_s + w01 * h_p, w10 * h_s + w11 * h_p


def _mix(h_s: np.ndarray, h_p: np.ndarray, weights: Pair,
         trace: Optional[FusionTrace]) -> Tuple[np.ndarray, np.ndarray]:
    w0, w1 = weights
    if trace is not None:
        trace.h_s, trace.h_p, trace.alpha = h_s, h_p, (w0, w1)
    fused = w0 * h_s + w1 * h_p
    return fused, fused


def fuse_features_sa(h_s: np.ndarray, h_p: np.ndarray, psi: FusionParams,
                     trace: Optional[FusionTrace] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Soft attention: one weighted average fed to both classifiers"""
    _same_shape(h_s, h_p, "branch features")
    return _mix(h_s, h_p, softmax_pair(psi["alpha0"], psi["alpha1"], psi.temperature), trace)


def fuse_features_hs(h_s: np.ndarray, h_p: np.ndarray, psi: FusionParams,
                     rng: Optional[np.random.Generator] = None, trace: Optional[FusionTrace] = None,
                     noise: Optional[Pair] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Hard selection: soft Gumbel-softmax sample shared across the batch"""
    _same_shape(h_s, h_p, "branch features")
    g0, g1 = _hs_noise(rng, noise)
    weights = softmax_pair(psi["alpha0"] + g0, psi["alpha1"] + g1, psi.temperature)
    if trace is not None:
        trace.draws.alpha = (g0, g1)
    return _mix(h_s, h_p, weights, trace)


def fuse_features(h_s: np.ndarray, h_p: np.ndarray, psi: FusionParams,
                  rng: Optional[np.random.Generator] = None, trace: Optional[FusionTrace] = None,
                  noise: Optional[Pair] = None) -> Tuple[np.ndarray, np.ndarray]:
    if psi.mode is FusionMode.CS:
        return fuse_features_cs(h_s, h_p, psi, trace)
    if psi.mode is FusionMode.SA:
        return fuse_features_sa(h_s, h_p, psi, trace)
    return fuse_features_hs(h_s, h_p, psi, rng, trace, noise)


def fuse_outputs(o_s: np.ndarray, o_p: np.ndarray, psi: FusionParams,
                 rng: Optional[np.random.Generator] = None, trace: Optional[FusionTrace] = None,
                 noise: Optional[Pair] = None) -> np.ndarray:
    """Weighted sum of the two unnormalized logits"""
    _same_shape(o_s, o_p, "branch outputs")
    if psi.mode is FusionMode.HS:
        g0, g1 = _hs_noise(rng, noise)
        b0, b1 = softmax_pair(psi["beta0"] + g0, psi["beta1"] + g1, psi.temperature)
        if trace is not None:
            trace.draws.beta = (g0, g1)
    else:
        b0, b1 = softmax_pair(psi["beta0"], psi["beta1"], psi.temperature)
    if trace is not None:
        trace.o_s, trace.o_p, trace.beta = o_s, o_p, (b0, b1)
    return b0 * o_s + b1 * o_p


def _push_pair(psi: FusionParams, names: Pair, weights: Pair, grad_weights: Pair) -> None:
    ga0, ga1 = softmax_pair_backward(weights[0], weights[1], psi.temperature, grad_weights[0], grad_weights[1])
    psi.add_grad(names[0], ga0)
    psi.add_grad(names[1], ga1)


def fuse_outputs_backward(trace: FusionTrace, psi: FusionParams,
                          grad_out: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if trace.o_s is None:
        raise UsageError("fuse_outputs_backward without a recorded forward")
    b0, b1 = trace.beta
    grad_b = (float((grad_out * trace.o_s).sum()), float((grad_out * trace.o_p).sum()))
    _push_pair(psi, ("beta0", "beta1"), (b0, b1), grad_b)
    return b0 * grad_out, b1 * grad_out


def fuse_features_backward(trace: FusionTrace, psi: FusionParams, grad_hat_s: np.ndarray,
                           grad_hat_p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients w.r.t. (h_s, h_p) given gradients w.r.t. the fused pair"""
    if trace.h_s is None:
        raise UsageError("fuse_features_backward without a recorded forward")
    h_s, h_p = trace.h_s, trace.h_p
    if psi.mode is FusionMode.CS:
        w00, w01, w10, w11 = trace.alpha
        _push_pair(psi, ("alpha00", "alpha01"), (w00, w01),
                   (float((grad_hat_s * h_s).sum()), float((grad_hat_s * h_p).sum())))
        _push_pair(psi, ("alpha10", "alpha11"), (w10, w11),
                   (float((grad_hat_p * h_s).sum()), float((grad_hat_p * h_p).sum())))
        return w00 * grad_hat_s + w10 * grad_hat_p, w01 * grad_hat_s + w11 * grad_hat_p

    # SA / HS: both outputs are the same tensor
    w0, w1 = trace.alpha
    grad = grad_hat_s + grad_hat_p
    _push_pair(psi, ("alpha0", "alpha1"), (w0, w1), (float((grad * h_s).sum()), float((grad * h_p).sum())))
    return w0 * grad, w1 * grad
