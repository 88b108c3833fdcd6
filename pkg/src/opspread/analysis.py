"""Weight-resolved diagnostics of the evolved operator.

Densities and direct contributions are evaluated with a fused "ladder"
transfer contraction: the bidiagonal counting MPO shares its transfer tensor
across all weights, so a single sandwich sweep returns <bra| P_w |ket> for
every w at once. This is algebraically identical to applying the projector
MPOs one by one and an order of magnitude cheaper.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import pauli
from .errors import InvalidInputError, ProtocolIncompleteError
from .evolution import build_trotter_layer, step
from .mpo import apply_mpo
from .mps import (
    OperatorMPS,
    expectation,
    inner,
    local_operator_mps,
    osee,
    product_state_mps,
)
from .projectors import (
    DIAG_CONTRIBUTING,
    DIAG_IDENTITY,
    DIAG_NONIDENTITY,
    DIAG_PARALLEL,
    backflow_projector,
)

PEAK_FLOOR = 1e-12
_NEGATIVE_CLAMP = -1e-10

# below this (relative to the expectation scale) the deviation sum N is float
# noise from a fully converged accumulated sum; the distribution is undefined
DEGENERATE_DEVIATION_FLOOR = 1e-13


@dataclass
class WeightSeries:
    """Per-weight scalar channels on a shared time grid."""

    times: np.ndarray
    channels: dict
    kind: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.channels = {w: np.asarray(v, dtype=float) for w, v in self.channels.items()}
        for w, v in self.channels.items():
            if v.shape != self.times.shape:
                raise InvalidInputError(f"channel {w} off the shared time grid")
            if self.kind.startswith("density") and np.any(v < 0.0):
                raise InvalidInputError(f"negative density in channel {w}")


@dataclass
class OweSeries:
    times: np.ndarray
    owe: np.ndarray
    omega_star: int
    probabilities: np.ndarray  # shape (T, omega_star), bins omega = 1..omega_star
    degenerate: np.ndarray = field(default=None)  # True where N_{omega*} = 0


@dataclass
class BackflowRecord:
    omega_perp: int
    t0: float
    peak_density: float
    times: np.ndarray
    overlaps: np.ndarray
    osee_trace: np.ndarray
    monitor_times: np.ndarray
    monitor_trace: np.ndarray


def to_parallel_frame(state, basis):
    """Rotate a state into the parallel frame (no-op when already there)."""
    if state.frame == pauli.FRAME_PARALLEL:
        return state
    return state.rotated(pauli.frame_rotation(basis), pauli.FRAME_PARALLEL)


def ladder_overlaps(bra, ket, stay, advance, num_levels):
    """<bra| Ladder_k |ket> for k = 0..num_levels-1 in one sweep.

    Ladder_k projects onto strings with exactly k sites in the ``advance``
    label class and every other site in the ``stay`` class (diagonal 0/1
    masks over the 4 physical labels).
    """
    if bra.L != ket.L:
        raise InvalidInputError("length mismatch")
    if bra.frame != ket.frame:
        raise InvalidInputError("frame mismatch")
    m = num_levels
    env = np.zeros((m, 1, 1))
    env[0, 0, 0] = 1.0
    for a, b in zip(bra.tensors, ket.tensors):
        chi_ra, chi_rb = a.shape[2], b.shape[2]
        new = np.zeros((m, chi_ra, chi_rb))
        for p in range(4):
            sp, ap = stay[p], advance[p]
            if sp == 0.0 and ap == 0.0:
                continue
            # (m, la, lb) x (la, ra) -> (m, lb, ra) -> x (lb, rb) -> (m, ra, rb)
            tmp = np.tensordot(env, a[:, p, :], axes=([1], [0]))
            mp = np.tensordot(tmp, b[:, p, :], axes=([1], [0]))
            if sp != 0.0:
                new += sp * mp
            if ap != 0.0:
                new[1:] += ap * mp[:-1]
        env = new
    return env[:, 0, 0].copy()


def densities(state, basis, omega_max):
    """Weight-resolved contributing / non-contributing norm densities.

    rho_c[w] = <O| P^c P_w |O>, rho_nc[w] = <O| P^nc P_w |O>; the latter is
    obtained through complementarity (exact for these commuting projectors).
    """
    if omega_max > state.L:
        raise InvalidInputError("omega_max exceeds chain length")
    sp = to_parallel_frame(state, basis)
    total = ladder_overlaps(sp, sp, DIAG_IDENTITY, DIAG_NONIDENTITY, omega_max + 1)
    contrib = ladder_overlaps(sp, sp, DIAG_IDENTITY, DIAG_PARALLEL, omega_max + 1)
    rho_c, rho_nc = {}, {}
    for w in range(omega_max + 1):
        c = contrib[w]
        nc = total[w] - c
        if _NEGATIVE_CLAMP < c < 0.0:
            c = 0.0
        if _NEGATIVE_CLAMP < nc < 0.0:
            nc = 0.0
        rho_c[w], rho_nc[w] = float(c), float(nc)
    return rho_c, rho_nc


def direct_contributions(state, rho_mps, omega_max):
    """O_w = Tr(rho P_w O^c): weight-resolved contributions, signs kept.

    Reported on the physical expectation scale (2^L times the raw MPS
    overlap), so the full sum recovers Tr(rho O(t)).
    """
    if omega_max > state.L:
        raise InvalidInputError("omega_max exceeds chain length")
    if rho_mps.frame != state.frame:
        raise InvalidInputError("rho and state must share a frame")
    vals = ladder_overlaps(rho_mps, state, DIAG_IDENTITY, DIAG_PARALLEL, omega_max + 1)
    scale = float(2.0**state.L)
    return {w: scale * float(vals[w]) for w in range(omega_max + 1)}


def total_density(state, basis):
    """<O| P^c |O> and <O| P^nc |O> without the weight resolution."""
    sp = to_parallel_frame(state, basis)
    full = inner(sp, sp)
    contrib = float(
        ladder_overlaps(sp, sp, DIAG_CONTRIBUTING, np.zeros(4), 1)[0]
    )
    return contrib, full - contrib


def owe(times, contributions, exact_values, omega_star):
    """Operator Weight Entropy series from weight-resolved contributions.

    d_w(t) = |O(t) - sum_{n<=w} O_n(t)|; probabilities normalize d over bins
    w = 1..omega_star; OWE = -sum p log2 p. Times where the deviation sum is
    zero to float noise (fully converged accumulated sum) are flagged and
    assigned OWE = 0 rather than normalizing roundoff residue.
    """
    times = np.asarray(times, dtype=float)
    exact_values = np.asarray(exact_values, dtype=float)
    nt = len(times)
    acc = np.zeros(nt)
    d = np.zeros((nt, omega_star + 1))
    for w in range(omega_star + 1):
        contrib_w = contributions.get(w)
        if contrib_w is not None:
            acc = acc + np.asarray(contrib_w, dtype=float)
        d[:, w] = np.abs(exact_values - acc)
    dsum = d[:, 1:].sum(axis=1)
    degenerate = dsum <= DEGENERATE_DEVIATION_FLOOR * np.maximum(1.0, np.abs(exact_values))
    probs = np.zeros((nt, omega_star))
    np.divide(d[:, 1:], dsum[:, None], out=probs, where=~degenerate[:, None])
    owe_vals = np.zeros(nt)
    pos = probs > 0.0
    plog = np.zeros_like(probs)
    plog[pos] = probs[pos] * np.log2(probs[pos])
    owe_vals = -plog.sum(axis=1)
    owe_vals[degenerate] = 0.0
    return OweSeries(times, owe_vals, omega_star, probs, degenerate)


def max_owe(series, window=None):
    """Maximum OWE inside the window and the time where it occurs."""
    t = series.times
    mask = np.ones(len(t), dtype=bool)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
    if not mask.any():
        raise InvalidInputError("empty window")
    idx = np.flatnonzero(mask)
    best = idx[int(np.argmax(series.owe[idx]))]
    return float(series.owe[best]), float(t[best])


def find_first_peak(times, trace, floor=PEAK_FLOOR):
    """First interior maximum with 3-point parabolic refinement.

    Returns (t0_refined, index) or None when the trace never turns over above
    the noise floor.
    """
    times = np.asarray(times, dtype=float)
    trace = np.asarray(trace, dtype=float)
    for k in range(1, len(trace) - 1):
        if trace[k] < floor:
            continue
        if trace[k] >= trace[k - 1] and trace[k + 1] < trace[k]:
            denom = trace[k - 1] - 2.0 * trace[k] + trace[k + 1]
            if denom >= 0.0:
                return float(times[k]), k
            shift = 0.5 * (trace[k - 1] - trace[k + 1]) / denom
            dt = times[k + 1] - times[k]
            t0 = float(times[k] + shift * dt)
            return t0, k
    return None


def nc_weight_density(state, basis, omega_perp):
    """<O| P^nc P_{w=omega_perp} |O>: the monitored backflow density."""
    sp = to_parallel_frame(state, basis)
    total = ladder_overlaps(sp, sp, DIAG_IDENTITY, DIAG_NONIDENTITY, omega_perp + 1)
    contrib = ladder_overlaps(sp, sp, DIAG_IDENTITY, DIAG_PARALLEL, omega_perp + 1)
    val = float(total[omega_perp] - contrib[omega_perp])
    return max(val, 0.0)


def backflow(op_label, site, angles, params, config, omega_perp,
             monitor_stride=1, record_stride=1, t0_override=None):
    """Backflow protocol: monitor the fixed-orthogonal-weight density, project
    at its first peak, keep evolving and record the contributing overlap.

    Evolution runs directly in the parallel frame. All recorded overlaps use
    the unnormalized projected vector's convention; internally the vector is
    normalized so OSEE bookkeeping stays standard.
    """
    if omega_perp < 1:
        raise InvalidInputError("omega_perp must be >= 1")
    basis = pauli.parallel_basis(angles)
    rot = pauli.frame_rotation(basis)
    layer = build_trotter_layer(params, config.dt, rotation=rot)
    comps = rot @ np.eye(4)[pauli.XYZ_LABELS.index(op_label)]
    state = local_operator_mps(None, site, params.L, frame=pauli.FRAME_PARALLEL,
                               components=comps)
    rho = product_state_mps(angles, params.L, frame=pauli.FRAME_PARALLEL)

    n_steps = int(round(config.t_max / config.dt))
    monitor_times = [0.0]
    monitor_trace = [nc_weight_density(state, basis, omega_perp)]
    buffer = [(0, state.copy())]
    peak = None

    if t0_override is None:
        for n in range(1, n_steps + 1):
            t = n * config.dt
            step(state, layer, config.chi_max, config.lambda2_cutoff, time=t)
            if n % monitor_stride == 0:
                monitor_times.append(t)
                monitor_trace.append(nc_weight_density(state, basis, omega_perp))
                buffer.append((n, state.copy()))
                if len(buffer) > 3:
                    buffer.pop(0)
                peak = find_first_peak(monitor_times, monitor_trace)
                if peak is not None:
                    break
        if peak is None:
            raise ProtocolIncompleteError(
                f"no density peak for omega_perp={omega_perp} within t_max",
                times=np.array(monitor_times), trace=np.array(monitor_trace),
            )
        t0 = peak[0]
    else:
        t0 = float(t0_override)
        last = 0
        for n in range(1, n_steps + 1):
            t = n * config.dt
            if t > t0 + 1e-12:
                break
            step(state, layer, config.chi_max, config.lambda2_cutoff, time=t)
            last = n
            if n % monitor_stride == 0:
                monitor_times.append(t)
                monitor_trace.append(nc_weight_density(state, basis, omega_perp))
        buffer = [(last, state)]

    # restart from the last stored grid state at or before t0
    base_step, base_state = None, None
    for n, snap in reversed(buffer):
        if n * config.dt <= t0 + 1e-12:
            base_step, base_state = n, snap
            break
    if base_state is None:
        base_step, base_state = buffer[0]
    state = base_state
    partial = t0 - base_step * config.dt
    if partial > 1e-12:
        partial_layer = build_trotter_layer(params, partial, rotation=rot)
        step(state, partial_layer, config.chi_max, config.lambda2_cutoff, time=t0)

    proj = backflow_projector(omega_perp, basis, params.L)
    projected = apply_mpo(proj.mpo, state, chi_max=None, lambda2_cutoff=0.0, time=t0)
    peak_density = inner(projected, projected)
    scale = math.sqrt(peak_density) if peak_density > 0 else 1.0
    if peak_density > 0:
        projected.tensors[projected.center] = projected.tensors[projected.center] / scale
    projected.ledger = type(projected.ledger)()

    cut = (params.L - 1) // 2
    times = [t0]
    overlaps = [scale * abs(expectation(rho, projected))]
    osee_trace = [osee(projected, cut)]
    remaining = int(round((config.t_max - t0) / config.dt))
    for nrec in range(1, remaining + 1):
        t = t0 + nrec * config.dt
        step(projected, layer, config.chi_max, config.lambda2_cutoff, time=t)
        if nrec % record_stride == 0:
            times.append(t)
            overlaps.append(scale * abs(expectation(rho, projected)))
            osee_trace.append(osee(projected, cut))
    return BackflowRecord(
        omega_perp, t0, float(peak_density),
        np.array(times), np.array(overlaps), np.array(osee_trace),
        np.array(monitor_times), np.array(monitor_trace),
    )
