"""Born-rule simulation, Monte Carlo DFE and Hoeffding planning.

Randomness comes from a counter-based Philox stream keyed by
``(seed, target_id)``. Sample ``i`` always consumes counter blocks ``2i`` and
``2i + 1`` (eight uniforms): column 0 picks the outcome, the remaining
columns pick the term (and, for product decompositions, one grid point per
site). Any partition of the index range over workers therefore produces the
same samples.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_density_matrix, check_operator, check_probability, check_state

PROB_TOL = 1e-8
UNIFORMS_PER_SAMPLE = 8
CHUNK = 65536
LOG_FIELDS = ("target_id", "sample_index", "measurement_id", "outcome", "weight")


class PhysicalStateSource:
    """A simulated physical state ``rho``."""

    def __init__(self, rho, kind: str = "exact_density", metadata: dict | None = None, atol: float = 1e-10):
        self.rho = check_density_matrix(rho, atol=atol)
        self.kind = kind
        self.metadata = dict(metadata or {})

    @classmethod
    def from_pure(cls, psi, **metadata) -> "PhysicalStateSource":
        psi = check_state(psi, normalize=True)
        return cls(np.outer(psi, psi.conj()), "exact_density", metadata)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def __repr__(self):
        return f"PhysicalStateSource(kind={self.kind!r}, dim={self.dim})"


def _as_rho(source):
    return source.rho if isinstance(source, PhysicalStateSource) else np.asarray(source, dtype=complex)


def outcome_probabilities(rho, meas) -> np.ndarray:
    p = meas.probabilities(rho)
    if p.min() < -PROB_TOL:
        raise ValueError(f"negative outcome probability {p.min():.3g} for {meas.id}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise ValueError(f"outcome probabilities of {meas.id} sum to {total:.12g}")
    return p / total


def simulate_measure(source, meas, rng=None, size: int | None = None):
    """Draw outcome value(s) of ``meas`` on the source state."""
    rho = _as_rho(source)
    if rho.shape[0] != meas.dim:
        raise ValueError(f"state dimension {rho.shape[0]} != measurement dimension {meas.dim}")
    p = outcome_probabilities(rho, meas)
    rng = rng if rng is not None else np.random.default_rng()
    idx = rng.choice(p.size, size=size, p=p)
    return meas.values[idx]


# --- reproducible streams -------------------------------------------------------


class SampleStream:
    """Counter-based uniforms for one (seed, target) pair."""

    def __init__(self, seed: int, target_id: str):
        self.seed = int(seed)
        self.target_id = str(target_id)
        digest = hashlib.blake2b(f"{self.seed}:{self.target_id}".encode(), digest_size=16).digest()
        self._key = int.from_bytes(digest, "little")

    def uniforms(self, start: int, n: int) -> np.ndarray:
        bg = np.random.Philox(key=self._key)
        bg.advance(2 * int(start))
        return np.random.Generator(bg).random((int(n), UNIFORMS_PER_SAMPLE))


@dataclass
class EstimatorResult:
    mean: float
    stderr: float
    n: int
    Z: float
    hoeffding_epsilon_at_delta: float
    delta: float = 0.05
    variance: float = 0.0
    constant: float = 0.0
    sample_log: list | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("an estimate needs at least one sample")
        if self.stderr < 0:
            raise ValueError("standard error must be nonnegative")

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n, "Z": self.Z,
                "hoeffding_epsilon": self.hoeffding_epsilon_at_delta, "delta": self.delta}


def merge_moments(parts):
    """Chan's pairwise combination of ``(n, mean, M2)`` triples."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        if nb == 0:
            continue
        tot = n + nb
        d = mb - mean
        mean += d * nb / tot
        m2 += m2b + d * d * n * nb / tot
        n = tot
    return n, mean, m2


def _keys_rows(keys):
    keys = np.asarray(keys)
    if keys.ndim == 1:
        uniq, inv = np.unique(keys, return_inverse=True)
        return [int(k) for k in uniq], inv
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    return [tuple(int(v) for v in row) for row in uniq], inv.reshape(-1)


def _run_chunk(rho, decomp, stream: SampleStream, start: int, n: int, want_log: bool):
    u = stream.uniforms(start, n)
    keys = decomp.draw(u[:, 1:])
    weights = decomp.term_weights(keys)
    offsets = decomp.term_offsets(keys)
    outcomes = np.empty(n)
    uniq, inv = _keys_rows(keys)
    mids = [None] * len(uniq)
    for g, key in enumerate(uniq):
        rows = np.flatnonzero(inv == g)
        meas = decomp.measurement(key)
        cdf = np.cumsum(outcome_probabilities(rho, meas))
        j = np.minimum(np.searchsorted(cdf, u[rows, 0] * cdf[-1], side="right"), cdf.size - 1)
        outcomes[rows] = meas.values[j]
        if want_log:
            mids[g] = decomp.measurement_id(key)
    x = weights * (outcomes - offsets)
    mean = float(x.mean())
    stats = (n, mean, float(np.sum((x - mean) ** 2)))
    log = None
    if want_log:
        log = [(stream.target_id, start + i, mids[inv[i]], float(outcomes[i]), float(weights[i]))
               for i in range(n)]
    return stats, log


def dfe_estimate(source, decomp, t: int, seed: int = 0, workers: int = 1, delta: float = 0.05,
                 stream: SampleStream | None = None, log: bool = False, start: int = 0) -> EstimatorResult:
    """Monte Carlo estimate of ``<O>_rho`` from ``t`` weighted samples.

    Each worker owns a contiguous index range; partial moments are merged
    with Chan's formula, which is order independent up to rounding.
    """
    t = int(t)
    if t < 1:
        raise ValueError("sample count t must be at least 1")
    rho = _as_rho(source)
    if decomp.is_constant:
        return EstimatorResult(decomp.constant, 0.0, t, 0.0, 0.0, delta, 0.0, decomp.constant, [] if log else None)
    stream = stream or SampleStream(seed, decomp.target_id)
    bounds = list(range(start, start + t, CHUNK)) + [start + t]
    jobs = [(a, b - a) for a, b in zip(bounds[:-1], bounds[1:])]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(lambda j: _run_chunk(rho, decomp, stream, j[0], j[1], log), jobs))
    else:
        outs = [_run_chunk(rho, decomp, stream, a, n, log) for a, n in jobs]
    n, mean, m2 = merge_moments(o[0] for o in outs)
    var = m2 / (n - 1) if n > 1 else 0.0
    rows = [r for o in outs for r in o[1]] if log else None
    eps = hoeffding_epsilon(decomp.cost, n, delta)
    c = decomp.shifted_constant
    return EstimatorResult(c + mean, math.sqrt(var / n), n, decomp.cost, eps, delta, var, c, rows)


def exact_moments(source, decomp) -> tuple[float, float]:
    """Exact estimator mean (including the constant) and single-sample variance.

    Sums ``p_i w_i (lambda_j - m_i) tr(rho Lambda_j)`` over every term and
    outcome; no sampling is involved.
    """
    rho = _as_rho(source)
    if decomp.is_constant:
        return decomp.constant * float(np.trace(rho).real), 0.0
    if hasattr(decomp, "exact_moments"):
        mean, var = decomp.exact_moments(rho)
        return decomp.shifted_constant + mean, var
    first = second = 0.0
    for p, w, mid, meas in decomp.iter_terms():
        probs = meas.probabilities(rho)
        centered = meas.values - mid
        first += p * w * float(probs @ centered)
        second += p * w * w * float(probs @ centered ** 2)
    return decomp.shifted_constant + first, second - first ** 2


def hoeffding_samples(Z: float, epsilon: float, delta: float) -> int:
    """``ceil(Z^2 / (2 eps^2) * ln(2/delta))``."""
    check_probability(epsilon, "epsilon")
    check_probability(delta, "delta")
    if Z <= 0:
        raise ValueError("Z must be positive")
    return int(math.ceil(Z * Z / (2 * epsilon * epsilon) * math.log(2 / delta)))


def hoeffding_epsilon(Z: float, t: int, delta: float) -> float:
    """Half-width guaranteed with probability ``1 - delta`` after ``t`` samples."""
    if Z == 0:
        return 0.0
    return Z * math.sqrt(math.log(2 / delta) / (2 * t))


# --- state factory ---------------------------------------------------------------


def apply_channel(base, jumps, gamma_t: float, steps: int = 1, labels=None,
                  clip: float = 1e-12) -> PhysicalStateSource:
    """First-order Kraus evolution of ``|base>`` under jump operators.

    One step uses ``K0 = I - (g/2) sum L^dag L`` and ``K_i = sqrt(g) L_i``
    with ``g = gamma_t / steps``; the step is applied ``steps`` times, the
    trace renormalized and eigenvalue dust below ``clip`` removed. A single
    step creates at most one excitation, so second-order leakage needs
    ``steps > 1``.
    """
    if not 0 <= gamma_t <= 0.1:
        raise ValueError("gamma_t must lie in [0, 0.1] for the first-order expansion")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    psi = check_state(base, normalize=True)
    d = psi.size
    jumps = [check_operator(j, dim=d, name="jump operator") for j in jumps]
    g = gamma_t / steps
    k0 = np.eye(d) - (g / 2) * sum(j.conj().T @ j for j in jumps)
    kraus = [k0] + [math.sqrt(g) * j for j in jumps]
    rho = np.outer(psi, psi.conj())
    for _ in range(steps):
        rho = sum(k @ rho @ k.conj().T for k in kraus)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho).real
    evals, vecs = np.linalg.eigh(rho)
    if evals[0] < -1e-10:
        raise ValueError(f"channel output not PSD (min eigenvalue {evals[0]:.3g}); reduce gamma_t")
    evals = np.where(evals < clip, 0.0, evals)
    rho = (vecs * evals) @ vecs.conj().T
    rho /= np.trace(rho).real
    meta = {"gamma_t": gamma_t, "steps": steps,
            "jumps": list(labels) if labels else [f"L{i}" for i in range(len(jumps))]}
    return PhysicalStateSource(rho, "channel_applied", meta)


def write_sample_log(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_FIELDS)
        for r in rows:
            w.writerow([r[0], r[1], r[2], repr(float(r[3])), repr(float(r[4]))])


def read_sample_log(path) -> list[tuple]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [(r["target_id"], int(r["sample_index"]), r["measurement_id"],
                 float(r["outcome"]), float(r["weight"])) for r in reader]
