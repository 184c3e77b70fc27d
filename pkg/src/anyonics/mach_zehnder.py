"""Mach-Zehnder interferometry of anyonic charge.

Implements the probe-outcome coefficients p^s_{a a' e}, the single- and
N-probe density-matrix updates, charge-class partitioning, fixed-state and
large-N limit classification, rogue (quasi-fixed) detection, Monte Carlo
sampling and probe-count planning.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfinv, gammaln

from .fusion import ModelDataError, NumericalError
from .model import AnyonModel
from .states import PairDensityMatrix, reweight_channels

#: absolute tolerance used to cluster outcome probabilities into classes
CLASS_TOL = 1e-7

RIGHT, UP = 0, 1  # serialized outcome bits


class ZeroProbabilityError(NumericalError):
    """Conditioning on an outcome of (numerically) zero probability."""


class IndistinguishableError(ValueError):
    """The two outcome probabilities coincide; no probe count suffices."""


class Placement(enum.Enum):
    """Location of the target's entangled partner C relative to the device."""

    C_BELOW_RIGHT = "C_BELOW_RIGHT"
    C_ABOVE = "C_ABOVE"
    C_BETWEEN_OUTPUTS = "C_BETWEEN_OUTPUTS"


@dataclass(frozen=True)
class InterferometerSettings:
    """Beam-splitter amplitudes, path phases and coherence of the device.

    ``coherence`` multiplies the interference cross terms only (Q).  The
    magnitude-squares are cached so that probability formulas hit exact
    floating-point values when the settings are built from probabilities.
    """

    t1: complex
    r1: complex
    t2: complex
    r2: complex
    theta_i: float = 0.0
    theta_ii: float = 0.0
    coherence: float = 1.0
    placement: Placement = Placement.C_BELOW_RIGHT
    t1sq: float = field(default=None)
    r1sq: float = field(default=None)
    t2sq: float = field(default=None)
    r2sq: float = field(default=None)

    def __post_init__(self):
        for amp, sq in (("t1", "t1sq"), ("r1", "r1sq"), ("t2", "t2sq"), ("r2", "r2sq")):
            if getattr(self, sq) is None:
                object.__setattr__(self, sq, abs(getattr(self, amp)) ** 2)
        for j, (tsq, rsq) in enumerate(((self.t1sq, self.r1sq), (self.t2sq, self.r2sq)), start=1):
            if abs(tsq + rsq - 1.0) > 1e-12:
                raise ModelDataError(f"splitter {j} not lossless: |t|^2+|r|^2 = {tsq + rsq}")
        if not 0.0 <= self.coherence <= 1.0:
            raise ModelDataError(f"coherence must lie in [0, 1], got {self.coherence}")

    @classmethod
    def from_probabilities(
        cls,
        t1sq: float,
        t2sq: float,
        theta: float,
        coherence: float = 1.0,
        placement: Placement = Placement.C_BELOW_RIGHT,
    ) -> "InterferometerSettings":
        """Real splitter amplitudes with |t_j|^2 given exactly and phase theta."""
        return cls(
            t1=math.sqrt(t1sq),
            r1=math.sqrt(1.0 - t1sq),
            t2=math.sqrt(t2sq),
            r2=math.sqrt(1.0 - t2sq),
            theta_i=theta,
            theta_ii=0.0,
            coherence=coherence,
            placement=placement,
            t1sq=t1sq,
            r1sq=1.0 - t1sq,
            t2sq=t2sq,
            r2sq=1.0 - t2sq,
        )

    @property
    def visibility(self) -> float:
        """T = |t1 r1 t2 r2|, the amplitude of the interference term."""
        return math.sqrt(self.t1sq * self.r1sq * self.t2sq * self.r2sq)

    @property
    def theta(self) -> float:
        """arg(t1 r1* r2* t2*) + theta_I - theta_II, the interference phase."""
        base = self.t1 * np.conj(self.r1) * np.conj(self.r2) * np.conj(self.t2)
        offset = cmath.phase(base) if base != 0 else 0.0
        return offset + self.theta_i - self.theta_ii

    @property
    def cross(self) -> complex:
        """T e^{i theta}, the cached interference term (without Q)."""
        return self.visibility * cmath.exp(1j * self.theta)


class ProbeEnsemble:
    """Probe mixture: one 2x2 Hermitian PSD direction matrix per charge.

    The direction basis is (horizontal, vertical); the classic single-beam
    probe of charge b carries weight matrix Pr(b) * |h><h|.
    """

    def __init__(self, weights: dict, model: AnyonModel):
        self.model = model
        self.weights = {}
        total = 0.0
        for b, w in weights.items():
            lab = model.label(model.index(b))
            w = np.asarray(w, dtype=complex).reshape(2, 2)
            if np.max(np.abs(w - w.conj().T)) > 1e-12:
                raise ModelDataError(f"direction matrix for {lab} is not Hermitian")
            if np.min(np.linalg.eigvalsh(0.5 * (w + w.conj().T))) < -1e-12:
                raise ModelDataError(f"direction matrix for {lab} is not PSD")
            self.weights[lab] = w
            total += float(np.trace(w).real)
        if abs(total - 1.0) > 1e-9:
            raise ModelDataError(f"probe weights must sum to 1, got {total}")

    @classmethod
    def single(cls, model: AnyonModel, b) -> "ProbeEnsemble":
        return cls({b: np.array([[1.0, 0.0], [0.0, 0.0]])}, model)

    @classmethod
    def mixture(cls, model: AnyonModel, probs: dict) -> "ProbeEnsemble":
        return cls(
            {b: np.array([[p, 0.0], [0.0, 0.0]]) for b, p in probs.items()}, model
        )

    @property
    def simple(self) -> bool:
        """True when every probe enters through the horizontal leg only."""
        return all(
            abs(w[0, 1]) + abs(w[1, 0]) + abs(w[1, 1]) == 0.0 for w in self.weights.values()
        )

    def charge_probs(self) -> dict:
        return {b: float(np.trace(w).real) for b, w in self.weights.items()}

    def mean_monodromy(self, x) -> complex:
        """M_{xB} = sum_b Pr(b) M_{xb} over the ensemble."""
        acc = 0.0 + 0.0j
        for b, w in self.weights.items():
            acc += np.trace(w) * self.model.monodromy_scalar(x, b)
        return complex(acc)


class PCoefficients:
    """Lazy table of outcome coefficients p^s_{a a' e} for one device setup.

    ``slot 0`` is the transmitted/horizontal outcome (bit 0), ``slot 1`` the
    reflected/vertical one (bit 1).
    """

    def __init__(self, model: AnyonModel, compute_pair, probe_monodromy, outcome_labels=("right", "up"), meta=None):
        self.model = model
        self._compute = compute_pair
        self._m_probe = probe_monodromy
        self.outcome_labels = tuple(outcome_labels)
        self.meta = dict(meta or {})
        self._cache: dict = {}
        self._mcache: dict = {}

    def pair(self, a, a2, e) -> tuple:
        key = (a, a2, e)
        out = self._cache.get(key)
        if out is None:
            if self.model.n_abc(a2, e, a) == 0:
                out = (0.0 + 0.0j, 0.0 + 0.0j)
            else:
                out = self._compute(a, a2, e)
            self._cache[key] = out
        return out

    def right(self, a, a2, e) -> complex:
        return self.pair(a, a2, e)[0]

    def up(self, a, a2, e) -> complex:
        return self.pair(a, a2, e)[1]

    def diag(self, a) -> float:
        """p_{a a 1} for the transmitted outcome; real in [0, 1]."""
        val = self.pair(a, a, self.model.vacuum)[0]
        if abs(val.imag) > 1e-9:
            raise ModelDataError(f"diagonal outcome probability not real for {a}: {val}")
        return float(val.real)

    def probe_monodromy(self, e) -> complex:
        out = self._mcache.get(e)
        if out is None:
            out = self._m_probe(e)
            self._mcache[e] = out
        return out


def p_coefficients(
    model: AnyonModel, probe: ProbeEnsemble, settings: InterferometerSettings
) -> PCoefficients:
    """Outcome coefficients for a Mach-Zehnder run with the given probe beam."""
    q = settings.coherence
    placement = settings.placement
    if not probe.simple and placement is not Placement.C_BELOW_RIGHT:
        raise ModelDataError(
            "generalized probe directions are defined for the default C placement only"
        )

    if probe.simple:
        probs = probe.charge_probs()

        def mean_m(x):
            return sum(p * model.monodromy_scalar(x, b) for b, p in probs.items())

        def compute(a, a2, e):
            m_a = mean_m(a)
            m_a2 = mean_m(a2)
            m_e = mean_m(e)
            cross = q * settings.cross
            s = settings
            if placement is Placement.C_BELOW_RIGHT:
                p_r = s.t1sq * s.r2sq * m_e + cross * m_a + np.conj(cross * m_a2) + s.r1sq * s.t2sq
                p_u = s.t1sq * s.t2sq * m_e - cross * m_a - np.conj(cross * m_a2) + s.r1sq * s.r2sq
            elif placement is Placement.C_ABOVE:
                p_r = (
                    s.t1sq * s.r2sq
                    + cross * m_a2
                    + np.conj(cross * m_a)
                    + s.r1sq * s.t2sq * np.conj(m_e)
                )
                p_u = (
                    s.t1sq * s.t2sq
                    - cross * m_a2
                    - np.conj(cross * m_a)
                    + s.r1sq * s.r2sq * np.conj(m_e)
                )
            else:  # C_BETWEEN_OUTPUTS
                p_r = (
                    s.t1sq * s.r2sq
                    + cross * m_a2
                    + np.conj(cross * m_a)
                    + s.r1sq * s.t2sq * np.conj(m_e)
                )
                p_u = s.t1sq * s.t2sq * m_e - cross * m_a - np.conj(cross * m_a2) + s.r1sq * s.r2sq
            return (complex(p_r), complex(p_u))

    else:

        def compute(a, a2, e):
            t1, r1, t2, r2 = settings.t1, settings.r1, settings.t2, settings.r2
            phase = cmath.exp(1j * (settings.theta_i - settings.theta_ii))
            t1sq, r1sq = abs(t1) ** 2, abs(r1) ** 2
            t2sq, r2sq = abs(t2) ** 2, abs(r2) ** 2
            x = q * t1 * np.conj(r1) * np.conj(t2) * np.conj(r2) * phase
            xc = q * np.conj(t1) * r1 * t2 * r2 * np.conj(phase)
            xf = q * t1 * t1 * np.conj(t2) * np.conj(r2) * phase
            xb = q * r1 * r1 * t2 * r2 * np.conj(phase)
            xg = q * np.conj(r1) * np.conj(r1) * np.conj(t2) * np.conj(r2) * phase
            xh = q * np.conj(t1) * np.conj(t1) * t2 * r2 * np.conj(phase)
            p_r = 0.0 + 0.0j
            p_u = 0.0 + 0.0j
            for b, w in probe.weights.items():
                m_a = model.monodromy_scalar(a, b)
                m_a2 = np.conj(model.monodromy_scalar(a2, b))
                m_e = model.monodromy_scalar(e, b)
                table_r = {
                    (0, 0): t1sq * r2sq * m_e + x * m_a + xc * m_a2 + r1sq * t2sq,
                    (0, 1): t1 * r1 * r2sq * m_e - xf * m_a + xb * m_a2 - t1 * r1 * t2sq,
                    (1, 0): np.conj(t1 * r1) * r2sq * m_e + xg * m_a - xh * m_a2 - np.conj(t1 * r1) * t2sq,
                    (1, 1): r1sq * r2sq * m_e - x * m_a - xc * m_a2 + t1sq * t2sq,
                }
                table_u = {
                    (0, 0): t1sq * t2sq * m_e - x * m_a - xc * m_a2 + r1sq * r2sq,
                    (0, 1): t1 * r1 * t2sq * m_e + xf * m_a - xb * m_a2 - t1 * r1 * r2sq,
                    (1, 0): np.conj(t1 * r1) * t2sq * m_e - xg * m_a + xh * m_a2 - np.conj(t1 * r1) * r2sq,
                    (1, 1): r1sq * t2sq * m_e + x * m_a + xc * m_a2 + t1sq * r2sq,
                }
                for rr in (0, 1):
                    for rp in (0, 1):
                        wt = w[rr, rp]
                        if wt != 0.0:
                            p_r += wt * table_r[(rr, rp)]
                            p_u += wt * table_u[(rr, rp)]
            return (complex(p_r), complex(p_u))

    return PCoefficients(
        model,
        compute,
        probe.mean_monodromy,
        outcome_labels=("right", "up"),
        meta={"device": "mach_zehnder", "placement": placement.value},
    )


# ---------------------------------------------------------------------------
# density-matrix updates


def outcome_probability(rho: PairDensityMatrix, p: PCoefficients, slot: int) -> float:
    acc = 0.0
    for (a, c, f, mu), val in rho.diagonal().items():
        coeffs = p.pair(a, a, rho.model.vacuum)
        acc += val.real * coeffs[slot].real
    return acc


def single_probe_update(rho: PairDensityMatrix, p: PCoefficients, outcome: int) -> tuple:
    """Send one probe, observe ``outcome`` (0 transmitted / 1 reflected).

    Returns (probability of the outcome, collapsed state).
    """
    prob = outcome_probability(rho, p, outcome)
    if prob < 1e-15:
        raise ZeroProbabilityError(f"outcome {outcome} has probability {prob}")

    def weight(a, a2, e):
        return p.pair(a, a2, e)[outcome] / prob

    return prob, reweight_channels(rho, weight)


def _log_choose(n_total: int, n: int) -> float:
    return float(gammaln(n_total + 1) - gammaln(n + 1) - gammaln(n_total - n + 1))


def log_binomial_weight(n_total: int, n: int, p: complex, q: complex):
    """log of C(N,n) p^n q^(N-n); None stands for log(0).  Complex-safe."""
    acc = complex(_log_choose(n_total, n))
    if n > 0:
        if p == 0:
            return None
        acc += n * cmath.log(p)
    if n_total - n > 0:
        if q == 0:
            return None
        acc += (n_total - n) * cmath.log(q)
    return acc


def log_outcome_count_probability(rho: PairDensityMatrix, p: PCoefficients, n_total: int, n: int) -> float:
    """log Pr_N(n) for observing n transmitted probes out of N."""
    terms = []
    for (a, _, _, _), val in rho.diagonal().items():
        if val.real <= 0.0:
            continue
        pa = p.diag(a)
        lw = log_binomial_weight(n_total, n, pa, 1.0 - pa)
        if lw is None:
            continue
        terms.append(math.log(val.real) + lw.real)
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log(sum(math.exp(t - top) for t in terms))


def n_probe_posterior(rho: PairDensityMatrix, p: PCoefficients, n_total: int, n: int) -> tuple:
    """Closed-form posterior after N probes with n transmitted outcomes."""
    if not 0 <= n <= n_total:
        raise ValueError(f"need 0 <= n <= N, got n={n}, N={n_total}")
    if n_total == 0:
        return 1.0, rho
    log_pr = log_outcome_count_probability(rho, p, n_total, n)
    if log_pr == -math.inf or log_pr < -690.0:
        raise ZeroProbabilityError(f"Pr_N({n}) underflows (log {log_pr})")

    def weight(a, a2, e):
        pr, pu = p.pair(a, a2, e)
        lw = log_binomial_weight(n_total, n, pr, pu)
        if lw is None:
            return 0.0
        return cmath.exp(lw - log_pr)

    return math.exp(log_pr), reweight_channels(rho, weight)


def averaged_state(rho: PairDensityMatrix, p: PCoefficients, n_total: int) -> PairDensityMatrix:
    """Mixture over all outcome counts: e-components scaled by (p_r + p_u)^N."""
    if n_total == 0:
        return rho

    def weight(a, a2, e):
        s = p.pair(a, a2, e)
        total = s[0] + s[1]
        if total == 0:
            return 0.0
        return cmath.exp(n_total * cmath.log(total))

    return reweight_channels(rho, weight)


# ---------------------------------------------------------------------------
# charge classes and limit states


@dataclass(frozen=True)
class ChargeClass:
    labels: tuple
    p: float


@dataclass(frozen=True)
class ChargeClassPartition:
    classes: tuple
    tol: float

    def index_of(self, label) -> int:
        for i, cls in enumerate(self.classes):
            if label in cls.labels:
                return i
        raise KeyError(label)

    def class_probabilities(self, rho: PairDensityMatrix) -> list:
        dist = rho.charge_distribution()
        return [sum(dist.get(lab, 0.0) for lab in cls.labels) for cls in self.classes]


def charge_classes(model: AnyonModel, p: PCoefficients, tol: float = CLASS_TOL) -> ChargeClassPartition:
    """Maximal subsets of charges sharing the same transmitted-outcome probability."""
    values = sorted((p.diag(a), a) for a in model.charges)
    groups: list = []
    for val, lab in values:
        if groups and val - groups[-1][-1][0] <= tol:
            groups[-1].append((val, lab))
        else:
            groups.append([(val, lab)])
    classes = tuple(
        ChargeClass(tuple(lab for _, lab in grp), float(np.mean([v for v, _ in grp])))
        for grp in groups
    )
    return ChargeClassPartition(classes, tol)


def fixed_state(
    rho: PairDensityMatrix, p: PCoefficients, partition: ChargeClassPartition, kappa: int
) -> tuple:
    """Project onto the fixed state of class kappa: support in C_kappa, M_eB = 1.

    Returns (Pr_A(kappa), the fixed state).  Idempotent under probe updates.
    """
    cls = partition.classes[kappa]
    members = set(cls.labels)
    prob = partition.class_probabilities(rho)[kappa]
    if prob < 1e-15:
        raise ZeroProbabilityError(f"class {kappa} carries no probability")

    def weight(a, a2, e):
        if a not in members or a2 not in members:
            return 0.0
        if abs(p.probe_monodromy(e) - 1.0) > partition.tol:
            return 0.0
        return 1.0 / prob

    return prob, reweight_channels(rho, weight)


@dataclass
class LimitClassification:
    """Large-N collapse at observed outcome fraction r."""

    r: float
    congruous: list  # indices of the winning classes
    delta: float  # shared limiting Delta factor (1 / total winning probability)
    state: PairDensityMatrix
    case: str  # "fixed" | "endpoint_mixture"


def _log_g(p_val: float, r: float) -> float:
    """log of p^r (1-p)^(1-r), with 0 log 0 = 0."""
    acc = 0.0
    if r > 0.0:
        if p_val == 0.0:
            return -math.inf
        acc += r * math.log(p_val)
    if r < 1.0:
        if p_val == 1.0:
            return -math.inf
        acc += (1.0 - r) * math.log(1.0 - p_val)
    return acc


def classify_limit(
    rho: PairDensityMatrix,
    p: PCoefficients,
    partition: ChargeClassPartition,
    r: float,
    tol: float = 1e-9,
) -> LimitClassification:
    """The N -> infinity posterior when the outcome fraction is held at r."""
    probs = partition.class_probabilities(rho)
    supported = [k for k, pr in enumerate(probs) if pr > 1e-15]
    if not supported:
        raise ZeroProbabilityError("state has no class support")
    logg = {k: _log_g(partition.classes[k].p, r) for k in supported}
    top = max(logg.values())
    winners = [k for k in supported if logg[k] >= top - tol]
    total = sum(probs[k] for k in winners)
    member_class = {lab: k for k in winners for lab in partition.classes[k].labels}

    def weight(a, a2, e):
        ka, ka2 = member_class.get(a), member_class.get(a2)
        if ka is None or ka2 is None or ka != ka2:
            return 0.0
        if abs(p.probe_monodromy(e) - 1.0) > partition.tol:
            return 0.0
        return 1.0 / total

    state = reweight_channels(rho, weight)
    case = "fixed" if len(winners) == 1 else "endpoint_mixture"
    return LimitClassification(r=r, congruous=winners, delta=1.0 / total, state=state, case=case)


# ---------------------------------------------------------------------------
# rogue (quasi-fixed) detection


@dataclass
class RogueReport:
    trivial_case: str | None
    quasi_fixed: list  # (a, a2, e, alpha, beta, magnitude)
    condition_vii_pairs: list  # (a, a2) with the non-generic theta match
    notes: list


def detect_rogue(
    model: AnyonModel,
    probe: ProbeEnsemble,
    settings: InterferometerSettings,
    tol: float = CLASS_TOL,
) -> RogueReport:
    """Search for quasi-fixed (rogue) elements at the given settings.

    Covers the no-interference cases (any splitter amplitude zero) and, for
    full interferometry, the non-generic theta condition together with a
    direct numerical scan of |p_r| = p_kappa = 1 - |p_u| with nonzero phases.
    """
    p = p_coefficients(model, probe, settings)
    notes: list = []
    amp = {
        "t1": math.sqrt(settings.t1sq),
        "r1": math.sqrt(settings.r1sq),
        "t2": math.sqrt(settings.t2sq),
        "r2": math.sqrt(settings.r2sq),
    }
    trivial = next((k for k, v in amp.items() if v < 1e-15), None)
    quasi: list = []
    if trivial is not None:
        if trivial != "t1":
            # interference absent; e-channels with |M_eB| = 1 but M_eB != 1 are quasi-fixed
            for e in model.charges:
                m_e = p.probe_monodromy(e)
                if abs(abs(m_e) - 1.0) <= tol and abs(m_e - 1.0) > tol:
                    quasi.append((None, None, e, cmath.phase(m_e), cmath.phase(m_e), abs(m_e)))
        notes.append(f"no interferometry: {trivial} = 0, single charge class")
        return RogueReport(trivial_case=trivial, quasi_fixed=quasi, condition_vii_pairs=[], notes=notes)

    theta = settings.theta % (2.0 * math.pi)
    vii_pairs = []
    for a in model.charges:
        for a2 in model.charges:
            if a >= a2:
                continue
            m_a, m_a2 = p.probe_monodromy(a), p.probe_monodromy(a2)
            dm = m_a - m_a2
            if abs(dm) <= tol:
                continue
            want = (-cmath.phase(dm)) % math.pi  # +- pi/2 ambiguity folds mod pi
            got = (theta + math.pi / 2.0) % math.pi
            if min(abs(want - got), math.pi - abs(want - got)) <= 1e-6:
                vii_pairs.append((a, a2))

    # direct numerical scan of the quasi-fixed definition
    for a in model.charges:
        for a2 in model.charges:
            pa, pa2 = p.diag(a), p.diag(a2)
            if abs(pa - pa2) > tol:
                continue
            for e in model.charges:
                if e == model.vacuum and a == a2:
                    continue
                if model.n_abc(a2, e, a) == 0:
                    continue
                pr, pu = p.pair(a, a2, e)
                if abs(abs(pr) - pa) > tol or abs(abs(pu) - (1.0 - pa)) > tol:
                    continue
                alpha, beta = cmath.phase(pr), cmath.phase(pu)
                if abs(alpha) > tol or abs(beta) > tol:
                    quasi.append((a, a2, e, alpha, beta, abs(pr)))
    return RogueReport(trivial_case=None, quasi_fixed=quasi, condition_vii_pairs=vii_pairs, notes=notes)


# ---------------------------------------------------------------------------
# sampled runs


@dataclass
class RunResult:
    outcomes: str  # '0' = transmitted, '1' = reflected
    n_right: int
    final: PairDensityMatrix
    r_trace: np.ndarray
    seed: int


def sample_run(
    rho: PairDensityMatrix,
    probes,
    seed: int,
    many_to_many: bool = False,
) -> RunResult:
    """Draw a full outcome sequence, updating the state probe by probe.

    ``probes`` is a list of PCoefficients, one per probe (repeat an entry for
    identical probes).  Deterministic for a fixed seed; identical probes use
    an equivalent class-weight fast path.
    """
    if not probes:
        raise ValueError("probe list must be non-empty")
    rng = np.random.default_rng(seed)
    n_total = len(probes)
    bits = []
    r_trace = np.empty(n_total)

    identical = all(q is probes[0] for q in probes)
    if many_to_many:
        p0 = None
        n = 0
        for k in range(n_total):
            pk = probes[k]
            if identical and p0 is not None:
                prob = p0
            else:
                prob = outcome_probability(rho, pk, RIGHT)
                if identical:
                    p0 = prob
            bit = 0 if rng.random() < prob else 1
            n += 1 - bit
            bits.append(bit)
            r_trace[k] = n / (k + 1)
        return RunResult("".join(map(str, bits)), n, rho, r_trace, seed)

    if identical:
        p = probes[0]
        diag = rho.diagonal()
        labels = sorted({a for (a, _, _, _) in diag})
        support = np.array(
            [sum(v.real for (a, _, _, _), v in diag.items() if a == lab) for lab in labels]
        )
        pvals = np.array([p.diag(lab) for lab in labels])
        with np.errstate(divide="ignore"):
            logp = np.log(pvals, out=np.full_like(pvals, -np.inf), where=pvals > 0)
            logq = np.log(1.0 - pvals, out=np.full_like(pvals, -np.inf), where=pvals < 1)
        logw = np.log(support)
        n = 0
        for k in range(n_total):
            w = np.exp(logw - logw.max())
            w /= w.sum()
            prob = float(w @ pvals)
            bit = 0 if rng.random() < prob else 1
            logw = logw + (logp if bit == 0 else logq)
            if np.all(np.isinf(logw)):
                raise ZeroProbabilityError("all class weights vanished")
            n += 1 - bit
            bits.append(bit)
            r_trace[k] = n / (k + 1)
        _, final = n_probe_posterior(rho, p, n_total, n)
        return RunResult("".join(map(str, bits)), n, final, r_trace, seed)

    state = rho
    n = 0
    for k, pk in enumerate(probes):
        prob = outcome_probability(state, pk, RIGHT)
        bit = 0 if rng.random() < prob else 1
        _, state = single_probe_update(state, pk, bit)
        n += 1 - bit
        bits.append(bit)
        r_trace[k] = n / (k + 1)
    return RunResult("".join(map(str, bits)), n, state, r_trace, seed)


# ---------------------------------------------------------------------------
# planning


def z_star(alpha: float) -> float:
    """Two-sided normal quantile: 1 - alpha = erf(z / sqrt 2)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(math.sqrt(2.0) * erfinv(1.0 - alpha))

def probes_needed(p1: float, p2: float, alpha: float) -> int:
    """Probes needed to separate outcome probabilities p1, p2 at confidence 1-alpha."""
    for p_val in (p1, p2):
        if not 0.0 <= p_val <= 1.0:
            raise ValueError(f"probability out of range: {p_val}")
    dp = abs(p1 - p2)
    if dp < 1e-15:
        raise IndistinguishableError("p1 = p2: the classes are indistinguishable")
    z = z_star(alpha)
    n_est = (z * (math.sqrt(p1 * (1.0 - p1)) + math.sqrt(p2 * (1.0 - p2))) / dp) ** 2
    return max(1, math.ceil(n_est - 1e-9))

def probes_needed_conservative(dp: float, alpha: float) -> int:
    if dp < 1e-15:
        raise IndistinguishableError("zero probability gap")
    return max(1, math.ceil((z_star(alpha) / dp) ** 2 - 1e-9))

def probes_needed_small_t(t: float, dm: float, alpha: float) -> int:
    if t <= 0 or dm <= 0:
        raise ValueError("need t > 0 and a positive monodromy gap")
    return max(1, math.ceil((z_star(alpha) / (t * dm)) ** 2 - 1e-9))

def measurement_time(t: float, dm: float, alpha: float, total_current: float) -> float:
    """Seconds needed at edge current total_current (amperes)."""
    from scipy.constants import e as electron_charge

    if total_current == 0:
        raise ValueError("total current must be nonzero")
    return electron_charge / abs(total_current) * (z_star(alpha) / (t * dm)) ** 2

def perfect_distinguishability(partition: ChargeClassPartition, tol: float = 1e-12) -> dict:
    """Label each class pair never / sometimes / always perfectly distinguishable."""
    out = {}
    for i in range(len(partition.classes)):
        for j in range(i + 1, len(partition.classes)):
            pi, pj = partition.classes[i].p, partition.classes[j].p
            ends = {k for k, v in (("i", pi), ("j", pj)) if v <= tol or v >= 1.0 - tol}
            if len(ends) == 2 and abs(pi - pj) > tol:
                verdict = "always"
            elif len(ends) >= 1:
                verdict = "sometimes"
            else:
                verdict = "never"
            out[(i, j)] = verdict
    return out
