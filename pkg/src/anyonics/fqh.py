"""Double point-contact interferometer in a quantum Hall bar.

Probes are edge quasiholes tunneling weakly at two constrictions around the
target.  The evolution is summed to all orders in tunneling channel by
channel: the winding operator is a geometric series in
x = -conj(t1) t2 exp(i(theta_I + theta_II)) whose eigenphase in fusion channel
c of a x b is lambda_c = theta_c / (theta_a theta_b).

Outcome slots match the Mach-Zehnder bit encoding: slot 0 is transmission
along the bottom edge, slot 1 the tunneled top exit (the G_xx signal).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .fusion import ModelDataError, NumericalError
from .model import AnyonModel
from .mach_zehnder import PCoefficients, n_probe_posterior
from .states import PairDensityMatrix


@dataclass(frozen=True)
class FqhSettings:
    """Tunneling amplitudes and edge phases of the two-contact device.

    The weak-tunneling bound |t_j| <= max_tunneling keeps the all-order
    formulas inside their regime of validity; raise it explicitly for
    numerical experiments.
    """

    t1: complex
    t2: complex
    r1: complex = None
    r2: complex = None
    theta_i: float = 0.0
    theta_ii: float = 0.0
    coherence: float = 1.0
    max_tunneling: float = 0.2
    t1sq: float = field(default=None)
    t2sq: float = field(default=None)

    def __post_init__(self):
        for amp, sq in (("t1", "t1sq"), ("t2", "t2sq")):
            if getattr(self, sq) is None:
                object.__setattr__(self, sq, abs(getattr(self, amp)) ** 2)
        for name, rname, tsq in (("t1", "r1", self.t1sq), ("t2", "r2", self.t2sq)):
            if getattr(self, rname) is None:
                object.__setattr__(self, rname, math.sqrt(1.0 - tsq))
        for j, (tsq, r) in enumerate(((self.t1sq, self.r1), (self.t2sq, self.r2)), start=1):
            if abs(tsq + abs(r) ** 2 - 1.0) > 1e-12:
                raise ModelDataError(f"contact {j} not unitary: |t|^2+|r|^2 = {tsq + abs(r) ** 2}")
            if math.sqrt(tsq) > self.max_tunneling + 1e-12:
                raise ModelDataError(
                    f"|t{j}| = {math.sqrt(tsq):.4f} exceeds the weak-tunneling bound "
                    f"{self.max_tunneling}; pass a larger max_tunneling to override"
                )
        if not 0.0 <= self.coherence <= 1.0:
            raise ModelDataError(f"coherence must lie in [0, 1], got {self.coherence}")

    @classmethod
    def from_tunneling(
        cls, t1: float, t2: float, beta: float = 0.0, coherence: float = 1.0, max_tunneling: float = 0.2
    ) -> "FqhSettings":
        """Real amplitudes with the interference phase set directly to beta."""
        return cls(
            t1=t1, t2=t2, theta_i=beta, theta_ii=0.0, coherence=coherence, max_tunneling=max_tunneling
        )

    @property
    def beta(self) -> float:
        """arg(conj(t1) t2 e^{i(theta_I + theta_II)}), the interference phase."""
        base = np.conj(self.t1) * self.t2
        offset = cmath.phase(base) if base != 0 else 0.0
        return offset + self.theta_i + self.theta_ii

    @property
    def r1sq(self) -> float:
        return 1.0 - self.t1sq

    @property
    def r2sq(self) -> float:
        return 1.0 - self.t2sq

    @property
    def visibility(self) -> float:
        """T = |t1 t2|."""
        return math.sqrt(self.t1sq * self.t2sq)

    @property
    def loop_factor(self) -> complex:
        """x = -conj(t1) t2 e^{i(theta_I+theta_II)}, one extra winding amplitude."""
        return -np.conj(self.t1) * self.t2 * cmath.exp(1j * (self.theta_i + self.theta_ii))

    def with_beta(self, beta: float) -> "FqhSettings":
        base = np.conj(self.t1) * self.t2
        offset = cmath.phase(base) if base != 0 else 0.0
        return FqhSettings(
            t1=self.t1,
            t2=self.t2,
            r1=self.r1,
            r2=self.r2,
            theta_i=beta - offset,
            theta_ii=0.0,
            coherence=self.coherence,
            max_tunneling=self.max_tunneling,
            t1sq=self.t1sq,
            t2sq=self.t2sq,
        )


def _require_multiplicity_free(model: AnyonModel):
    if any(m > 1 for m in model.fusion.entries.values()):
        raise ModelDataError("the point-contact coefficients require a multiplicity-free model")


def _channel_phases(model: AnyonModel, a, b) -> list:
    """(c, lambda_c) over the fusion channels of a x b."""
    ia, ib = model.index(a), model.index(b)
    out = []
    for c, _ in model.fusion.fuse(ia, ib):
        out.append(
            (model.label(c), complex(model.theta[c] / (model.theta[ia] * model.theta[ib])))
        )
    return out


def channel_evolution(model: AnyonModel, a, b, settings: FqhSettings) -> list:
    """The 2x2 evolution matrix of one probe per fusion channel of a x b.

    Basis: (top edge, bottom edge).  Each matrix is exactly unitary; the
    winding series is summed in closed form.
    """
    _require_multiplicity_free(model)
    s = settings
    phase_sum = cmath.exp(1j * (s.theta_i + s.theta_ii))
    out = []
    for c, lam in _channel_phases(model, a, b):
        w = 1.0 / (1.0 + np.conj(s.t1) * s.t2 * phase_sum * lam)
        r_ab = model.r_symbol(a, b, c)
        r_ba = model.r_symbol(b, a, c)
        u = np.array(
            [
                [
                    np.conj(s.r1) * np.conj(s.r2) * cmath.exp(1j * s.theta_i) * r_ab * w,
                    (s.t1 + s.t2 * phase_sum * lam) * w,
                ],
                [
                    -(np.conj(s.t2) + np.conj(s.t1) * phase_sum * lam) * w,
                    s.r1 * s.r2 * cmath.exp(1j * s.theta_ii) * r_ba * w,
                ],
            ],
            dtype=complex,
        )
        out.append((c, u))
    return out


def p_exact_diagonal(model: AnyonModel, a, b, settings: FqhSettings) -> tuple:
    """All-order outcome probabilities (p_transmit, p_top) for a definite charge a.

    Coherence Q < 1 damps the n-th interference harmonic by Q^n (wrapped
    phase noise), which reduces to the plain formulas at Q = 1.
    """
    _require_multiplicity_free(model)
    s = settings
    t_vis = s.visibility
    q = s.coherence
    beta = s.beta
    if (1.0 - t_vis**2) < 1e-12:
        raise NumericalError("tunneling amplitudes too close to the series pole |t1 t2| = 1")
    ia, ib = model.index(a), model.index(b)
    da, db = model.d[ia], model.d[ib]
    p_fwd = 0.0
    for c, lam in _channel_phases(model, a, b):
        ic = model.index(c)
        weight = model.fusion.n(ia, ib, ic) * model.d[ic] / (da * db)
        den = 1.0 + (q * t_vis) ** 2 + 2.0 * q * t_vis * math.cos(beta + cmath.phase(lam))
        if den < 1e-12:
            raise NumericalError("evolution series at its pole")
        p_fwd += weight * s.r1sq * s.r2sq * (1.0 - (q * t_vis) ** 2) / ((1.0 - t_vis**2) * den)
    return p_fwd, 1.0 - p_fwd


def p_first_order(model: AnyonModel, a, a2, e, b, settings: FqhSettings) -> tuple:
    """Outcome coefficients through order |t|^2."""
    s = settings
    m_ab = model.monodromy_scalar(a, b)
    m_a2b = np.conj(model.monodromy_scalar(a2, b))
    m_eb = model.monodromy_scalar(e, b)
    cross = (
        s.coherence
        * s.visibility
        * (cmath.exp(1j * s.beta) * m_ab + cmath.exp(-1j * s.beta) * m_a2b)
    )
    p_fwd = 1.0 - s.t1sq - s.t2sq - cross
    p_top = s.t1sq + cross + s.t2sq * m_eb
    return complex(p_fwd), complex(p_top)


def _pair_weights(model: AnyonModel, a, a2, e, b) -> list:
    """Exact contraction weights (lambda_t, lambda_y, P) for the winding series.

    P(t, y) = (d_t / (d_a d_b)) |[F_t^{e a2 b}]_{(a)(y)}|^2; the weights are
    non-negative and sum to 1 over all (t, y).
    """
    ia, ia2, ib, ie = model.index(a), model.index(a2), model.index(b), model.index(e)
    th = model.theta
    lam_y = {
        y: complex(th[y] / (th[ia2] * th[ib])) for y, _ in model.fusion.fuse(ia2, ib)
    }
    out = []
    for t, _ in model.fusion.fuse(ia, ib):
        blk = model.f_block(ie, ia2, ib, t)
        if blk.empty:
            continue
        lam_t = complex(th[t] / (th[ia] * th[ib]))
        pref = model.d[t] / (model.d[ia] * model.d[ib])
        for i, (x, _, _) in enumerate(blk.rows):
            if x != ia:
                continue
            for j, (y, _, _) in enumerate(blk.cols):
                wgt = pref * abs(blk.mat[i, j]) ** 2
                if wgt > 0.0:
                    out.append((lam_t, lam_y[y], wgt))
    return out


def _winding_coefficients(settings: FqhSettings, slot: int, terms: int) -> np.ndarray:
    """Amplitude of j full windings before exiting through ``slot``."""
    s = settings
    x = s.loop_factor
    phase_sum = cmath.exp(1j * (s.theta_i + s.theta_ii))
    coeffs = np.empty(terms, dtype=complex)
    if slot == 0:  # transmit along the bottom edge
        base = s.r1 * s.r2 * cmath.exp(1j * s.theta_ii)
        for j in range(terms):
            coeffs[j] = base * x**j
    else:  # tunneled, exits along the top edge
        coeffs[0] = s.t1
        base = s.r1sq * s.t2 * phase_sum
        for j in range(1, terms):
            coeffs[j] = base * x ** (j - 1)
    return coeffs


def p_offdiagonal_exact(
    model: AnyonModel, a, a2, e, b, settings: FqhSettings, series_tol: float = 1e-12
) -> tuple:
    """All-order coefficients p^s_{a a2 e, b} for a coherence between a and a2.

    The winding series is contracted against the exact pair weights; the
    double sum is truncated once its certified geometric tail drops below
    series_tol (always reachable for |t1 t2| < 1).
    """
    _require_multiplicity_free(model)
    if model.n_abc(a2, e, a) == 0:
        return 0.0 + 0.0j, 0.0 + 0.0j
    s = settings
    absx = abs(s.loop_factor)
    if absx >= 1.0:
        raise NumericalError("winding series diverges: |t1 t2| >= 1")
    weights = _pair_weights(model, a, a2, e, b)
    q = s.coherence

    terms = 8
    while True:
        # tail bound: all remaining coefficients are geometric with ratio |x|
        biggest = max(abs(s.t1), s.r1sq * abs(s.t2), abs(s.r1 * s.r2))
        head = biggest * terms + 1.0
        tail = biggest * absx ** (terms - 1) / (1.0 - absx) if absx > 0 else 0.0
        if tail * (2.0 * head + tail) < series_tol:
            break
        terms *= 2
        if terms > 4096:
            raise NumericalError("winding series failed to reach the requested tolerance")

    qmat = q ** np.abs(np.subtract.outer(np.arange(terms), np.arange(terms)))
    out = []
    for slot in (0, 1):
        coeffs = _winding_coefficients(settings, slot, terms)
        acc = 0.0 + 0.0j
        for lam_t, lam_y, wgt in weights:
            left = coeffs * lam_t ** np.arange(terms)
            right = np.conj(coeffs * lam_y ** np.arange(terms))
            acc += wgt * (left @ qmat @ right)
        out.append(complex(acc))
    return tuple(out)


def p_coefficients(
    model: AnyonModel, b, settings: FqhSettings, series_tol: float = 1e-12
) -> PCoefficients:
    """Outcome-coefficient table for quasihole probes of charge b."""
    _require_multiplicity_free(model)
    b_lab = model.label(model.index(b))

    def compute(x, x2, e):
        if x == x2 and e == model.vacuum:
            return p_exact_diagonal(model, x, b_lab, settings)
        return p_offdiagonal_exact(model, x, x2, e, b_lab, settings, series_tol)

    return PCoefficients(
        model,
        compute,
        lambda e: model.monodromy_scalar(e, b_lab),
        outcome_labels=("transmit", "top_exit"),
        meta={
            "device": "fqh",
            "probe": b_lab,
            "note": "single-species all-order tunneling; composite-excitation "
            "contributions at higher order are not modeled",
        },
    )


def fqh_collapse(
    rho: PairDensityMatrix,
    b,
    settings: FqhSettings,
    n_total: int,
    n: int,
    series_tol: float = 1e-12,
) -> tuple:
    """N-probe posterior for the point-contact device (electric superselection on)."""
    if rho.superselection is None:
        raise ModelDataError("FQH collapse requires a state with electric superselection set")
    p = p_coefficients(rho.model, b, settings, series_tol)
    return n_probe_posterior(rho, p, n_total, n)


# ---------------------------------------------------------------------------
# conductance


def conductance_curve(
    rho_fixed: PairDensityMatrix, b, settings: FqhSettings, beta_grid
) -> list:
    """Relative longitudinal conductance over the interference-phase grid.

    G_xx is proportional to the top-exit probability averaged over the
    target's charge distribution; the input state should be a fixed state.
    """
    model = rho_fixed.model
    dist = rho_fixed.charge_distribution()
    out = []
    for beta in beta_grid:
        s = settings.with_beta(float(beta))
        g = 0.0
        for a, prob in dist.items():
            if prob <= 0.0:
                continue
            g += prob * p_exact_diagonal(model, a, b, s)[1]
        out.append((float(beta), float(g)))
    return out


def harmonic_summary(curve) -> dict:
    """DFT amplitudes of a conductance curve sampled uniformly over one period."""
    values = np.array([g for _, g in curve], dtype=float)
    n = len(values)
    spec = np.fft.rfft(values) / n
    amplitudes = [abs(spec[0])] + [2.0 * abs(z) for z in spec[1:]]
    dominant = int(np.argmax(amplitudes[1:]) + 1) if n > 2 else 0
    return {
        "amplitudes": amplitudes,
        "dominant_harmonic": dominant,
        "mean": float(values.mean()),
    }


# ---------------------------------------------------------------------------
# structural conditions


def survival_condition(model: AnyonModel, a, a2, b) -> tuple:
    """Whether a coherence between a and a2 can survive all probe orders.

    Tests the moment condition sum_c N_xb^c (d_c/d_x) (theta_c/theta_x)^n for
    n up to the number of distinct eigenphases (sufficient by Vandermonde).
    Returns (survives, first violated n or None).
    """
    phases_a = _channel_phases(model, a, b)
    phases_a2 = _channel_phases(model, a2, b)
    distinct = {
        round(cmath.phase(lam), 12) for _, lam in phases_a
    } | {round(cmath.phase(lam), 12) for _, lam in phases_a2}
    n_max = len(distinct)
    ia, ia2, ib = model.index(a), model.index(a2), model.index(b)
    for n in range(n_max + 1):
        lhs = sum(
            model.fusion.n(ia, ib, model.index(c)) * model.d[model.index(c)] / model.d[ia] * lam**n
            for c, lam in phases_a
        )
        rhs = sum(
            model.fusion.n(ia2, ib, model.index(c)) * model.d[model.index(c)] / model.d[ia2] * lam**n
            for c, lam in phases_a2
        )
        if abs(lhs - rhs) > 1e-9:
            return False, n
    return True, None


def suppression_settings(model: AnyonModel, a, b, t: float = 0.1):
    """Equal-amplitude settings that null the top-exit probability for charge a.

    Exists only when every fusion channel of a x b shares the same winding
    phase; returns the verified FqhSettings, else None.
    """
    phases = [cmath.phase(lam) for _, lam in _channel_phases(model, a, b)]
    ref = phases[0]
    for ph in phases[1:]:
        delta = (ph - ref) % (2.0 * math.pi)
        if min(delta, 2.0 * math.pi - delta) > 1e-9:
            return None
    beta = (math.pi - ref) % (2.0 * math.pi)
    settings = FqhSettings.from_tunneling(t, t, beta)
    p_fwd, p_top = p_exact_diagonal(model, a, b, settings)
    if abs(p_fwd - 1.0) > 1e-9 or abs(p_top) > 1e-9:
        raise NumericalError(
            f"suppression settings failed verification: p = ({p_fwd}, {p_top})"
        )
    return settings
