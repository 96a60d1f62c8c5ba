"""The Markov jump process: coefficient tracks, the emission rate law,
waiting-time sampling by thinning, and the path-level state machine.

A path alternates deterministic pieces with jumps.  In the vacuum the
process waits with time-dependent intensity

    Gamma(t) = 8 (1+q) B max{0, Im[conj(c_minus) c_plus](t)} / |psi0(t)|^2,

then jumps onto an outgoing trajectory whose labels (theta0, phi0) are
uniform over the sphere; the per-solid-angle form is

    sigma(theta0) = (2(1+q)B/pi) max{0, Im[...]} sin(theta0) / |psi0|^2,

independent of phi0.  A particle follows the guiding field until its
radius falls below r_min (absorption: the configuration becomes the
vacuum at the extrapolated arrival time t0) or until it leaves the inner
region r < r_cut/2, after which the near-source model no longer applies
and the path is parked as a particle for the rest of the window.

The emission intensity is exactly 4 pi C_r / |psi0|^2 when C_r > 0, the
flux of |psi|^2 out of the source; a track is "balanced" when
d|psi0|^2/dt = -4 pi C_r(t), which is the bookkeeping under which the
two-sector probability flow closes (validate_balance checks it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BalanceViolation,
    DomainError,
    MajorantError,
    VacuumEmpty,
)
from .params import PhysParams
from .trajectory import (
    Absorbed,
    R_MIN_FRACTION,
    R_SEED_FACTOR,
    SphericalState,
    TrajectorySegment,
    emit_trajectory,
    integrate,
    time_from_radius,
)
from .wavefunction import ModelFamily, current_coeffs

#: Safety factor on the per-interval rate majorant used in thinning.
MAJORANT_MARGIN = 1.1
#: Number of probe points per grid interval when bounding the rate.
_MAJORANT_PROBES = 17
#: A sampled majorant above this is treated as an unbounded rate.
_MAJORANT_CAP = 1e12

BALANCE_TOL = 1e-6


# =====================================================================
# coefficient tracks
# =====================================================================

class CoefficientTrack:
    """Time-dependent data of the process: c_minus(t), c_plus(t) and the
    vacuum amplitude psi0(t) on a strictly increasing grid, interpolated
    piecewise-cubically in each real/imaginary part."""

    def __init__(self, params: PhysParams, times, c_minus, c_plus, psi0):
        self.params = params
        t = np.asarray(times, dtype=float)
        if t.ndim != 1 or len(t) < 1:
            raise DomainError("track needs a one-dimensional, nonempty time grid")
        if len(t) > 1 and np.any(np.diff(t) <= 0.0):
            raise DomainError("track grid must be strictly increasing")
        cm = np.asarray(c_minus, dtype=complex)
        cp = np.asarray(c_plus, dtype=complex)
        p0 = np.asarray(psi0, dtype=complex)
        if not (cm.shape == cp.shape == p0.shape == t.shape):
            raise DomainError("track arrays must share the grid shape")
        self.times = t
        self.c_minus_values = cm
        self.c_plus_values = cp
        self.psi0_values = p0
        # constant-coefficient tracks are common and hot (every accepted
        # integrator step refreshes); skip the spline for them
        self._const_pair = None
        if np.all(cm == cm[0]) and np.all(cp == cp[0]):
            self._const_pair = (complex(cm[0]), complex(cp[0]))
        self._cm = self._interpolant(t, cm)
        self._cp = self._interpolant(t, cp)
        self._p0 = self._interpolant(t, p0)
        self._interval_bounds: dict[int, float] = {}

    @staticmethod
    def _interpolant(t, y):
        if len(t) == 1:
            value = complex(y[0])
            return lambda s: value
        from scipy.interpolate import CubicSpline

        kind = "not-a-knot" if len(t) >= 4 else "natural"
        return CubicSpline(t, y, bc_type=kind)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def _clamp(self, t: float) -> float:
        return min(max(t, self.t_start), self.t_end)

    @property
    def constant_coefficients(self) -> tuple[complex, complex] | None:
        """(c_minus, c_plus) when the track holds them fixed, else None."""
        return self._const_pair

    def coefficients(self, t: float) -> tuple[complex, complex]:
        if self._const_pair is not None:
            return self._const_pair
        t = self._clamp(t)
        return complex(self._cm(t)), complex(self._cp(t))

    def psi0(self, t: float) -> complex:
        return complex(self._p0(self._clamp(t)))

    def vacuum_weight(self, t: float) -> float:
        return abs(self.psi0(t)) ** 2

    def im_cross(self, t: float) -> float:
        cm, cp = self.coefficients(t)
        return (cm.conjugate() * cp).imag

    def rate_profile(self, times) -> np.ndarray:
        """total_jump_rate evaluated on an array of times; a vanishing
        psi0 under positive flux gives inf at that entry."""
        times = np.clip(np.asarray(times, dtype=float), self.t_start, self.t_end)
        if self._const_pair is not None:
            cm, cp = self._const_pair
            im = np.full(times.shape, (cm.conjugate() * cp).imag)
        else:
            im = (np.conj(self._cm(times)) * self._cp(times)).imag
        weight = np.broadcast_to(
            np.asarray(np.abs(self._p0(times)) ** 2, dtype=float), times.shape
        )
        p = self.params
        out = np.zeros(times.shape)
        pos = im > 0.0
        with np.errstate(divide="ignore"):
            out[pos] = 8.0 * (1.0 + p.q) * p.B * im[pos] / weight[pos]
        return out

    @classmethod
    def constant(
        cls,
        params: PhysParams,
        c_minus: complex,
        c_plus: complex,
        psi0: complex,
        t_start: float,
        t_end: float,
        n: int = 33,
    ) -> "CoefficientTrack":
        t = np.linspace(t_start, t_end, n)
        ones = np.ones(n)
        return cls(params, t, c_minus * ones, c_plus * ones, psi0 * ones)

    @classmethod
    def balanced_constant_flux(
        cls,
        params: PhysParams,
        c_minus: complex,
        c_plus: complex,
        p0_init: float,
        t_start: float,
        t_end: float,
        n: int = 129,
    ) -> "CoefficientTrack":
        """Constant coefficients with |psi0(t)|^2 = p0_init - 4 pi C_r (t -
        t_start): the unique balanced vacuum weight for a constant flux.
        The weight must stay in [0, 1] over the window."""
        c_r = current_coeffs(params, c_minus, c_plus).C_r
        t = np.linspace(t_start, t_end, n)
        weight = p0_init - 4.0 * math.pi * c_r * (t - t_start)
        if np.any(weight < 0.0) or np.any(weight > 1.0):
            raise DomainError(
                "balanced vacuum weight leaves [0, 1] on this window; "
                "shorten the window or change p0_init"
            )
        ones = np.ones(n)
        return cls(params, t, c_minus * ones, c_plus * ones, np.sqrt(weight))


# =====================================================================
# configurations and paths
# =====================================================================

@dataclass(frozen=True)
class Vacuum:
    """The empty configuration."""


@dataclass(frozen=True)
class Particle:
    """A single particle at a nonzero position."""

    position: tuple[float, float, float]

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if pos == (0.0, 0.0, 0.0):
            raise DomainError("particle position must be nonzero")
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class VacuumInterval:
    t_start: float
    t_end: float


@dataclass(frozen=True)
class EmissionEvent:
    t0: float
    theta0: float
    phi0: float


@dataclass(frozen=True)
class AbsorptionEvent:
    t0: float


@dataclass
class ProcessPath:
    """One realization: alternating vacuum intervals and flight segments,
    with the jump events in time order.  vacuum_spans are the closed
    intervals during which the configuration is the vacuum (at a jump
    time itself the configuration is the vacuum, on both jump kinds)."""

    t_span: tuple[float, float]
    entries: tuple
    events: tuple
    vacuum_spans: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        last_kind = None
        for entry in self.entries:
            kind = isinstance(entry, VacuumInterval)
            if last_kind is not None and kind == last_kind:
                raise ValueError("entries must alternate vacuum and flight")
            last_kind = kind
        times = [
            e.t0 for e in self.events
        ]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("events must be time-ordered")

    def in_vacuum(self, t: float) -> bool:
        return any(a <= t <= b for a, b in self.vacuum_spans)

    def occupancy(self, times) -> np.ndarray:
        """Boolean array: configuration is the vacuum at each time."""
        times = np.asarray(times, dtype=float)
        out = np.zeros(times.shape, dtype=bool)
        for a, b in self.vacuum_spans:
            out |= (times >= a) & (times <= b)
        return out

    @property
    def emissions(self) -> tuple[EmissionEvent, ...]:
        return tuple(e for e in self.events if isinstance(e, EmissionEvent))

    @property
    def absorptions(self) -> tuple[AbsorptionEvent, ...]:
        return tuple(e for e in self.events if isinstance(e, AbsorptionEvent))

    @property
    def segments(self) -> tuple[TrajectorySegment, ...]:
        return tuple(e for e in self.entries if isinstance(e, TrajectorySegment))


# =====================================================================
# the rate law
# =====================================================================

def jump_rate_density(track: CoefficientTrack, t0: float, theta0: float) -> float:
    """Emission rate per (d theta0 d phi0) at time t0; independent of phi0."""
    p = track.params
    im = track.im_cross(t0)
    if im <= 0.0:
        return 0.0
    weight = track.vacuum_weight(t0)
    if weight == 0.0:
        raise VacuumEmpty(f"psi0({t0!r}) = 0 with positive emission flux")
    return (
        2.0 * (1.0 + p.q) * p.B / math.pi * im * math.sin(theta0) / weight
    )


def total_jump_rate(track: CoefficientTrack, t0: float) -> float:
    """Total rate of leaving the vacuum at t0 (the (theta0, phi0) integral
    of jump_rate_density; equals 4 pi C_r/|psi0|^2 when C_r > 0)."""
    p = track.params
    im = track.im_cross(t0)
    if im <= 0.0:
        return 0.0
    weight = track.vacuum_weight(t0)
    if weight == 0.0:
        raise VacuumEmpty(f"psi0({t0!r}) = 0 with positive emission flux")
    return 8.0 * (1.0 + p.q) * p.B * im / weight


# =====================================================================
# sampling
# =====================================================================

def sample_waiting_time(
    track: CoefficientTrack, t_start: float, rng: np.random.Generator
) -> float | None:
    """First-event time of the inhomogeneous Poisson process with
    intensity total_jump_rate, from t_start; None if the track ends
    first.  Thinning against a per-grid-interval sampled majorant."""
    if t_start >= track.t_end or len(track.times) < 2:
        return None
    grid = track.times
    start_idx = int(np.searchsorted(grid, t_start, side="right")) - 1
    start_idx = max(start_idx, 0)
    for i in range(start_idx, len(grid) - 1):
        a = max(float(grid[i]), t_start)
        b = float(grid[i + 1])
        if b <= a:
            continue
        bound = track._interval_bounds.get(i)
        if bound is None:
            probes = np.linspace(float(grid[i]), b, _MAJORANT_PROBES)
            bound = float(np.max(track.rate_profile(probes)))
            track._interval_bounds[i] = bound
        if not math.isfinite(bound):
            raise MajorantError(
                f"rate unbounded on [{a!r}, {b!r}]: psi0 vanishes"
            )
        if bound > _MAJORANT_CAP:
            raise MajorantError(
                f"rate majorant {bound!r} on [{a!r}, {b!r}] treated as unbounded"
            )
        if bound == 0.0:
            continue
        majorant = MAJORANT_MARGIN * bound
        t = a
        while True:
            t += rng.exponential(1.0 / majorant)
            if t > b:
                break
            rate = total_jump_rate(track, t)
            if rate > majorant:
                raise MajorantError(
                    f"rate {rate!r} exceeds majorant {majorant!r} at t = {t!r}"
                )
            if rng.random() * majorant < rate:
                return float(t)
    return None


def sample_emission_angles(rng: np.random.Generator) -> tuple[float, float]:
    """(theta0, phi0) uniform over the sphere: density sin(theta0)/(4 pi).

    theta0 = arccos(1 - 2u), phi0 = 2 pi v; the cosine is nudged off
    +-1 so the labels never sit exactly on the coordinate poles.
    """
    u = rng.random()
    v = rng.random()
    c = min(max(1.0 - 2.0 * u, -1.0 + 1e-15), 1.0 - 1e-15)
    return math.acos(c), 2.0 * math.pi * v


# =====================================================================
# the path state machine
# =====================================================================

def _to_spherical_config(position) -> tuple[float, float, float]:
    from .spinor_basis import to_spherical

    return to_spherical(np.asarray(position, dtype=float))


def simulate_path(
    model_family: ModelFamily,
    track: CoefficientTrack,
    q_init: Vacuum | Particle,
    t_span: tuple[float, float],
    r_min: float | None = None,
    rng: np.random.Generator | None = None,
    *,
    tol: float = 1e-8,
    probe_radii: tuple[float, ...] = (),
) -> ProcessPath:
    """One realization of the process on t_span.

    In flight the coefficients are re-read from the track at every
    accepted integrator step (quasi-static update) unless the family is
    frozen, in which case each segment keeps the coefficients of its
    start time.  Identical (inputs, rng state) give identical paths.
    """
    if rng is None:
        rng = np.random.default_rng()
    t_a, t_b = float(t_span[0]), float(t_span[1])
    if not (track.t_start <= t_a and t_b <= track.t_end):
        raise DomainError("track does not cover the requested time span")
    if not t_b > t_a:
        raise DomainError("empty time span")
    if r_min is None:
        r_min = R_MIN_FRACTION * model_family.r_cut

    entries: list = []
    events: list = []
    vac: list[tuple[float, float]] = []

    def refresh_for(t_at: float):
        if model_family.frozen:
            frozen_pair = track.coefficients(t_at)
            return lambda _t: frozen_pair
        return track.coefficients

    t = t_a
    config: Vacuum | Particle = q_init

    if isinstance(config, Particle):
        r0, th0, ph0 = _to_spherical_config(config.position)
        if not (r_min < r0 < 0.5 * model_family.r_cut):
            raise DomainError(
                f"initial particle radius {r0!r} outside ({r_min!r}, "
                f"{0.5 * model_family.r_cut!r})"
            )

    while t < t_b:
        if isinstance(config, Vacuum):
            t_jump = sample_waiting_time(track, t, rng)
            if t_jump is None or t_jump >= t_b:
                vac.append((t, t_b))
                entries.append(VacuumInterval(t, t_b))
                t = t_b
                break
            theta0, phi0 = sample_emission_angles(rng)
            vac.append((t, t_jump))
            entries.append(VacuumInterval(t, t_jump))
            events.append(EmissionEvent(t_jump, theta0, phi0))
            cm, cp = track.coefficients(t_jump)
            model = model_family.at(cm, cp)
            t_seed = t_jump + time_from_radius(
                track.params, cm, cp, R_SEED_FACTOR * r_min
            )
            if t_seed >= t_b:
                # emitted just before the window closes: the particle is
                # still inside the seed radius at t_b, no flight recorded
                t = t_b
                break
            segment = emit_trajectory(
                model,
                t_jump,
                theta0,
                phi0,
                R_SEED_FACTOR * r_min,
                tol,
                t_end=t_b,
                r_min=r_min,
                probe_radii=probe_radii,
                refresh=refresh_for(t_jump),
            )
        else:
            r0, th0, ph0 = _to_spherical_config(config.position)
            cm, cp = track.coefficients(t)
            model = model_family.at(cm, cp)
            segment = integrate(
                model,
                SphericalState(t, r0, th0, ph0),
                t_b,
                tol,
                r_min,
                probe_radii=probe_radii,
                refresh=refresh_for(t),
            )
        entries.append(segment)
        if isinstance(segment.terminal, Absorbed) and segment.terminal.t0 < t_b:
            t0 = segment.terminal.t0
            events.append(AbsorptionEvent(t0))
            config = Vacuum()
            t = t0
        else:
            # LeftInnerRegion: parked as a particle outside the modeled
            # region; TimeExhausted (or absorption completing past t_b):
            # window over while in flight.
            t = t_b
            break

    return ProcessPath(
        t_span=(t_a, t_b),
        entries=tuple(entries),
        events=tuple(events),
        vacuum_spans=tuple(vac),
    )


# =====================================================================
# balance validation
# =====================================================================

@dataclass(frozen=True)
class BalanceReport:
    max_residual: float
    scale: float
    tol: float
    worst_times: tuple[float, ...]
    passed: bool

    @property
    def relative_residual(self) -> float:
        return self.max_residual / self.scale


def validate_balance(
    track: CoefficientTrack, balance_tol: float = BALANCE_TOL
) -> BalanceReport:
    """Check d|psi0|^2/dt = -4 pi C_r(t) on the track grid (second-order
    finite differences).  Returns the report on success; raises
    BalanceViolation carrying the report otherwise."""
    t = track.times
    if len(t) < 3:
        raise DomainError("balance check needs at least 3 grid times")
    weight = np.abs(track.psi0_values) ** 2
    lhs = np.gradient(weight, t, edge_order=2)
    rhs = np.array(
        [
            -4.0 * math.pi * current_coeffs(track.params, cm, cp).C_r
            for cm, cp in zip(track.c_minus_values, track.c_plus_values)
        ]
    )
    resid = np.abs(lhs - rhs)
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), 1e-300)
    worst = tuple(float(t[i]) for i in np.argsort(resid)[::-1][:3])
    report = BalanceReport(
        max_residual=float(np.max(resid)),
        scale=scale,
        tol=balance_tol,
        worst_times=worst,
        passed=bool(np.max(resid) <= balance_tol * scale),
    )
    if not report.passed:
        raise BalanceViolation(
            f"balance residual {report.relative_residual:.3e} exceeds "
            f"{balance_tol:.1e}; worst at t = {worst}",
            report=report,
        )
    return report
