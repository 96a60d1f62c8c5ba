"""Jump law, waiting times, the path state machine, balance checking."""

import math

import numpy as np
import pytest

from belljump import (
    BalanceViolation,
    DomainError,
    MajorantError,
    VacuumEmpty,
    canonical_params,
)
from belljump.jump_process import (
    AbsorptionEvent,
    CoefficientTrack,
    EmissionEvent,
    Particle,
    ProcessPath,
    Vacuum,
    VacuumInterval,
    jump_rate_density,
    sample_emission_angles,
    sample_waiting_time,
    simulate_path,
    total_jump_rate,
    validate_balance,
)
from belljump.trajectory import Absorbed, LeftInnerRegion
from belljump.wavefunction import ModelFamily, current_coeffs

P96 = canonical_params(0.96)


def _constant_track(cm=1.0, cp=1j, psi0=1.0, t_end=3.0):
    return CoefficientTrack.constant(P96, cm, cp, psi0, 0.0, t_end)


# ---------------------------------------------------------------------
# the rate law
# ---------------------------------------------------------------------

def test_total_rate_frozen_example():
    tr = _constant_track()
    assert abs(total_jump_rate(tr, 1.0) - 4.3904) < 1e-12
    assert abs(jump_rate_density(tr, 1.0, math.pi / 2) - 0.3493769310753287) < 1e-15


def test_rate_equals_flux_over_weight():
    rng = np.random.default_rng(52)
    for _ in range(20):
        cm = complex(rng.normal(), rng.normal())
        cp = complex(rng.normal(), rng.normal())
        if (cm.conjugate() * cp).imag <= 0.0:
            cm, cp = cp, cm  # flip the cross term positive
            if (cm.conjugate() * cp).imag <= 0.0:
                continue
        w = rng.uniform(0.2, 1.0)
        tr = _constant_track(cm, cp, math.sqrt(w))
        want = 4.0 * math.pi * current_coeffs(P96, cm, cp).C_r / w
        assert abs(total_jump_rate(tr, 0.5) - want) < 1e-12 * want


def test_rate_density_integrates_to_total():
    from scipy.integrate import quad

    tr = _constant_track(0.6 - 0.1j, 0.8j, 0.9)
    polar, _ = quad(lambda th: jump_rate_density(tr, 1.0, th), 0.0, math.pi)
    total = 2.0 * math.pi * polar  # density carries no phi0 dependence
    assert abs(total - total_jump_rate(tr, 1.0)) < 1e-10 * total


def test_rate_zero_when_flux_ingoing():
    tr = _constant_track(cp=-1j)
    assert total_jump_rate(tr, 1.0) == 0.0
    assert jump_rate_density(tr, 1.0, 1.0) == 0.0


def test_vacuum_empty_raises():
    tr = _constant_track(psi0=0.0)
    with pytest.raises(VacuumEmpty):
        total_jump_rate(tr, 1.0)
    with pytest.raises(VacuumEmpty):
        jump_rate_density(tr, 1.0, 1.0)


# ---------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------

def test_waiting_time_exponential_law():
    from scipy import stats as sps

    tr = _constant_track()
    rate = total_jump_rate(tr, 0.0)
    rng = np.random.default_rng(51)
    draws = np.array([sample_waiting_time(tr, 0.0, rng) for _ in range(3000)])
    assert not np.any(np.equal(draws, None))
    draws = draws.astype(float)
    mean_z = (draws.mean() - 1.0 / rate) / (1.0 / rate / math.sqrt(len(draws)))
    assert abs(mean_z) < 4.0
    ks = sps.kstest(draws, sps.expon(scale=1.0 / rate).cdf)
    assert ks.pvalue > 1e-3  # measured 0.067 at this seed


def test_waiting_time_truncations():
    rng = np.random.default_rng(53)
    assert sample_waiting_time(_constant_track(cp=-1j), 0.0, rng) is None
    tr = _constant_track()
    assert sample_waiting_time(tr, 3.0, rng) is None  # at the track end
    # a window much shorter than the mean wait usually returns None
    short = CoefficientTrack.constant(P96, 1.0, 1j, 1.0, 0.0, 1e-6)
    nones = sum(sample_waiting_time(short, 0.0, rng) is None for _ in range(50))
    assert nones >= 45


def test_waiting_time_majorant_guards():
    t = np.linspace(0.0, 1.0, 21)
    ones = np.ones(21)
    rng = np.random.default_rng(54)
    # psi0 vanishing at a grid point under positive flux: unbounded rate
    with pytest.raises(MajorantError):
        sample_waiting_time(CoefficientTrack(P96, t, ones, 1j * ones, t), 0.0, rng)
    # bounded but absurd rates are refused rather than thinned forever
    with pytest.raises(MajorantError):
        sample_waiting_time(
            CoefficientTrack(P96, t, ones, 1j * ones, 1e-8 * ones), 0.0, rng
        )


def test_emission_angles_distribution():
    rng = np.random.default_rng(55)
    n = 20000
    cos_t, phis = [], []
    for _ in range(n):
        theta0, phi0 = sample_emission_angles(rng)
        assert 0.0 < theta0 < math.pi
        assert 0.0 <= phi0 < 2.0 * math.pi
        cos_t.append(math.cos(theta0))
        phis.append(phi0)
    cos_t = np.array(cos_t)
    # cos(theta0) uniform on [-1, 1]: mean 0 (sigma 1/sqrt(3n)), var 1/3
    assert abs(cos_t.mean()) < 4.0 / math.sqrt(3.0 * n)
    assert abs(cos_t.var() - 1.0 / 3.0) < 0.01
    assert abs(np.mean(phis) - math.pi) < 4.0 * math.pi / math.sqrt(3.0 * n)


def test_emission_angles_reproducible():
    a = np.random.Generator(np.random.Philox(key=np.array([7, 3], dtype=np.uint64)))
    b = np.random.Generator(np.random.Philox(key=np.array([7, 3], dtype=np.uint64)))
    for _ in range(10):
        assert sample_emission_angles(a) == sample_emission_angles(b)


# ---------------------------------------------------------------------
# coefficient tracks
# ---------------------------------------------------------------------

def test_track_validation():
    with pytest.raises(DomainError):
        CoefficientTrack(P96, [0.0, 0.0, 1.0], np.ones(3), np.ones(3), np.ones(3))
    with pytest.raises(DomainError):
        CoefficientTrack(P96, [0.0, 1.0], np.ones(3), np.ones(3), np.ones(3))
    with pytest.raises(DomainError):
        CoefficientTrack(P96, [], [], [], [])


def test_constant_track_fast_path():
    tr = _constant_track(0.5, 0.7j, 0.9)
    assert tr.constant_coefficients == (0.5 + 0j, 0.7j)
    assert tr.coefficients(1.234) == (0.5 + 0j, 0.7j)
    assert abs(tr.psi0(2.0) - 0.9) < 1e-14
    assert abs(tr.vacuum_weight(2.0) - 0.81) < 1e-14
    assert abs(tr.im_cross(0.3) - 0.35) < 1e-15
    # clamping beyond the grid
    assert tr.coefficients(99.0) == (0.5 + 0j, 0.7j)


def test_varying_track_interpolates():
    t = np.linspace(0.0, 1.0, 33)
    tr = CoefficientTrack(P96, t, 1.0 + t, 1j * (1.0 + t), np.ones(33))
    assert tr.constant_coefficients is None
    cm, cp = tr.coefficients(0.5)
    assert abs(cm - 1.5) < 1e-10 and abs(cp - 1.5j) < 1e-10


def test_balanced_constant_flux_track():
    tr = CoefficientTrack.balanced_constant_flux(P96, 0.1, 0.1j, 0.7, 0.0, 1.0)
    c_r = current_coeffs(P96, 0.1, 0.1j).C_r
    for t in (0.0, 0.4, 1.0):
        want = 0.7 - 4.0 * math.pi * c_r * t
        assert abs(tr.vacuum_weight(t) - want) < 1e-12
    report = validate_balance(tr)
    assert report.passed and report.relative_residual < 1e-9
    with pytest.raises(DomainError):
        CoefficientTrack.balanced_constant_flux(P96, 1.0, 1j, 0.7, 0.0, 1.0)


def test_balance_violation_for_constant_weight():
    tr = _constant_track()  # constant psi0 under nonzero flux
    with pytest.raises(BalanceViolation) as info:
        validate_balance(tr)
    report = info.value.report
    assert report is not None and not report.passed
    assert report.relative_residual > 0.5


def test_balance_residual_is_second_order():
    # curved but exactly balanced: c_plus = i(1 + 0.3 sin t), weight
    # drains by the closed-form flux integral
    def curved(n):
        t = np.linspace(0.0, 0.1, n)
        im = 1.0 + 0.3 * np.sin(t)
        drain = 8.0 * (1.0 + P96.q) * P96.B * (t + 0.3 * (1.0 - np.cos(t)))
        return CoefficientTrack(P96, t, np.ones(n), 1j * im, np.sqrt(0.9 - drain))

    r51 = validate_balance(curved(51), 1.0).max_residual
    r101 = validate_balance(curved(101), 1.0).max_residual
    assert 3.0 < r51 / r101 < 5.0  # halving h quarters the residual


# ---------------------------------------------------------------------
# the path state machine
# ---------------------------------------------------------------------

def _family():
    return ModelFamily(P96, 1.0)


def _balanced():
    # mass 0.3 in flight, 0.7 vacuum, moderate emission rate
    from belljump.ensemble import normalized_amplitudes

    cm, cp = normalized_amplitudes(P96, 1.0, 1j, 1.0, 0.3)
    return CoefficientTrack.balanced_constant_flux(P96, cm, cp, 0.7, 0.0, 3.0)


def test_simulate_path_deterministic():
    fam, tr = _family(), _balanced()
    paths = [
        simulate_path(
            fam, tr, Vacuum(), (0.0, 3.0), 1e-8,
            np.random.Generator(np.random.Philox(key=np.array([9, 4], dtype=np.uint64))),
            tol=1e-6,
        )
        for _ in range(2)
    ]
    a, b = paths
    assert len(a.entries) == len(b.entries)
    assert a.events == b.events
    assert a.vacuum_spans == b.vacuum_spans


def test_simulate_path_alternation_and_spans():
    fam, tr = _family(), _balanced()
    found_events = False
    for seed in range(12):
        rng = np.random.Generator(
            np.random.Philox(key=np.array([13, seed], dtype=np.uint64))
        )
        path = simulate_path(fam, tr, Vacuum(), (0.0, 3.0), 1e-8, rng, tol=1e-6)
        kinds = [isinstance(e, VacuumInterval) for e in path.entries]
        assert all(a != b for a, b in zip(kinds, kinds[1:]))
        times = [e.t0 for e in path.events]
        assert times == sorted(times)
        for ev in path.events:
            if isinstance(ev, EmissionEvent):
                found_events = True
                assert 0.0 < ev.theta0 < math.pi
                assert 0.0 <= ev.phi0 < 2.0 * math.pi
                assert path.in_vacuum(ev.t0)
        # occupancy flags agree with the recorded spans
        grid = np.linspace(0.0, 3.0, 31)
        occ = path.occupancy(grid)
        for t, flag in zip(grid, occ):
            assert flag == path.in_vacuum(t)
    assert found_events


def test_simulate_path_ingoing_absorbs_then_stays_vacuum():
    fam = _family()
    tr = _constant_track(cp=-1j)  # ingoing: no emissions ever
    pos = (1e-3, 0.0, 1e-4)
    rng = np.random.default_rng(56)
    path = simulate_path(fam, tr, Particle(pos), (0.0, 3.0), 1e-9, rng, tol=1e-8)
    assert len(path.absorptions) == 1
    assert len(path.emissions) == 0
    t0 = path.absorptions[0].t0
    seg = path.segments[0]
    assert isinstance(seg.terminal, Absorbed)
    assert path.vacuum_spans == ((t0, 3.0),)
    assert not path.in_vacuum(0.5 * t0)
    assert path.in_vacuum(2.0)


def test_simulate_path_outgoing_particle_leaves_and_parks():
    fam = _family()
    tr = _constant_track()  # outgoing flux
    rng = np.random.default_rng(57)
    path = simulate_path(fam, tr, Particle((0.01, 0.0, 0.0)), (0.0, 3.0), None, rng)
    assert path.events == ()
    assert len(path.segments) == 1
    assert isinstance(path.segments[0].terminal, LeftInnerRegion)
    assert path.vacuum_spans == ()


def test_simulate_path_guards():
    fam, tr = _family(), _balanced()
    with pytest.raises(DomainError):
        simulate_path(fam, tr, Vacuum(), (0.0, 5.0))  # beyond the track
    with pytest.raises(DomainError):
        simulate_path(fam, tr, Vacuum(), (1.0, 1.0))
    with pytest.raises(DomainError):
        simulate_path(fam, tr, Particle((0.9, 0.0, 0.0)), (0.0, 1.0))
    with pytest.raises(DomainError):
        Particle((0.0, 0.0, 0.0))


def test_process_path_validation():
    with pytest.raises(ValueError):
        ProcessPath(
            t_span=(0.0, 1.0),
            entries=(VacuumInterval(0.0, 0.5), VacuumInterval(0.5, 1.0)),
            events=(),
        )
    with pytest.raises(ValueError):
        ProcessPath(
            t_span=(0.0, 1.0),
            entries=(),
            events=(AbsorptionEvent(0.8), EmissionEvent(0.2, 1.0, 0.0)),
        )
