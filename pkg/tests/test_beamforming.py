import numpy as np
import pytest

from twl.beamforming import (
    Beamformer,
    SignalConfig,
    SingularBeamsError,
    directional_beams,
    projection,
    region_spot_grid,
    reverse_direction,
    sector_beam_grid,
    snr_db,
)
from twl.geometry import steering
from twl.pose import Pose

DEG = np.pi / 180.0


def test_single_transmit_beam_trace(ura12):
    f = directional_beams(ura12, [(2.0, 1.0)], role="transmit")
    assert f.n_beams == 1
    assert abs(np.sum(np.abs(f.matrix) ** 2) - 1.0) < 1e-12
    np.testing.assert_allclose(f.matrix[:, 0], steering(ura12, 2.0, 1.0).a.conj())


def test_single_receive_beam_is_plain_steering(ura12):
    w = directional_beams(ura12, [(2.0, 1.0)], role="receive")
    np.testing.assert_allclose(w.matrix[:, 0], steering(ura12, 2.0, 1.0).a)


def test_25_beam_trace_constraint(ura12, rng):
    dirs = [(rng.uniform(1.7, 3.0), rng.uniform(-np.pi, np.pi)) for _ in range(25)]
    f = directional_beams(ura12, dirs, role="transmit")
    assert abs(np.sum(np.abs(f.matrix) ** 2) - 1.0) < 1e-12
    # per-column norm 1/sqrt(n_beams)
    np.testing.assert_allclose(np.linalg.norm(f.matrix, axis=0), 0.2, atol=1e-12)


def test_trace_constraint_invariant_under_adding_beams(ura12, rng):
    for n in (1, 4, 9, 16):
        dirs = [(rng.uniform(1.7, 3.0), rng.uniform(-np.pi, np.pi)) for _ in range(n)]
        f = directional_beams(ura12, dirs, role="transmit")
        assert abs(np.sum(np.abs(f.matrix) ** 2) - 1.0) < 1e-12


def test_duplicate_receive_directions_rejected(ura12):
    with pytest.raises(SingularBeamsError):
        directional_beams(ura12, [(2.0, 1.0), (2.0, 1.0)], role="receive")


def test_beamformer_role_validation(ura12):
    with pytest.raises(ValueError):
        Beamformer(matrix=np.ones((4, 2), complex), role="transmit")  # bad trace
    with pytest.raises(ValueError):
        Beamformer(matrix=np.eye(4, 2, dtype=complex), role="other")


def test_sector_grid_is_equispaced():
    grid = sector_beam_grid(
        25, "anchor", (30 * DEG, 150 * DEG), (100 * DEG, 170 * DEG)
    )
    assert len(grid) == 25
    polars = np.degrees(sorted({th for th, _ in grid}))
    azimuths = np.degrees(sorted({ph for _, ph in grid}))
    np.testing.assert_allclose(polars, [100, 117.5, 135, 152.5, 170], atol=1e-9)
    np.testing.assert_allclose(azimuths, [30, 60, 90, 120, 150], atol=1e-9)


def test_sector_grid_single_beam_is_center():
    ((th, ph),) = sector_beam_grid(1, "anchor", (0.4, 0.8), (1.0, 2.0))
    assert abs(th - 1.5) < 1e-12 and abs(ph - 0.6) < 1e-12


def test_sector_grid_rejects_non_square():
    with pytest.raises(ValueError):
        sector_beam_grid(24, "anchor", (0.0, 1.0), (1.0, 2.0))


def test_terminal_grid_is_reversed_anchor_grid():
    anchor = sector_beam_grid(9, "anchor", (30 * DEG, 150 * DEG), (100 * DEG, 170 * DEG))
    pose = Pose(np.array([0.0, 25.0, -10.0]), 0.5, 0.2)
    terminal = sector_beam_grid(9, pose, (30 * DEG, 150 * DEG), (100 * DEG, 170 * DEG))
    for (th_a, ph_a), (th_t, ph_t) in zip(anchor, terminal):
        assert abs(th_t - (np.pi - th_a)) < 1e-12
        diff = (ph_t - ph_a - np.pi) % (2 * np.pi)
        assert min(diff, 2 * np.pi - diff) < 1e-12


def test_region_spot_grid_covers_region():
    vertices = np.array(
        [[0.0, 0.0, -10.0], [25 * np.sqrt(3), 25, -10], [0, 50, -10], [-25 * np.sqrt(3), 25, -10]]
    )
    dirs = region_spot_grid(vertices, 25)
    assert len(dirs) == 25
    # all spots are below the anchor: polar angles past 90 degrees
    assert all(th > np.pi / 2 for th, _ in dirs)
    with pytest.raises(ValueError):
        region_spot_grid(vertices, 24)


def test_reverse_direction_wraps():
    th, ph = reverse_direction(0.3, 3.0)
    assert abs(th - (np.pi - 0.3)) < 1e-15
    assert -np.pi < ph <= np.pi


def test_projection_orthonormal_columns(ura12):
    w = np.linalg.qr(np.random.default_rng(1).standard_normal((144, 6))
                     + 1j * np.random.default_rng(2).standard_normal((144, 6)))[0]
    np.testing.assert_allclose(projection(w), w @ w.conj().T, atol=1e-12)


def test_projection_single_vector():
    w = np.array([1.0 + 1j, 2.0, -1j])
    expected = np.outer(w, w.conj()) / np.linalg.norm(w) ** 2
    np.testing.assert_allclose(projection(w), expected, atol=1e-14)


def test_projection_idempotent_hermitian(ura12, rng):
    dirs = [(rng.uniform(1.7, 3.0), rng.uniform(-np.pi, np.pi)) for _ in range(12)]
    p = projection(directional_beams(ura12, dirs, role="receive"))
    np.testing.assert_allclose(p, p.conj().T, atol=1e-12)
    assert np.linalg.norm(p @ p - p) <= 1e-10


def test_projection_fixes_span_annihilates_complement(ura12, rng):
    dirs = [(rng.uniform(1.7, 3.0), rng.uniform(-np.pi, np.pi)) for _ in range(8)]
    w = directional_beams(ura12, dirs, role="receive")
    p = projection(w)
    coeffs = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    inside = w.matrix @ coeffs
    np.testing.assert_allclose(p @ inside, inside, atol=1e-10 * np.linalg.norm(inside))
    outside = rng.standard_normal(144) + 1j * rng.standard_normal(144)
    outside = outside - p @ outside
    np.testing.assert_allclose(p @ outside, 0.0, atol=1e-10 * np.linalg.norm(outside))


def test_projection_singular_gram_names_beams(ura12):
    a = steering(ura12, 2.0, 1.0).a
    with pytest.raises(SingularBeamsError, match="beam set of 3"):
        projection(np.column_stack([a, a, steering(ura12, 2.2, 0.5).a]))


def test_snr_constant_matches_reference(default_signal):
    # gamma in dB for 144x144 antennas, 64 pilots: 150.26 dB
    val = snr_db(default_signal, beta=1.0, tx_gain=1.0, rx_gain=1.0, n_tx=144, n_rx=144)
    assert abs(val - 150.26) < 5e-3


def test_snr_beta_doubling_adds_6db(default_signal):
    lo = snr_db(default_signal, 2e-5, 0.1, 0.2, 144, 144)
    hi = snr_db(default_signal, 4e-5, 0.1, 0.2, 144, 144)
    assert abs(hi - lo - 6.0206) < 1e-3


def test_snr_rejects_nonpositive(default_signal):
    with pytest.raises(ValueError):
        snr_db(default_signal, 0.0, 1.0, 1.0, 144, 144)


def test_signal_config_defaults(default_signal):
    assert default_signal.ts == 1.0 / 125e6
    assert abs(default_signal.et - 8e-12) < 1e-24
    assert abs(default_signal.weff2 - 125e6**2 / 3.0) < 1.0
    assert abs(default_signal.wavelength - 7.8893e-3) < 1e-6
    assert default_signal.gamma(144, 144) == pytest.approx(1.0616832e15, rel=1e-6)


def test_signal_config_flat_pulse_alternative():
    sig = SignalConfig.from_link_budget(
        power_w=1e-3, bandwidth=125e6, ns=64, n0=1e-20, carrier=38e9,
        weff_factor=1.0 / 12.0,
    )
    assert abs(sig.weff2 - 125e6**2 / 12.0) < 1.0


def test_signal_config_validation():
    with pytest.raises(ValueError):
        SignalConfig(et=-1, ts=1e-8, ns=4, n0=1e-20, bandwidth=1e8, weff2=1e15, carrier=38e9)
    with pytest.raises(ValueError):
        SignalConfig(et=1e-12, ts=1e-8, ns=0, n0=1e-20, bandwidth=1e8, weff2=1e15, carrier=38e9)
