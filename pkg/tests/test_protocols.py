import numpy as np
import pytest

from twl.beamforming import SignalConfig, directional_beams, region_spot_grid, reverse_direction
from twl.fim import angle_efim, channel_fim, delay_info
from twl.geometry import SPEED_OF_LIGHT, make_ura
from twl.pose import Pose, channel_geometry, location_jacobian
from twl.protocols import (
    DelayUnobservableError,
    combined_delay_info,
    assemble,
    invert_efim,
    rlp_beats_owl,
)

LAM = SPEED_OF_LIGHT / 38e9
DIAMOND = np.array(
    [[0.0, 0.0, -10.0], [25 * np.sqrt(3), 25, -10], [0, 50, -10], [-25 * np.sqrt(3), 25, -10]]
)


@pytest.fixture(scope="module")
def reference_link():
    """Default-scale link at p = (0, 25, -10) with region-covering codebooks."""
    sig = SignalConfig.from_link_budget(
        power_w=1e-3, bandwidth=125e6, ns=64, n0=1e-20, carrier=38e9
    )
    bs = make_ura(12, 12, sig.wavelength)
    ue = make_ura(12, 12, sig.wavelength)
    pose = Pose(np.array([0.0, 25.0, -10.0]))
    cg = channel_geometry(pose, sig.wavelength)
    bs_dirs = region_spot_grid(DIAMOND, 25)
    ue_dirs = [reverse_direction(th, ph) for th, ph in bs_dirs]
    f1 = directional_beams(bs, bs_dirs, "transmit")
    w1 = directional_beams(bs, bs_dirs, "receive")
    f2 = directional_beams(ue, ue_dirs, "transmit")
    w2 = directional_beams(ue, ue_dirs, "receive")
    fwd = channel_fim("forward", bs, ue, f1, w2, cg, sig)
    bwd = channel_fim("backward", ue, bs, f2, w1, cg, sig)
    jac = location_jacobian(pose)
    return fwd, bwd, jac


def test_combined_delay_harmonic():
    assert combined_delay_info("rlp", 3.0, 3.0) == pytest.approx(6.0)
    assert combined_delay_info("clp", 3.0, 3.0) == pytest.approx(6.0)


def test_combined_delay_one_sided_limit():
    jb = 2.5
    assert combined_delay_info("rlp", 1e18, jb) == pytest.approx(4 * jb, rel=1e-10)


def test_combined_delay_owl_uses_backward_only():
    assert combined_delay_info("owl", 123.0, 7.0) == 7.0


def test_combined_delay_matches_two_by_two_schur(rng):
    # eliminate the clock bias from the explicit delay/bias FIM and compare
    for _ in range(25):
        jf, jb = rng.uniform(0.1, 10.0, size=2)
        joint = jb * np.array([[1.0, -1.0], [-1.0, 1.0]]) + jf * np.array(
            [[1.0, 1.0], [1.0, 1.0]]
        )
        schur = joint[0, 0] - joint[0, 1] ** 2 / joint[1, 1]
        assert combined_delay_info("clp", jf, jb) == pytest.approx(schur, rel=1e-12)


def test_combined_delay_unobservable():
    with pytest.raises(DelayUnobservableError):
        combined_delay_info("rlp", 0.0, 1.0)
    with pytest.raises(DelayUnobservableError):
        combined_delay_info("clp", 1.0, 0.0)


def test_rlp_beats_owl_cases():
    assert rlp_beats_owl(1.0, 1.0) is True
    assert rlp_beats_owl(1.0, 3.0) is False  # boundary is strict
    assert rlp_beats_owl(1.0, 4.0) is False
    with pytest.raises(ValueError):
        rlp_beats_owl(0.0, 1.0)


def test_identity_efim_bounds():
    _, peb, oeb, ok, rank, cond = invert_efim(np.eye(5))
    assert ok and rank == 5 and cond == 1.0
    assert peb == pytest.approx(np.sqrt(3.0))
    assert oeb == pytest.approx(np.sqrt(2.0))


def test_singular_efim_reports_rank_not_crash():
    efim5 = np.diag([1.0, 1.0, 1.0, 1.0, 0.0])
    cov, peb, oeb, ok, rank, cond = invert_efim(efim5)
    assert not ok and rank == 4
    assert np.isinf(peb) and np.isinf(oeb)


def test_assemble_reference_ordering(reference_link):
    fwd, bwd, jac = reference_link
    owl = assemble("owl", None, bwd, jac)
    rlp = assemble("rlp", fwd, bwd, jac)
    clp = assemble("clp", fwd, bwd, jac)
    assert clp.identifiable and rlp.identifiable and owl.identifiable
    assert clp.peb <= rlp.peb <= owl.peb * (1 + 1e-9)
    assert clp.oeb <= rlp.oeb * (1 + 1e-9)


def test_assemble_bound_consistency(reference_link):
    fwd, bwd, jac = reference_link
    b = assemble("rlp", fwd, bwd, jac)
    np.testing.assert_allclose(b.cov @ b.efim, np.eye(5), atol=1e-8)
    diag = np.diag(b.cov)
    assert b.peb == pytest.approx(np.sqrt(diag[2:].sum()), rel=1e-12)
    assert b.oeb == pytest.approx(np.sqrt(diag[:2].sum()), rel=1e-12)


def test_clp_dominates_rlp_by_forward_spatial_term(reference_link):
    fwd, bwd, jac = reference_link
    rlp = assemble("rlp", fwd, bwd, jac)
    clp = assemble("clp", fwd, bwd, jac)
    gap = clp.efim - rlp.efim
    expected = jac.angles @ angle_efim(fwd).matrix @ jac.angles.T
    np.testing.assert_allclose(gap, expected, rtol=1e-10)
    assert np.linalg.eigvalsh(gap)[0] >= -1e-9 * np.linalg.norm(gap)


def test_rlp_owl_share_spatial_part(reference_link):
    fwd, bwd, jac = reference_link
    rlp = assemble("rlp", fwd, bwd, jac)
    owl = assemble("owl", fwd, bwd, jac)
    dj = combined_delay_info("rlp", delay_info(fwd), delay_info(bwd)) - delay_info(bwd)
    temporal = dj * np.outer(jac.delay, jac.delay)
    np.testing.assert_allclose(rlp.efim - temporal, owl.efim, rtol=1e-12)


def test_rlp_beats_owl_iff_bound_improves(reference_link):
    fwd, bwd, jac = reference_link
    better = rlp_beats_owl(delay_info(fwd), delay_info(bwd))
    rlp = assemble("rlp", fwd, bwd, jac)
    owl = assemble("owl", fwd, bwd, jac)
    assert better == (rlp.peb < owl.peb)


def test_clp_initiator_swap_invariance(reference_link):
    fwd, bwd, jac = reference_link
    a = assemble("clp", fwd, bwd, jac)
    b = assemble("clp", bwd, fwd, jac)
    assert a.peb == pytest.approx(b.peb, rel=1e-12)
    assert a.oeb == pytest.approx(b.oeb, rel=1e-12)


def test_rlp_is_not_initiator_symmetric(reference_link):
    fwd, bwd, jac = reference_link
    a = assemble("rlp", fwd, bwd, jac)
    b = assemble("rlp", bwd, fwd, jac)
    assert abs(a.peb - b.peb) > 1e-6 * a.peb


def test_oeb_invariant_to_effective_bandwidth(reference_link):
    # the delay column has zero orientation rows, so the orientation block of
    # the inverse never sees the delay weight
    fwd, bwd, jac = reference_link
    oebs = []
    for scale in (0.01, 1.0, 100.0):
        scaled_f = _scale_delay(fwd, scale)
        scaled_b = _scale_delay(bwd, scale)
        oebs.append(assemble("rlp", scaled_f, scaled_b, jac).oeb)
    assert abs(oebs[0] - oebs[1]) <= 1e-9 * oebs[1]
    assert abs(oebs[2] - oebs[1]) <= 1e-9 * oebs[1]


def _scale_delay(cf, scale):
    from twl.fim import ChannelFim

    jm = cf.matrix.copy()
    jm[6, 6] *= scale
    return ChannelFim(matrix=jm, direction=cf.direction, gamma=cf.gamma)


def test_assemble_requires_forward_for_two_way(reference_link):
    fwd, bwd, jac = reference_link
    with pytest.raises(ValueError):
        assemble("rlp", None, bwd, jac)
    with pytest.raises(ValueError):
        assemble("nope", fwd, bwd, jac)
