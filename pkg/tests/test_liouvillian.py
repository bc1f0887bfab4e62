import numpy as np
import pytest

from rotorlab.liouvillian import (MODES, GeneratorSpec, LeakageError, ShiftOperators, apply_dissipator,
                                  apply_kinetic, apply_potential, coupling_offsets, dissipator_from_operators,
                                  dissipator_matrix, kinetic_matrix, potential_matrix, sparse_superoperator,
                                  spectral_bound, total_generator)
from rotorlab.state import BathParams, DensityMatrix, PotentialSpec, random_state
from rotorlab.wigner import AuxWignerField, coeffs_to_rho, rho_to_coeffs

M = 8


def spec(bath, potential, mode):
    return GeneratorSpec(bath, potential, mode, diffusion=0.9 if mode == "diffusion_only" else None)


@pytest.mark.parametrize("mode", MODES)
def test_matrix_and_aux_generators_agree(bath, tilted, rng, mode):
    g = spec(bath, tilted, mode)
    rho = random_state(M, rng).data
    dm = total_generator(g)(rho.copy())
    da = total_generator(g.with_representation("aux_wigner"))(rho_to_coeffs(rho))
    assert np.abs(coeffs_to_rho(da) - dm).max() < 1e-12 * np.abs(dm).max()


@pytest.mark.parametrize("mode", MODES)
def test_fused_matrix_generator_matches_term_by_term(bath, tilted, rng, mode):
    g = spec(bath, tilted, mode)
    rho = random_state(M, rng).data
    ref = kinetic_matrix(rho, g.hbar, g.inertia) + potential_matrix(rho, tilted, g.hbar) + dissipator_matrix(rho, g)
    np.testing.assert_allclose(total_generator(g)(rho.copy()), ref, atol=1e-13)


@pytest.mark.parametrize("mode", MODES)
def test_fused_aux_generator_matches_reference_terms(bath, tilted, rng, mode):
    g = spec(bath, tilted, mode).with_representation("aux_wigner")
    c = rho_to_coeffs(random_state(M, rng).data)
    ref = (apply_kinetic(c, g.hbar, g.inertia) + apply_potential(c, tilted, g.hbar) + apply_dissipator(c, g))
    np.testing.assert_allclose(total_generator(g)(c.copy()), ref, atol=1e-13)


@pytest.mark.parametrize("mode", MODES)
def test_shift_form_matches_dense_operator_form(bath, rng, mode):
    g = spec(bath, PotentialSpec(), mode)
    rho = random_state(M, rng, margin=2).data
    np.testing.assert_allclose(dissipator_matrix(rho, g), dissipator_from_operators(rho, g), atol=1e-12)


def test_dissipator_is_lindblad_with_two_jump_operators(bath, rng):
    """A_j = sqrt(2D)/hbar e_r,j + i sqrt(D)/(2 sqrt2 T I) e_phi,j p, j = x, y.

    This makes the generator completely positive.  The identity cos^2 + sin^2 = 1
    fails at the basis edge, so only the interior block is compared.
    """
    g = GeneratorSpec(bath, PotentialSpec(), "full")
    rho = random_state(M, rng, margin=3).data
    sh = ShiftOperators(M, bath.hbar)
    c, s, P = sh.cos(), sh.sin(), sh.P
    D, T, inertia = bath.diffusion, bath.temperature, bath.inertia
    a = np.sqrt(2 * D) / bath.hbar
    b = 1j * np.sqrt(D) / (2 * np.sqrt(2) * T * inertia)
    out = np.zeros_like(rho)
    for er, ephi in ((c, -s), (s, c)):
        A = a * er + b * ephi @ P
        out += A @ rho @ A.conj().T - 0.5 * (A.conj().T @ A @ rho + rho @ A.conj().T @ A)
    inner = slice(2, -2)
    np.testing.assert_allclose(out[inner, inner], dissipator_matrix(rho, g)[inner, inner], atol=1e-12)


def test_generator_preserves_trace_and_hermiticity(bath, tilted, rng):
    g = GeneratorSpec(bath, tilted, "full")
    rho = random_state(M, rng, margin=3).data
    d = total_generator(g)(rho.copy())
    assert abs(np.trace(d)) < 1e-13
    assert np.abs(d - d.conj().T).max() < 1e-13


def test_potential_bracket_sign():
    """Only the a sin - b cos bracket reproduces the commutator when b != 0."""
    rho = random_state(M, np.random.default_rng(3)).data
    c = rho_to_coeffs(rho)
    for V, should_differ in ((PotentialSpec(((1, 0.8, 0.0), (2, -0.5, 0.0))), False),
                             (PotentialSpec(((1, 0.8, 0.6),)), True)):
        ref = rho_to_coeffs(potential_matrix(rho, V))
        np.testing.assert_allclose(apply_potential(c, V), ref, atol=1e-13)
        gap = np.abs(apply_potential(c, V, cos_sign=1.0) - ref).max()
        assert (gap > 1e-3) == should_differ


def test_angular_diffusion_diagonal_sign(bath, rng):
    """The W_nu term is -2(nu^2 - d^2/4); writing -2(nu^2 + d^2/4) breaks agreement with the operator form."""
    g = GeneratorSpec(bath, PotentialSpec(), "full")
    rho = random_state(M, rng, margin=2).data
    c = rho_to_coeffs(rho)
    line = rho_to_coeffs(dissipator_from_operators(rho, g) - dissipator_from_operators(rho, g.with_mode("no_angular_diffusion")))
    ours = apply_dissipator(c, g) - apply_dissipator(c, g.with_mode("no_angular_diffusion"))
    np.testing.assert_allclose(ours, line, atol=1e-12)
    _, k = np.meshgrid(np.arange(4 * M + 1), np.arange(-2 * M, 2 * M + 1), indexing="ij")
    pref = bath.hbar ** 2 * bath.gamma / (16 * bath.temperature * bath.inertia)
    flipped = ours + pref * k ** 2 * c   # -(2nu^2 + k^2/2) -> -(2nu^2 - k^2/2)
    assert np.abs(flipped - line).max() > 1e-3


def test_momentum_moment_laws(bath, rng):
    """d<p>/dt = -Gamma <p> exactly; d<p^2>/dt = 2D - (2 - hbar^2/(8 T I)) Gamma <p^2>."""
    g = GeneratorSpec(bath, PotentialSpec(), "full")
    gen = total_generator(g)
    p = bath.hbar * np.arange(-M, M + 1)
    for _ in range(3):
        rho = random_state(M, rng, margin=2).data
        d = np.diag(gen(rho.copy())).real
        pops = np.diag(rho).real
        assert p @ d == pytest.approx(-bath.gamma * (p @ pops), abs=1e-12)
        rate = 2 * bath.gamma - bath.hbar ** 2 * bath.gamma / (8 * bath.temperature * bath.inertia)
        assert (p ** 2) @ d == pytest.approx(2 * bath.diffusion - rate * ((p ** 2) @ pops), abs=1e-12)


def test_sparse_superoperator_matches_generator(bath, tilted, rng):
    g = GeneratorSpec(bath, tilted, "full")
    S = sparse_superoperator(g, 5)
    rho = random_state(5, rng).data
    np.testing.assert_allclose(S @ rho.ravel(), total_generator(g)(rho.copy()).ravel(), atol=1e-13)
    assert (0, 0) in coupling_offsets(g) and (2, 0) in coupling_offsets(g)


def test_spectral_bound_covers_spectrum(bath, tilted):
    for mode in MODES:
        g = spec(bath, tilted, mode)
        ev = np.linalg.eigvals(sparse_superoperator(g, 5).toarray())
        assert np.abs(ev).max() <= spectral_bound(g, 5)


def test_strict_leakage_detection(bath):
    g = GeneratorSpec(bath, PotentialSpec(), "full")
    edge = DensityMatrix.momentum_eigenstate(M, M)
    field = AuxWignerField(M, rho_to_coeffs(edge.data))
    with pytest.raises(LeakageError):
        apply_dissipator(field, g, strict=True)
    with pytest.raises(LeakageError):
        apply_potential(field, PotentialSpec.tilted_double_well(), strict=True)
    out = apply_dissipator(field, g)
    assert isinstance(out, AuxWignerField)
    inner = AuxWignerField(M, rho_to_coeffs(DensityMatrix.momentum_eigenstate(0, M).data))
    apply_dissipator(inner, g, strict=True)
    apply_potential(inner, PotentialSpec.tilted_double_well(), strict=True)


def test_spec_validation(bath):
    with pytest.raises(ValueError):
        GeneratorSpec(bath, mode="bogus")
    with pytest.raises(ValueError):
        GeneratorSpec(bath, representation="bogus")
    with pytest.raises(ValueError):
        GeneratorSpec(bath, mode="diffusion_only")
    with pytest.raises(ValueError):
        GeneratorSpec(bath, diffusion=123.0)
    g = GeneratorSpec(bath, mode="diffusion_only", diffusion=0.4)
    assert g.gamma == 0.0 and g.D == 0.4
