import numpy as np
import pytest

from divcurl.decompose import friedrichs_constant
from divcurl.fields import CoefficientField

from conftest import get_mesh


def test_constant_finite_and_positive():
    est = friedrichs_constant(get_mesh("cube:3"))
    assert np.isfinite(est.constant) and est.constant > 0.0
    assert not est.lower_bound_only
    assert est.certificate < 1e-6
    assert est.extremal.shape == (get_mesh("cube:3").nv, 3)


def test_tangential_kind():
    est = friedrichs_constant(get_mesh("cube:3"), kind="tangential")
    assert np.isfinite(est.constant) and est.constant > 0.0


def test_weighted_constant_bounded_by_ellipticity():
    # Scaling the coefficient leaves the normal-kind ratio within the
    # ellipticity bracket of the identity value.
    mesh = get_mesh("cube:3")
    base = friedrichs_constant(mesh).constant
    est = friedrichs_constant(
        mesh, CoefficientField.diagonal(2.0, 2.0, 2.0)).constant
    assert base / 4.0 <= est <= base * 4.0


def test_reduced_form_larger():
    # Dropping the zero-order term can only grow the ratio.
    mesh = get_mesh("torus:1")
    full = friedrichs_constant(mesh, r_form="standard").constant
    red = friedrichs_constant(mesh, r_form="reduced").constant
    assert red >= full - 1e-9


def test_flux_form_smaller_than_reduced():
    # Adding the cut-flux functional to the residual can only shrink it.
    mesh = get_mesh("torus:1")
    red = friedrichs_constant(mesh, r_form="reduced").constant
    flux = friedrichs_constant(mesh, r_form="flux").constant
    assert flux <= red + 1e-9


def test_p_sampling_is_lower_bound():
    mesh = get_mesh("cube:3")
    est = friedrichs_constant(mesh, p=3.0)
    assert est.lower_bound_only
    assert np.isfinite(est.constant) and est.constant > 0.0


def test_deterministic_given_seed():
    mesh = get_mesh("cube:3")
    a = friedrichs_constant(mesh, p=3.0, seed=7).constant
    b = friedrichs_constant(mesh, p=3.0, seed=7).constant
    assert a == b
