import math
from fractions import Fraction

import pytest

from thinpart.catalog import (
    ANTISYMMETRIC, MIXED, NOT_APPLICABLE, SYMMETRIC, annulus_spectrum_round, as_fraction,
    circle_partition_eigenvalue, courant_sharp_classification, cylinder_spectrum,
    dn_sufficient_condition, mixed_second_eigenvalue, predicted_L3, radial_eigenvalues,
    spectrum_rows, thin_threshold,
)
from thinpart.errors import InvalidArgument

F = Fraction


def test_as_fraction_reads_decimals():
    assert as_fraction(0.2) == F(1, 5)
    assert as_fraction("3/7") == F(3, 7)
    assert as_fraction(2) == 2


def test_thin_strip_spectrum_with_multiplicity():
    spec = cylinder_spectrum(0.2, bc="NN", count=6)
    assert spec.values_over_pi2() == [0, 4, 4, 16, 16, 25]
    assert [e.multiplicity for e in spec] == [1, 2, 2, 1]
    assert tuple(spec[3].modes) == ((0, 1),)


def test_count_never_splits_a_tie():
    spec = cylinder_spectrum(0.2, count=2)
    assert spec.values_over_pi2() == [0, 4, 4]


def test_double_cover_deck_classes():
    spec = cylinder_spectrum(F(3, 10), degree=2, count=7)
    assert spec.values_over_pi2() == [0, 1, 1, 4, 4, 9, 9]
    assert [e.deck_class for e in spec] == [SYMMETRIC, ANTISYMMETRIC, SYMMETRIC, ANTISYMMETRIC]


def test_degree_one_is_not_applicable():
    assert all(e.deck_class == NOT_APPLICABLE for e in cylinder_spectrum(0.3, count=5))


def test_accidental_tie_on_cover_is_mixed():
    # on C(2, 1) the antisymmetric (1, 0) mode meets the symmetric (0, 1) mode
    spec = cylinder_spectrum(1, degree=2, count=4)
    assert spec[1].value_over_pi2 == 1
    assert spec[1].multiplicity == 3
    assert spec[1].deck_class == MIXED


def test_dirichlet_dirichlet_starts_at_n1():
    spec = cylinder_spectrum(0.5, bc="DD", count=1)
    assert spec[0].value_over_pi2 == 4 and tuple(spec[0].modes) == ((0, 1),)


def test_mixed_spectrum_and_second_mixed_value():
    spec = cylinder_spectrum(0.2, bc="DN", count=3)
    assert spec.values_over_pi2()[:3] == [F(25, 4), F(25, 4) + 4, F(25, 4) + 4]
    second = mixed_second_eigenvalue(0.2)
    assert second["separation_of_variables"] == min(F(225, 4), F(25, 4) + 4)
    assert second["quoted_formula"] == min(F(25), F(25, 4) + 4)
    assert "second_mixed_eigenvalue" in spec.meta


def test_mixed_formulas_disagree_for_wide_strips():
    res = mixed_second_eigenvalue(1)
    assert res["separation_of_variables"] == F(9, 4)
    assert res["quoted_formula"] == 1
    assert not res["agree"]


@pytest.mark.parametrize("bad", [dict(b=0), dict(b=-1), dict(b=0.2, degree=3),
                                 dict(b=0.2, bc="NX"), dict(b=0.2, count=0)])
def test_cylinder_spectrum_rejects_bad_input(bad):
    with pytest.raises(InvalidArgument):
        cylinder_spectrum(**bad)


def test_circle_partition_values():
    assert circle_partition_eigenvalue(3)[:2] == (math.pi ** 2 * 9, False)
    assert circle_partition_eigenvalue(4)[1] is True
    assert circle_partition_eigenvalue(1)[2] == "out-of-paper"
    with pytest.raises(InvalidArgument):
        circle_partition_eigenvalue(0)


@pytest.mark.parametrize("b,case,sharp3", [(0.3, 1, False), (0.7, 2, False), (1, 3, True),
                                           (1.5, 4, True), (0.5, None, False)])
def test_courant_classification(b, case, sharp3):
    rep = courant_sharp_classification(b)
    assert rep.case == case
    assert rep.lambda3_sharp is sharp3


def test_thresholds_exact():
    assert thin_threshold(3).bound_squared == F(1, 20)
    assert thin_threshold(5).bound_squared == F(1, 84)
    assert thin_threshold(7).bound_squared == F(1, 132)
    assert thin_threshold(5).surd == "1/sqrt(84)"
    assert thin_threshold(7).admits(0.08) and not thin_threshold(7).admits(0.09)
    assert thin_threshold(3).bound == pytest.approx(1 / (2 * math.sqrt(5)))
    for k in (2, 1, 4):
        with pytest.raises(InvalidArgument):
            thin_threshold(k)


def test_dn_condition():
    assert dn_sufficient_condition(5, 0.1)["holds"]
    assert dn_sufficient_condition(7, 0.08)["holds"]
    res = dn_sufficient_condition(5, 0.3)
    assert not res["holds"] and res["dn_equals_nd"]


def test_predicted_L3_regimes():
    assert predicted_L3(0.2).status == "exact" and predicted_L3(0.2).value_over_pi2 == 9
    assert predicted_L3(2).value_over_pi2 == 1
    p = predicted_L3(0.8)
    assert p.status == "nodal-beatable" and p.value_over_pi2 == F(25, 4) and p.strict
    assert predicted_L3(0.4).status == "unknown"


def test_radial_oracle_thin_limit():
    # a thin round annulus approaches the strip of unit-free width w: pi^2 n^2 / w^2
    w = 0.01
    roots = radial_eigenvalues(0, 1.0, 1.0 + w, "NN", upper=1.5 * (math.pi / w) ** 2)
    assert roots[0] == 0.0
    assert roots[1] == pytest.approx((math.pi / w) ** 2, rel=1e-4)


def test_round_annulus_dirichlet_brackets():
    # v = sqrt(r) u turns the radial problem into -v'' + (nu^2 - 1/4)/r^2 v
    r_in, r_out = 1.0, 1.1
    lam = annulus_spectrum_round(r_in, r_out, "DD", 1)[0].value
    base = (math.pi / 0.1) ** 2
    assert base - 1 / (4 * r_in ** 2) <= lam <= base - 1 / (4 * r_out ** 2)


def test_round_annulus_cover_classes():
    modes = annulus_spectrum_round(1.0, 1.1, "NN", 7, degree=2)
    assert [m.m for m in modes] == [0, 1, 1, 2, 2, 3, 3]
    assert modes[5].deck_class == ANTISYMMETRIC
    assert modes[1].value == pytest.approx(0.226929, rel=1e-5)


def test_spectrum_rows_schema():
    rows = spectrum_rows(cylinder_spectrum(0.2, count=3))
    assert rows[0] == ["index", "value_over_pi2", "value", "m", "n", "multiplicity", "deck_class"]
    assert rows[2][1] == "4/1" and rows[2][3] == "1"
