import json
import pathlib

import pytest
from hypothesis import given, settings, strategies as st

from radbounds.errors import ConfigurationError
from radbounds.model import (
    CoefficientBounds,
    DataNorms,
    ExponentSet,
    GeometryMeasures,
    NormSet,
    ProblemSpec,
    Proposition,
    HYPOTHESES,
    check_regime,
    conjugate,
    derive_exponents,
)

DATA = pathlib.Path(__file__).parent / "data"


def spec_for(n=2, ell=2.0, b_star=1.0, data=None, vol=1.0, gam=4.0, gam_n=0.0,
             symmetric=True, a=1.0, b=1.0):
    co = CoefficientBounds(a, a, b if b_star is None else b_star,
                           b if b_star is None else b_star, ell,
                           linear_b_star=b_star, symmetric=symmetric)
    return ProblemSpec(
        geometry=GeometryMeasures(n=n, vol_omega=vol, surf_gamma=gam, surf_gamma_n=gam_n),
        coefficients=co,
        data=data or DataNorms(NormSet.zero(), NormSet.zero(), NormSet.zero(),
                               NormSet.zero()),
        poincare_override=1.0,
    )


class TestTypes:
    def test_geometry_partition(self):
        g = GeometryMeasures(n=2, vol_omega=1.0, surf_gamma=3.0, surf_gamma_n=1.0)
        assert g.surf_boundary == 4.0
        with pytest.raises(ConfigurationError):
            GeometryMeasures(n=2, vol_omega=1.0, surf_gamma=3.0, surf_gamma_n=1.0,
                             surf_boundary=5.0)
        with pytest.raises(ConfigurationError):
            GeometryMeasures(n=2, vol_omega=1.0, surf_gamma=0.0, surf_gamma_n=4.0)

    def test_conormal_flag(self):
        g = GeometryMeasures(n=2, vol_omega=1.0, surf_gamma=4.0, surf_gamma_n=0.0)
        assert g.conormal

    def test_coefficient_invariants(self):
        with pytest.raises(ConfigurationError):
            CoefficientBounds(2.0, 1.0, 1.0, 1.0, 2.0)
        with pytest.raises(ConfigurationError):
            CoefficientBounds(1.0, 1.0, 1.0, 1.0, 1.5)
        with pytest.raises(ConfigurationError):
            CoefficientBounds(1.0, 1.0, 1.0, 1.0, 3.0, linear_b_star=1.0)
        with pytest.raises(ConfigurationError):
            CoefficientBounds(1.0, 1.0, 1.0, 2.0, 2.0, linear_b_star=1.0)

    def test_normset_zero_semantics(self):
        z = NormSet({2.0: 0.0})
        assert z.is_zero and z.at(7.3) == 0.0 and z.has(100.0)
        ns = NormSet({2.0: 1.5})
        assert not ns.is_zero
        with pytest.raises(ConfigurationError):
            ns.at(3.0)
        with pytest.raises(ConfigurationError):
            NormSet({0.5: 1.0})

    def test_spec_snapshot_roundtrip(self):
        spec = spec_for()
        spec.embedding(1.5, 2.0)
        snap = spec.snapshot()
        spec2 = ProblemSpec.from_snapshot(snap)
        emb1 = spec.embedding(1.5, 2.0)
        emb2 = spec2.embedding(1.5, 2.0)
        assert emb1.s_ql == emb2.s_ql and emb1.k_ql == emb2.k_ql


class TestDeriveExponents:
    def test_hand_values(self):
        ex = derive_exponents(ExponentSet(n=3, p=3.0, r=3.0))
        assert ex.delta == pytest.approx(1.0 / 6.0, abs=1e-12)
        assert ex.Q == pytest.approx(12.0, rel=1e-12)
        ex = derive_exponents(ExponentSet(n=3, p=6.0, r=8.0))
        assert ex.gamma == pytest.approx(0.25, abs=1e-12)
        ex = derive_exponents(ExponentSet(n=3, p=6.0))
        assert ex.chi == pytest.approx(2.0, abs=1e-12)
        ex = derive_exponents(ExponentSet(n=3, s=4.0))
        assert ex.chi2 == pytest.approx(1.5, abs=1e-12)

    def test_regime_flags_not_errors(self):
        ex = derive_exponents(ExponentSet(n=3, p=20.0, r=20.0))
        assert ex.Q is None and "Q" in ex.flags
        ex2 = derive_exponents(ExponentSet(n=2, p=4.0, s=3.0))
        assert ex2.chi is None and "chi" in ex2.flags
        assert ex2.chi2 is None and "chi2" in ex2.flags

    @given(st.integers(min_value=3, max_value=6),
           st.floats(min_value=1.05, max_value=30.0),
           st.floats(min_value=1.05, max_value=30.0),
           st.floats(min_value=1.05, max_value=30.0))
    @settings(max_examples=200, deadline=None)
    def test_idempotent_and_identities(self, n, p, r, s):
        ex = derive_exponents(ExponentSet(n=n, p=p, r=r, s=s))
        again = derive_exponents(ex)
        assert again.delta == ex.delta and again.Q == ex.Q and again.chi == ex.chi
        assert abs(ex.delta - min(0.5 - 1 / p, 0.5 - 1 / r)) <= 1e-14
        assert abs(ex.gamma - min(0.5 - 1 / p, (0.5 - 1 / r) * (n - 1) / n)) <= 1e-14
        if ex.Q is not None:
            assert abs(ex.Q - 2 * (n - 1) / (n - 2 - 2 * (n - 1) * ex.delta)) <= 1e-12 * ex.Q
        assert abs(ex.chi - n * (p - 2) / (p * (n - 2))) <= 1e-13 * max(1, abs(ex.chi))
        assert abs(ex.chi2 - (s - 1) * (n - 1) / (s * (n - 2))) <= 1e-13 * max(1, abs(ex.chi2))


class TestCheckRegime:
    def test_lq_empty_at_n2(self):
        rg = check_regime(spec_for(n=2), Proposition.Lq)
        assert not rg.applicable
        assert "2 < p < 2(n-1) unsatisfiable at n = 2" in rg.violations

    def test_moser_needs_zero_g(self):
        data = DataNorms(NormSet({4.0: 1.0}), NormSet.zero(),
                         NormSet({2.0: 1.0}), NormSet.zero())
        spec = spec_for(n=3, data=data, gam=3.0, gam_n=1.0)
        rg = check_regime(spec, Proposition.Moser)
        assert not rg.applicable
        assert "g = 0 on Gamma_N required" in rg.violations

    def test_lq_applicable_n3(self):
        data = DataNorms(NormSet({3.5: 1.0}), NormSet({3 * 3.5 / 6.5: 0.5}),
                         NormSet({2 * 3.5 / 3: 0.2}), NormSet({3.5: 0.3}))
        spec = spec_for(n=3, data=data)
        rg = check_regime(spec, Proposition.Lq)
        assert rg.applicable, rg.violations
        assert rg.details["p"] == pytest.approx(3.5)

    def test_linear_rn_requires_linear_law(self):
        spec = spec_for(n=2, ell=3.0, b_star=None)
        rg = check_regime(spec, Proposition.LinearRN)
        assert not rg.applicable
        assert any("linear" in v for v in rg.violations)

    def test_linear_rn_with_zero_data_applicable(self):
        rg = check_regime(spec_for(n=2), Proposition.LinearRN)
        assert rg.applicable, rg.violations

    def test_duality_needs_unit_bstar(self):
        spec = spec_for(n=3, b_star=2.0, b=2.0)
        rg = check_regime(spec, Proposition.DualityW1q)
        assert not rg.applicable
        assert "b_* = 1 required" in rg.violations

    def test_l1_needs_symmetry_and_no_fvec(self):
        data = DataNorms(NormSet({2.0: 1.0}), NormSet({2.0: 1.0}),
                         NormSet.zero(), NormSet.zero())
        spec = spec_for(n=2, data=data, symmetric=False)
        rg = check_regime(spec, Proposition.L1Data)
        assert not rg.applicable
        assert "A symmetric required" in rg.violations
        assert "fvec = 0 in Omega required" in rg.violations

    def test_golden_hypothesis_lists(self):
        golden = json.loads((DATA / "regime_hypotheses.json").read_text())
        current = {prop.value: HYPOTHESES[prop] for prop in Proposition}
        assert current == golden


def test_conjugate():
    assert conjugate(2.0) == 2.0
    assert conjugate(4.0) == pytest.approx(4.0 / 3.0)
    with pytest.raises(ValueError):
        conjugate(1.0)
