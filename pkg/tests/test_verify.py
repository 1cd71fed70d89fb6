import pytest

from pairdiff import divergence as dv
from pairdiff import verify
from pairdiff.errors import ConfigError


@pytest.mark.parametrize("prop", verify.REGISTRY, ids=lambda p: p.name)
def test_property_passes(prop):
    ok, detail = prop.check()
    assert ok, detail


def test_groups():
    assert set(verify.GROUPS) == {"divergence", "cuts", "decoder", "thresholds", "montecarlo"}


def test_run_prints_one_line_per_property():
    lines = []
    assert verify.run(["thresholds"], out=lines.append)
    assert len(lines) == sum(p.group == "thresholds" for p in verify.REGISTRY)
    assert all(ln.startswith("PASS thresholds.") for ln in lines)


def test_unknown_name():
    with pytest.raises(ConfigError):
        verify.run(["divergence.nope"])


def test_detects_faulty_hellinger(monkeypatch):
    real = dv.hellinger_alpha

    def skewed(p, q, alpha):
        return real(p, q, alpha) * 1.01

    monkeypatch.setattr(dv, "hellinger_alpha", skewed)
    lines = []
    assert not verify.run(["divergence.renyi_identity", "divergence.sandwich"], out=lines.append)
    assert any(ln.startswith("FAIL") for ln in lines)


def test_crashing_property_is_failure(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(dv, "kl", boom)
    lines = []
    assert not verify.run(["divergence.sandwich"], out=lines.append)
    assert lines == ["FAIL divergence.sandwich: RuntimeError: kaput"]
