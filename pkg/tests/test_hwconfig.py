import itertools

import pytest

from pimsyn.errors import InfeasiblePrecisionError, MissingParameterError
from pimsyn.hwconfig import DseDomains, load_hw_params


@pytest.fixture(scope="module")
def hw():
    return load_hw_params()


def test_crossbar_power_endpoints(hw):
    # published range endpoints: 0.3 mW for the smallest, 4.8 mW for the largest
    assert hw.crossbar_power(128, 1) == pytest.approx(0.0003)
    assert hw.crossbar_power(512, 4) == pytest.approx(0.0048)


def test_crossbar_power_monotone_in_size(hw):
    for rr in (1, 2, 4):
        powers = [hw.crossbar_power(s, rr) for s in (128, 256, 512)]
        assert powers == sorted(powers)


def test_unconfigured_crossbar_is_error(hw):
    with pytest.raises(MissingParameterError):
        hw.crossbar_power(1024, 1)
    with pytest.raises(MissingParameterError):
        hw.crossbar_power(128, 3)


def test_adc_resolution_rule(hw):
    assert hw.required_adc_resolution(128, 2, 1) == 8
    assert hw.required_adc_resolution(128, 1, 1) == 7   # clamped up to the table floor
    with pytest.raises(InfeasiblePrecisionError):
        hw.required_adc_resolution(512, 4, 4)           # 15 bits exceeds the table


def test_adc_table_covers_7_to_14(hw):
    assert hw.adc_resolution_range == (7, 14)
    for bits in range(7, 15):
        assert hw.adc_power(bits) > 0
        assert hw.adc_freq(bits) > 0


def test_every_domain_triple_is_resolved_or_rejected(hw):
    domains = DseDomains()
    for xb, rr, rd in itertools.product(domains.xb_sizes, domains.res_rram,
                                        domains.res_dac):
        try:
            bits = hw.required_adc_resolution(xb, rr, rd)
        except InfeasiblePrecisionError:
            continue
        assert 7 <= bits <= 14


def test_domain_validation():
    with pytest.raises(Exception):
        DseDomains(ratio_rram=())
    with pytest.raises(Exception):
        DseDomains(ratio_rram=(0.0, 0.2))


def test_loader_rejects_gappy_adc_table(tmp_path):
    import json

    from pimsyn.errors import ModelValidationError
    from pimsyn.hwconfig import hardware_from_dict
    from importlib import resources

    doc = json.loads(resources.files("pimsyn.data")
                     .joinpath("isaac_like.json").read_text())
    del doc["adc"]["power_w"]["10"]
    with pytest.raises(ModelValidationError):
        hardware_from_dict(doc)
    doc2 = json.loads(resources.files("pimsyn.data")
                      .joinpath("isaac_like.json").read_text())
    doc2["crossbar"]["power_w"]["256"] = -1.0
    with pytest.raises(ModelValidationError):
        hardware_from_dict(doc2)
