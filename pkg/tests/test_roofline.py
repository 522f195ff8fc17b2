import pytest

from blrkernels.errors import ConfigError
from blrkernels.formats import Method, WorkloadSpec
from blrkernels.roofline import (
    Bound, HardwareProfile, classify, estimate_runtime, load_profile, model_bytes, model_flops,
    parse_profile, shipped_profiles,
)

# Hand-evaluated at n=1024, i=o=4096, r=1024, b=16, 2-byte elements; frozen.
LLAMA7B_QKVO = {
    "Dense": (34_359_738_368, 50_331_648),
    "LowRank": (17_179_869_184, 37_748_736),
    "Monarch": (17_179_869_184, 167_772_160),
    "Blast": (17_716_740_096, 302_514_176),
}


def llama_spec(method):
    return WorkloadSpec(method, 1024, 4096, 4096, 1 if method == "Dense" else 1024,
                        16 if method in ("Monarch", "Blast") else 1)


@pytest.mark.parametrize("method", list(LLAMA7B_QKVO))
def test_llama7b_frozen_values(method):
    spec = llama_spec(method)
    assert (model_flops(spec), model_bytes(spec)) == LLAMA7B_QKVO[method]


def test_profile_breakpoint_and_pattern():
    prof = load_profile("a40_like")
    assert prof.breakpoint == pytest.approx(215.1, abs=0.05)
    alphas = {m: classify(llama_spec(m), prof).alpha for m in LLAMA7B_QKVO}
    assert alphas == pytest.approx({"Dense": 682.67, "LowRank": 455.11, "Monarch": 102.4,
                                    "Blast": 58.57}, abs=0.01)
    bounds = {m: classify(llama_spec(m), prof).bound for m in LLAMA7B_QKVO}
    assert bounds == {"Dense": Bound.COMPUTE, "LowRank": Bound.COMPUTE,
                      "Monarch": Bound.MEMORY, "Blast": Bound.MEMORY}


def test_boundary_is_compute_bound():
    spec = WorkloadSpec("Dense", 1, 1, 1)        # 2 FLOP / 6 B
    alpha = model_flops(spec) / model_bytes(spec)
    prof = HardwareProfile("edge", alpha * 1e9, 1e9)
    assert classify(spec, prof).bound is Bound.COMPUTE
    assert classify(spec, HardwareProfile("edge", alpha * 1e9 * 1.001, 1e9)).bound is Bound.MEMORY


def test_runtime_estimate_is_roofline_max():
    prof = HardwareProfile("x", 1e12, 1e10)
    spec = llama_spec("Blast")
    est = estimate_runtime(spec, prof)
    assert est == max(model_flops(spec) / 1e12, model_bytes(spec) / 1e10)
    assert classify(spec, prof).est_runtime_s == est
    assert model_bytes(spec, elem_bytes=4) == 2 * model_bytes(spec)


def test_profile_parsing(tmp_path):
    assert {"a40_like", "orin_nano_like"} <= set(shipped_profiles())
    p = tmp_path / "my.profile"
    p.write_text("# test\npeak_flops = 2e12\nmem_bandwidth_bytes_per_s: 1e11\n")
    prof = load_profile(str(p))
    assert (prof.name, prof.peak_flops, prof.mem_bandwidth) == ("my", 2e12, 1e11)
    assert prof.breakpoint == 20.0
    with pytest.raises(ConfigError, match="unknown key"):
        parse_profile("peak_flops = 1\nmem_bandwidth_bytes_per_s = 1\nclock = 3\n")
    with pytest.raises(ConfigError, match="missing"):
        parse_profile("peak_flops = 1\n")
    with pytest.raises(ConfigError):
        parse_profile("peak_flops = -1\nmem_bandwidth_bytes_per_s = 1\n")
    with pytest.raises(ConfigError):
        load_profile("no_such_profile")


def test_method_enum_values():
    assert [m.value for m in Method] == ["Dense", "LowRank", "Monarch", "Blast"]
