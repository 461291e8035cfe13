import hypothesis
import pytest

hypothesis.settings.register_profile(
    "suite", deadline=None, max_examples=25, derandomize=True
)
hypothesis.settings.load_profile("suite")


@pytest.fixture(scope="session")
def slit_disk():
    from quasicrack.cases import slit_disk_crack, slit_disk_domain

    return slit_disk_domain(), slit_disk_crack()


@pytest.fixture(scope="session")
def benchmark_state():
    """Default-resolution growth benchmark run (64 steps), audited."""
    from quasicrack.cases import growth_benchmark_config
    from quasicrack.cli import _run_from_config

    return _run_from_config(growth_benchmark_config(delta=1.0 / 64.0))


@pytest.fixture(scope="session")
def benchmark_state_refined():
    """One-refinement-level growth benchmark run (64 steps)."""
    from quasicrack.cases import growth_benchmark_config
    from quasicrack.cli import _run_from_config

    return _run_from_config(growth_benchmark_config(delta=1.0 / 64.0, refine=2))
