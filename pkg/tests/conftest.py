import pytest

from csmsim.harness import execute_step
from csmsim.host import Host, HostPolicy
from csmsim.rmm import World


@pytest.fixture
def world():
    return World(granule_count=64, seed=0)


@pytest.fixture
def coop():
    return Host(HostPolicy.COOPERATIVE)


def build_realm(world, first, image=(), width=20):
    """Scaffold one realm from granules first..first+3 (+ image granules).

    image entries are (granule, ipa, content bytes). Returns the realm id.
    """
    rd, apt, rec, rtt = first, first + 1, first + 2, first + 3
    world.granule_delegate(rd)
    rid = world.rmi_realm_create(rd, ipa_width=width)
    world.granule_delegate(apt)
    world.rmi_apt_create(rd, apt)
    world.granule_delegate(rec)
    world.rmi_rec_create(rd, rec)
    world.granule_delegate(rtt)
    world.rmi_rtt_create(rd, rtt, 0)
    for gran, ipa, content in image:
        world.granule_delegate(gran)
        world.rmi_data_create(rd, gran, ipa, content)
    world.rmi_realm_activate(rd)
    world.take_events()
    return rid


def rsi(world, host, realm_id, op, **args):
    """Run one realm service call with its host round; returns the raw value.

    Raises AssertionError with the error payload if the call failed.
    """
    value, result, _ = execute_step(world, host, f"realm:{realm_id}", op, args)
    if isinstance(result, dict) and "error" in result:
        raise AssertionError(f"{op} failed: {result}")
    return value


def rsi_error(world, host, realm_id, op, **args) -> str:
    """Run one realm service call expected to fail; returns the error code."""
    _, result, _ = execute_step(world, host, f"realm:{realm_id}", op, args)
    assert isinstance(result, dict) and "error" in result, \
        f"{op} unexpectedly succeeded: {result}"
    return result["error"]
