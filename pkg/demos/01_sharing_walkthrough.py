#!/usr/bin/env python3
"""Walk through the full sharing lifecycle, narrated step by step.

Builds a provider and a consumer realm, exchanges attested identifiers via
their owners, establishes a shared region, and shows the consumer reading
the provider's bytes while the host reads nothing but faults.
"""

from csmsim import attestation
from csmsim.csm import (
    rsi_csm_attach,
    rsi_csm_create,
    rsi_csm_reserve,
    rsi_csm_revoke,
    rsi_csm_share,
)
from csmsim.errors import Fault
from csmsim.granules import SecurityState
from csmsim.harness import execute_step
from csmsim.host import Host, HostPolicy
from csmsim.rmm import World


def scaffold(world, first, image=()):
    rd, apt, rec, rtt = first, first + 1, first + 2, first + 3
    world.granule_delegate(rd)
    rid = world.rmi_realm_create(rd, ipa_width=20)
    for g, op in ((apt, world.rmi_apt_create), (rec, world.rmi_rec_create),
                  (rtt, lambda r, g: world.rmi_rtt_create(r, g, 0))):
        world.granule_delegate(g)
        op(rd, g)
    for gran, ipa, content in image:
        world.granule_delegate(gran)
        world.rmi_data_create(rd, gran, ipa, content)
    world.rmi_realm_activate(rd)
    return rid


def rsi(world, host, caller, op, **args):
    value, result, _ = execute_step(world, host, f"realm:{caller}", op, args)
    return value


def main():
    world = World(granule_count=64, seed=0)
    host = Host(HostPolicy.COOPERATIVE)

    image = [(8, 0x0000, b"inference service v1")]
    provider = scaffold(world, 0, image=image)
    consumer = scaffold(world, 16)
    print(f"provider realm id {provider}, consumer realm id {consumer}")

    # Owners attest each other's realms and release the verified ids.
    token = attestation.rsi_attestation_token(world, consumer)
    expectation = attestation.expected_for_image(world, [], ipa_width=20)
    print("consumer token verdict:",
          attestation.verify_token(token, expectation))
    attestation.owner_release_peer_id(world, provider, token, expectation)

    # Provider creates a 2-granule region; the host populates it on exit.
    csm = rsi(world, host, provider, "rsi_csm_create", base=0x2000, size=2)
    print(f"region id {csm} created and populated")
    world.realm_access(provider, 0x2000, "write", data=b"plaintext, no crypto")

    sid = rsi_csm_share(world, provider, csm, consumer, "rw")
    print(f"sharing id {sid} (deterministic: provider, consumer, counter)")
    rsi(world, host, consumer, "rsi_csm_reserve",
        sharing=list(sid), base=0x5000, size=2)
    rsi_csm_attach(world, consumer, sid)

    got = world.realm_access(consumer, 0x5000, "read", length=20)
    print(f"consumer reads through its own window: {got!r}")

    # The hypervisor sees only faults on that memory.
    pa = world.rmi_rtt_read_entry(world.registry.live[provider], 0x2000)["pa"]
    try:
        world.physical_access(SecurityState.NORMAL, pa, "read", length=16)
    except Fault as err:
        print(f"host probe of granule {pa}: {err}")

    rsi_csm_revoke(world, provider, sid)
    try:
        world.realm_access(consumer, 0x5000, "read", length=4)
    except Fault:
        print("after revocation the consumer faults: access fully withdrawn")


if __name__ == "__main__":
    main()
