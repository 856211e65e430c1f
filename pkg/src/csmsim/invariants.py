"""Global isolation invariants checked after every step and explored state.

The checklist, referenced as I1..I7 throughout traces and reports:

I1 Disjointness: a data granule is mapped by at most one realm unless
   matching provider/consumer policy records cover the sharing.
I2 View consistency: an attached window maps exactly the provider's
   physical granules, offset for offset, at the shared permission.
I3 Host exclusion: no recorded access ever succeeded against the
   hardware access-control rule (checked against an independent copy).
I4 Flush pairing: every translation-entry invalidation has a TLB flush.
I5 Consent: a realm mapping another realm's granule holds an attached
   consumer entry whose sharing the owner consented to.
I6 Backing: protected mappings target realm-world data granules; the
   unprotected half targets normal-world granules; tag store consistent.
I7 Identifier freshness: realm and region identifiers are unique, below
   their counters, and never resurrected.

The checker recomputes everything from raw state. In particular it carries
its own literal copy of the access-control matrix rather than calling
``gpc_check``, so a corrupted fast path cannot vouch for itself.
"""

from collections import Counter

from .csm import WindowState, find_share
from .granules import GRANULE_SIZE, GranuleState, PasTag

# Independent transcription of the hardware rule (state row, tag column).
_ACCESS_RULE = {
    ("normal", "normal"): True, ("normal", "secure"): False,
    ("normal", "realm"): False, ("normal", "root"): False,
    ("secure", "normal"): True, ("secure", "secure"): True,
    ("secure", "realm"): False, ("secure", "root"): False,
    ("realm", "normal"): True, ("realm", "secure"): False,
    ("realm", "realm"): True, ("realm", "root"): False,
    ("root", "normal"): True, ("root", "secure"): True,
    ("root", "realm"): True, ("root", "root"): True,
}


def _violation(code: str, detail: str) -> dict:
    return {"invariant": code, "detail": detail}


def _consumer_coverage(world, realm, ipa: int, pa: int) -> bool:
    """Is realm's mapping of someone else's granule justified by an attached,
    consented, offset-correct sharing?"""
    if realm.apt is None:
        return False
    c_entry = realm.apt.find_consumer_covering(ipa)
    if c_entry is None or c_entry.state is not WindowState.ATTACHED:
        return False
    p_realm, p_entry, record = find_share(world, c_entry.sharing_id)
    if record is None or not record.attached or record.c_id != realm.realm_id:
        return False
    offset = ipa - c_entry.base
    p_ipa = p_entry.base + offset
    if not p_entry.base <= p_ipa < p_entry.base + p_entry.size * GRANULE_SIZE:
        return False
    src = p_realm.rtt.entries.get(p_ipa)
    return src is not None and src.pa == pa


def check_invariants(world) -> list[dict]:
    out = []
    realms = list(world.realms.values())

    # I1: who maps each granule through protected entries.
    mappers: dict[int, list] = {}
    for realm in realms:
        for ipa, entry in realm.rtt.entries.items():
            if world.protected(realm, ipa):
                mappers.setdefault(entry.pa, []).append((realm, ipa))
    for pa, refs in mappers.items():
        if len(refs) < 2:
            continue
        owner = world.granules[pa].owner
        for realm, ipa in refs:
            if realm.realm_id == owner:
                continue
            if not _consumer_coverage(world, realm, ipa, pa):
                out.append(_violation(
                    "I1", f"granule {pa} mapped by realm {realm.realm_id} at "
                          f"{ipa:#x} without covering policy records"))

    # I2: attached sharings show identical physical sequences.
    for realm in realms:
        if realm.apt is None:
            continue
        for p_entry in [e for e in realm.apt.entries if e.is_provider()]:
            for record in p_entry.shares:
                if not record.attached:
                    continue
                if record.c_id not in world.registry.live:
                    out.append(_violation(
                        "I2", f"sharing {record.sharing_id} attached to dead realm"))
                    continue
                c_realm = world.realm_by_id(record.c_id)
                c_entry = (c_realm.apt.find_by_sharing_id(record.sharing_id)
                           if c_realm.apt else None)
                if c_entry is None or c_entry.state is not WindowState.ATTACHED:
                    out.append(_violation(
                        "I2", f"sharing {record.sharing_id} lacks attached window"))
                    continue
                for k in range(p_entry.size):
                    p_ipa = p_entry.base + k * GRANULE_SIZE
                    c_ipa = c_entry.base + k * GRANULE_SIZE
                    src = realm.rtt.entries.get(p_ipa)
                    dst = c_realm.rtt.entries.get(c_ipa)
                    if (src is None) != (dst is None):
                        out.append(_violation(
                            "I2", f"sharing {record.sharing_id} offset {k}: "
                                  f"one side unmapped"))
                    elif src is not None and src.pa != dst.pa:
                        out.append(_violation(
                            "I2", f"sharing {record.sharing_id} offset {k}: "
                                  f"pa {src.pa} vs {dst.pa}"))
                    elif dst is not None and dst.perm is not record.perm:
                        out.append(_violation(
                            "I2", f"sharing {record.sharing_id} offset {k}: "
                                  f"permission {dst.perm.value}"))

    # I3: recorded accesses never succeeded against the rule.
    for state, pas, kind, allowed in world.history.accesses:
        if allowed and not _ACCESS_RULE[(state, pas)]:
            out.append(_violation(
                "I3", f"{state} {kind} of {pas} granule succeeded"))

    # I4: invalidations and flushes pair up.
    if Counter(world.history.invalidations) != Counter(world.history.flushes):
        out.append(_violation("I4", "unmatched invalidation/flush counts"))

    # I5/I6: every live mapping is justified and correctly backed.
    for realm in realms:
        for ipa, entry in realm.rtt.entries.items():
            gran = world.granules[entry.pa]
            if world.protected(realm, ipa):
                if gran.state is not GranuleState.DATA or gran.pas is not PasTag.REALM:
                    out.append(_violation(
                        "I6", f"realm {realm.realm_id} maps {ipa:#x} to granule "
                              f"{entry.pa} in state {gran.state.value}"))
                    continue
                if gran.owner != realm.realm_id and \
                        not _consumer_coverage(world, realm, ipa, entry.pa):
                    out.append(_violation(
                        "I5", f"realm {realm.realm_id} maps foreign granule "
                              f"{entry.pa} at {ipa:#x} without consent records"))
            else:
                if gran.pas is not PasTag.NORMAL:
                    out.append(_violation(
                        "I6", f"unprotected mapping {ipa:#x} targets "
                              f"{gran.pas.value} granule {entry.pa}"))

    # I6 continued: state/tag implication over the whole granule space.
    for g in world.granules.grans:
        delegated = g.state is not GranuleState.UNDELEGATED
        if delegated and g.pas is not PasTag.REALM:
            out.append(_violation(
                "I6", f"granule {g.index} state {g.state.value} but "
                      f"tag {g.pas.value}"))
        if not delegated and g.pas is not PasTag.NORMAL:
            out.append(_violation(
                "I6", f"undelegated granule {g.index} tagged {g.pas.value}"))

    # I7: identifier uniqueness and freshness.
    live = world.registry.live
    if set(live) & world.registry.tombstones:
        out.append(_violation("I7", "realm id both live and tombstoned"))
    for rid in set(live) | world.registry.tombstones:
        if not 1 <= rid < world.registry.next_id:
            out.append(_violation("I7", f"realm id {rid} outside counter range"))
    for rid, rd in live.items():
        realm = world.realms.get(rd)
        if realm is None or realm.realm_id != rid:
            out.append(_violation("I7", f"registry entry {rid} inconsistent"))
    csm_ids = [e.csm_id for realm in realms if realm.apt
               for e in realm.apt.entries if e.is_provider()]
    if len(csm_ids) != len(set(csm_ids)):
        out.append(_violation("I7", "duplicate region identifiers"))
    for cid in csm_ids:
        if not 1 <= cid < world.next_csm_id:
            out.append(_violation("I7", f"region id {cid} outside counter range"))

    return out
