"""Canonical built-in scenarios: the cooperative flows and the attack suite.

Each scenario is an ordinary schema-1 document, so any of them can be dumped
to a file, edited, and re-run. They share a fixed layout convention: 64
granules, 20-bit realm address spaces (protected half below 0x80000, one
table granule backs the whole space), and explicitly assigned metadata
granule indices so every expectation value is a known constant.

The attack scenarios end with the attack blocked by the documented error or
fault; running them to exit code 0 is the executable form of the isolation
claims (impersonation, fake regions, out-of-bounds windows, overlapping
reservations, descriptor swaps, host probing, double mapping, starvation).
"""


def _hex(text: str) -> str:
    return text.encode().hex()


def _setup_realm(alias: str, base_granule: int, image=None, ipa_width: int = 20):
    """Steps building one realm: descriptor, policy table, vCPU context,
    table backing, optional measured image, then activation.

    Uses base_granule..base_granule+3 for metadata; image entries are
    (data granule, ipa, hex content).
    """
    rd, apt, rec, rtt = range(base_granule, base_granule + 4)
    steps = [
        {"actor": "host", "op": "granule_delegate", "args": {"granule": rd}},
        {"actor": "host", "op": "rmi_realm_create",
         "args": {"rd": rd, "ipa_width": ipa_width}, "bind": alias},
        {"actor": "host", "op": "granule_delegate", "args": {"granule": apt}},
        {"actor": "host", "op": "rmi_apt_create", "args": {"rd": rd, "granule": apt}},
        {"actor": "host", "op": "granule_delegate", "args": {"granule": rec}},
        {"actor": "host", "op": "rmi_rec_create", "args": {"rd": rd, "granule": rec}},
        {"actor": "host", "op": "granule_delegate", "args": {"granule": rtt}},
        {"actor": "host", "op": "rmi_rtt_create",
         "args": {"rd": rd, "granule": rtt, "ipa": 0}},
    ]
    for gran, ipa, content in image or []:
        steps += [
            {"actor": "host", "op": "granule_delegate", "args": {"granule": gran}},
            {"actor": "host", "op": "rmi_data_create",
             "args": {"rd": rd, "granule": gran, "ipa": ipa, "content": content}},
        ]
    steps.append({"actor": "host", "op": "rmi_realm_activate", "args": {"rd": rd}})
    return steps


def _attest(verifier: str, peer: str, peer_image, token_bind: str,
            exp_bind: str, ipa_width: int = 20):
    """Owner-of-verifier attests the peer realm and releases its identifier."""
    image = [[ipa, content] for _, ipa, content in peer_image or []]
    return [
        {"actor": f"realm:{peer}", "op": "rsi_attestation_token",
         "bind": token_bind},
        {"actor": f"owner:{verifier}", "op": "owner_compute_expectation",
         "args": {"image": image, "ipa_width": ipa_width}, "bind": exp_bind},
        {"actor": f"owner:{verifier}", "op": "verify_token",
         "args": {"token": f"@{token_bind}", "expectation": f"@{exp_bind}"},
         "expect": {"ok": {"valid": True}}},
        {"actor": f"owner:{verifier}", "op": "owner_release_peer_id",
         "args": {"token": f"@{token_bind}", "expectation": f"@{exp_bind}"}},
    ]


_P_IMAGE = [[8, 0x0000, _hex("boot-block/provider.0")],
            [9, 0x1000, _hex("boot-block/provider.1")]]


def _happy_path():
    hello = "hello from provider"
    reply = "ack from consumer"
    steps = _setup_realm("P", 0, image=_P_IMAGE) + _setup_realm("C", 4)
    steps += _attest("P", "C", None, "tok_c", "exp_c")
    steps += _attest("C", "P", _P_IMAGE, "tok_p", "exp_p")
    steps += [
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x2000, "size": 2}, "expect": {"ok": 1}, "bind": "csm"},
        {"actor": "realm:P", "op": "realm_access",
         "args": {"ipa": 0x2000, "kind": "write", "data": _hex(hello)}},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm", "c_id": "@C", "perm": "rw"},
         "expect": {"ok": [1, 2, 0]}, "bind": "sid"},
        {"actor": "realm:C", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid", "base": 0x5000, "size": 2},
         "expect": {"ok": {"reserved": True}}},
        {"actor": "realm:C", "op": "rsi_csm_attach", "args": {"sharing": "@sid"}},
        {"actor": "realm:C", "op": "realm_access",
         "args": {"ipa": 0x5000, "kind": "read", "length": len(hello)},
         "expect": {"ok": _hex(hello)}},
        {"actor": "realm:C", "op": "realm_access",
         "args": {"ipa": 0x6000, "kind": "write", "data": _hex(reply)}},
        {"actor": "realm:P", "op": "realm_access",
         "args": {"ipa": 0x3000, "kind": "read", "length": len(reply)},
         "expect": {"ok": _hex(reply)}},
    ]
    return {"schema": 1, "name": "happy_path", "seed": 0, "granules": 64,
            "policy": "cooperative", "steps": steps}


def _two_consumers():
    note = "bulletin:rev1"
    edit = "bulletin:rev2!"
    steps = (_setup_realm("P", 0) + _setup_realm("C1", 4) +
             _setup_realm("C2", 8))
    steps += [
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x2000, "size": 2}, "expect": {"ok": 1}, "bind": "csm"},
        {"actor": "realm:P", "op": "realm_access",
         "args": {"ipa": 0x2000, "kind": "write", "data": _hex(note)}},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm", "c_id": "@C1", "perm": "rw"},
         "expect": {"ok": [1, 2, 0]}, "bind": "sid1"},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm", "c_id": "@C2", "perm": "ro"},
         "expect": {"ok": [1, 3, 0]}, "bind": "sid2"},
        {"actor": "realm:C1", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid1", "base": 0x5000, "size": 2}},
        {"actor": "realm:C1", "op": "rsi_csm_attach", "args": {"sharing": "@sid1"}},
        {"actor": "realm:C2", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid2", "base": 0x4000, "size": 2}},
        {"actor": "realm:C2", "op": "rsi_csm_attach", "args": {"sharing": "@sid2"}},
        {"actor": "realm:C1", "op": "realm_access",
         "args": {"ipa": 0x5000, "kind": "read", "length": len(note)},
         "expect": {"ok": _hex(note)}},
        {"actor": "realm:C2", "op": "realm_access",
         "args": {"ipa": 0x4000, "kind": "read", "length": len(note)},
         "expect": {"ok": _hex(note)}},
        # Read-only consumers cannot write through their window.
        {"actor": "realm:C2", "op": "realm_access",
         "args": {"ipa": 0x4000, "kind": "write", "data": _hex("x")},
         "expect": "fault"},
        # A read-write consumer's edit is visible to everyone instantly.
        {"actor": "realm:C1", "op": "realm_access",
         "args": {"ipa": 0x5000, "kind": "write", "data": _hex(edit)}},
        {"actor": "realm:P", "op": "realm_access",
         "args": {"ipa": 0x2000, "kind": "read", "length": len(edit)},
         "expect": {"ok": _hex(edit)}},
        {"actor": "realm:C2", "op": "realm_access",
         "args": {"ipa": 0x4000, "kind": "read", "length": len(edit)},
         "expect": {"ok": _hex(edit)}},
        # Revocation cuts off C1 alone; destruction cuts off C2 as well.
        {"actor": "realm:P", "op": "rsi_csm_revoke", "args": {"sharing": "@sid1"}},
        {"actor": "realm:C1", "op": "realm_access",
         "args": {"ipa": 0x5000, "kind": "read", "length": 4}, "expect": "fault"},
        {"actor": "realm:C2", "op": "realm_access",
         "args": {"ipa": 0x4000, "kind": "read", "length": len(edit)},
         "expect": {"ok": _hex(edit)}},
        {"actor": "realm:P", "op": "rsi_csm_destroy", "args": {"csm": "@csm"}},
        {"actor": "realm:C2", "op": "realm_access",
         "args": {"ipa": 0x4000, "kind": "read", "length": 4}, "expect": "fault"},
        # The provider keeps its (now private) data.
        {"actor": "realm:P", "op": "realm_access",
         "args": {"ipa": 0x2000, "kind": "read", "length": len(edit)},
         "expect": {"ok": _hex(edit)}},
    ]
    return {"schema": 1, "name": "two_consumers", "seed": 0, "granules": 64,
            "policy": "cooperative", "steps": steps}


_MODEL_BLOCKS = [_hex(f"weights-block-{k}!") for k in range(4)]


def _model_image(first_granule: int):
    return [[first_granule + k, k * 0x1000, _MODEL_BLOCKS[k]] for k in range(4)]


def _dedup_accounting():
    """Three services needing the same 4-granule model: first each with a
    private copy (12 data granules), then one provider sharing it (4)."""
    steps = []
    for i, alias in enumerate(["A1", "A2", "A3"]):
        steps += _setup_realm(alias, i * 4, image=_model_image(12 + i * 4))
    steps.append({"actor": "host", "op": "world_stats",
                  "expect": {"ok": {"granules": {"data": 12}}}})
    for i in range(3):
        steps.append({"actor": "host", "op": "rmi_realm_destroy",
                      "args": {"rd": i * 4}})
    steps.append({"actor": "host", "op": "world_stats",
                  "expect": {"ok": {"granules": {"data": 0}}}})
    steps += _setup_realm("P", 24, image=_model_image(28))
    steps += _setup_realm("C1", 32) + _setup_realm("C2", 36)
    steps += [
        {"actor": "host", "op": "world_stats",
         "expect": {"ok": {"granules": {"data": 4}}}},
        # The region covers the already-populated model; granules and their
        # contents are retained, nothing is freshly delegated.
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x0, "size": 4}, "expect": {"ok": 1}, "bind": "csm"},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm", "c_id": "@C1", "perm": "ro"}, "bind": "sid1"},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm", "c_id": "@C2", "perm": "ro"}, "bind": "sid2"},
        {"actor": "realm:C1", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid1", "base": 0x10000, "size": 4}},
        {"actor": "realm:C1", "op": "rsi_csm_attach", "args": {"sharing": "@sid1"}},
        {"actor": "realm:C2", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid2", "base": 0x10000, "size": 4}},
        {"actor": "realm:C2", "op": "rsi_csm_attach", "args": {"sharing": "@sid2"}},
        {"actor": "realm:C1", "op": "realm_access",
         "args": {"ipa": 0x10000, "kind": "read", "length": 16},
         "expect": {"ok": _MODEL_BLOCKS[0]}},
        {"actor": "realm:C2", "op": "realm_access",
         "args": {"ipa": 0x13000, "kind": "read", "length": 16},
         "expect": {"ok": _MODEL_BLOCKS[3]}},
        # Provider plus two consumers, still only the 4 shared data granules.
        {"actor": "host", "op": "world_stats",
         "expect": {"ok": {"granules": {"data": 4}}}},
    ]
    return {"schema": 1, "name": "dedup_accounting", "seed": 0, "granules": 64,
            "policy": "cooperative", "steps": steps}


def _attack_impersonation():
    """A realm with the wrong image can neither pass attestation nor use a
    sharing that names somebody else."""
    mal_image = [[16, 0x0000, _hex("evil-payload.bin")]]
    steps = _setup_realm("P", 0, image=_P_IMAGE) + _setup_realm("C", 4)
    steps += _setup_realm("M", 12, image=mal_image)
    steps += _attest("P", "C", None, "tok_c", "exp_c")
    steps += [
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x2000, "size": 1}, "expect": {"ok": 1}, "bind": "csm"},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm", "c_id": "@C", "perm": "rw"},
         "expect": {"ok": [1, 2, 0]}, "bind": "sid"},
        # The impostor's token does not match the expected measurement.
        {"actor": "realm:M", "op": "rsi_attestation_token", "bind": "tok_m"},
        {"actor": "owner:P", "op": "verify_token",
         "args": {"token": "@tok_m", "expectation": "@exp_c"},
         "expect": {"ok": {"valid": False}}},
        {"actor": "owner:P", "op": "owner_release_peer_id",
         "args": {"token": "@tok_m", "expectation": "@exp_c"},
         "expect": {"error": "VerificationFailed"}},
        # Nor can it hijack the legitimate sharing directly.
        {"actor": "realm:M", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid", "base": 0x4000, "size": 1},
         "expect": {"error": "WrongConsumer"}},
        {"actor": "realm:M", "op": "rsi_csm_attach", "args": {"sharing": "@sid"},
         "expect": {"error": "NotShared"}},
        # Or fabricate a sharing the provider never made.
        {"actor": "realm:M", "op": "rsi_csm_attach",
         "args": {"sharing": [1, 3, 0]}, "expect": {"error": "NotShared"}},
    ]
    return {"schema": 1, "name": "attack_impersonation", "seed": 0,
            "granules": 64, "policy": "cooperative", "steps": steps}


def _attack_fake_csm():
    """A malicious realm offers a bait region; the victim's owner rejects the
    attacker's token, so the victim never reserves or attaches."""
    mal_image = [[16, 0x0000, _hex("bait-region-host")]]
    steps = _setup_realm("P", 0, image=_P_IMAGE) + _setup_realm("C", 4)
    steps += _setup_realm("M", 12, image=mal_image)
    steps += [
        {"actor": "realm:M", "op": "rsi_csm_create",
         "args": {"base": 0x0, "size": 1}, "expect": {"ok": 1}, "bind": "bait"},
        # Sharing to an arbitrary id is legal; consent gates the mapping.
        {"actor": "realm:M", "op": "rsi_csm_share",
         "args": {"csm": "@bait", "c_id": "@C", "perm": "rw"},
         "expect": {"ok": [3, 2, 0]}},
        # C's owner expected the provider image, not the attacker's.
        {"actor": "realm:M", "op": "rsi_attestation_token", "bind": "tok_m"},
        {"actor": "owner:C", "op": "owner_compute_expectation",
         "args": {"image": [[ipa, content] for _, ipa, content in _P_IMAGE],
                  "ipa_width": 20}, "bind": "exp_p"},
        {"actor": "owner:C", "op": "verify_token",
         "args": {"token": "@tok_m", "expectation": "@exp_p"},
         "expect": {"ok": {"valid": False}}},
        {"actor": "owner:C", "op": "owner_release_peer_id",
         "args": {"token": "@tok_m", "expectation": "@exp_p"},
         "expect": {"error": "VerificationFailed"}},
        # The victim never reserved, so nothing is mapped in its space.
        {"actor": "realm:C", "op": "realm_access",
         "args": {"ipa": 0x5000, "kind": "read", "length": 4}, "expect": "fault"},
    ]
    return {"schema": 1, "name": "attack_fake_csm", "seed": 0, "granules": 64,
            "policy": "cooperative", "steps": steps}


def _attack_oob_access():
    """Consumers cannot reach past the window, and cannot negotiate a window
    larger than the provider's region."""
    steps = _setup_realm("P", 0, image=_P_IMAGE) + _setup_realm("C", 4)
    steps += [
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x2000, "size": 1}, "expect": {"ok": 1}, "bind": "csm"},
        # Private provider data right next to the shared region.
        {"actor": "host", "op": "granule_delegate", "args": {"granule": 12}},
        {"actor": "host", "op": "rmi_data_create_unknown",
         "args": {"rd": 0, "granule": 12, "ipa": 0x3000}},
        {"actor": "realm:P", "op": "realm_access",
         "args": {"ipa": 0x3000, "kind": "write", "data": _hex("private-secret")}},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm", "c_id": "@C", "perm": "rw"}, "bind": "sid"},
        {"actor": "realm:C", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid", "base": 0x5000, "size": 1}},
        {"actor": "realm:C", "op": "rsi_csm_attach", "args": {"sharing": "@sid"}},
        {"actor": "realm:C", "op": "realm_access",
         "args": {"ipa": 0x5000, "kind": "read", "length": 4}},
        # One granule past the window: unmapped, faults.
        {"actor": "realm:C", "op": "realm_access",
         "args": {"ipa": 0x6000, "kind": "read", "length": 4}, "expect": "fault"},
        {"actor": "realm:C", "op": "realm_access",
         "args": {"ipa": 0x4000, "kind": "write", "data": _hex("x")},
         "expect": "fault"},
        # An oversized reservation is caught at the attach rendezvous.
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x10000, "size": 2}, "expect": {"ok": 2}, "bind": "csm2"},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm2", "c_id": "@C", "perm": "rw"}, "bind": "sid2"},
        {"actor": "realm:C", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid2", "base": 0x8000, "size": 3}},
        {"actor": "realm:C", "op": "rsi_csm_attach", "args": {"sharing": "@sid2"},
         "expect": {"error": "SizeMismatch"}},
    ]
    return {"schema": 1, "name": "attack_oob_access", "seed": 0, "granules": 64,
            "policy": "cooperative", "steps": steps}


def _attack_overlap_reserve():
    """A consumer cannot lay a second window over an existing one, which
    would re-expose granules without the provider's consent."""
    steps = _setup_realm("P", 0) + _setup_realm("C", 4)
    steps += [
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x2000, "size": 2}, "expect": {"ok": 1}, "bind": "csm1"},
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x8000, "size": 2}, "expect": {"ok": 2}, "bind": "csm2"},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm1", "c_id": "@C", "perm": "rw"}, "bind": "sid1"},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm2", "c_id": "@C", "perm": "rw"}, "bind": "sid2"},
        {"actor": "realm:C", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid1", "base": 0x5000, "size": 2}},
        {"actor": "realm:C", "op": "rsi_csm_attach", "args": {"sharing": "@sid1"}},
        {"actor": "realm:C", "op": "rsi_csm_reserve",
         "args": {"sharing": "@sid2", "base": 0x6000, "size": 2},
         "expect": {"error": "Overlap"}},
    ]
    return {"schema": 1, "name": "attack_overlap_reserve", "seed": 0,
            "granules": 64, "policy": "cooperative", "steps": steps}


def _attack_toctou_rd_swap():
    """The host swaps the consumer realm behind its descriptor granule; the
    stale identifier names a dead realm and every use of it fails."""
    steps = _setup_realm("P", 0, image=_P_IMAGE) + _setup_realm("C", 4)
    steps += _attest("P", "C", None, "tok_c", "exp_c")
    steps += [
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x2000, "size": 1}, "expect": {"ok": 1}, "bind": "csm"},
        {"actor": "host", "op": "adversarial_step", "args": {"rd": 4},
         "expect": {"ok": {"old_id": 2, "new_id": 3}}},
        # The old token still verifies (it was honestly issued), but the
        # identifier it names is tombstoned, so sharing is refused.
        {"actor": "owner:P", "op": "verify_token",
         "args": {"token": "@tok_c", "expectation": "@exp_c"},
         "expect": {"ok": {"valid": True, "realm_id": 2}}},
        {"actor": "realm:P", "op": "rsi_csm_share",
         "args": {"csm": "@csm", "c_id": "@C", "perm": "rw"},
         "expect": {"error": "NoSuchRealm"}},
        {"actor": "host", "op": "registry_lookup", "args": {"id": 2},
         "expect": {"error": "NoSuchRealm"}},
    ]
    return {"schema": 1, "name": "attack_toctou_rd_swap", "seed": 0,
            "granules": 64, "policy": "toctou_swapper", "steps": steps}


def _attack_host_probe():
    """The host scans all of physical memory; every realm-world granule
    faults, every normal-world granule is boring."""
    steps = _setup_realm("P", 0, image=_P_IMAGE)
    steps += [
        {"actor": "realm:P", "op": "realm_access",
         "args": {"ipa": 0x0000, "kind": "write", "data": _hex("top-secret")}},
        # P holds rd, apt, rec, rtt and two data granules: 6 of 64.
        {"actor": "host", "op": "adversarial_step", "args": {},
         "expect": {"ok": {"probed": 64, "normal_reads": 58,
                           "realm_pas_reads": 0, "faults": 6}}},
        {"actor": "host", "op": "physical_access",
         "args": {"granule": 8, "kind": "read", "length": 10}, "expect": "fault"},
        {"actor": "secure", "op": "physical_access",
         "args": {"granule": 8, "kind": "read", "length": 10}, "expect": "fault"},
        # Root world is the one state allowed everywhere.
        {"actor": "root", "op": "physical_access",
         "args": {"granule": 8, "kind": "read", "length": 10},
         "expect": {"ok": _hex("top-secret")}},
    ]
    return {"schema": 1, "name": "attack_host_probe", "seed": 0, "granules": 64,
            "policy": "prober", "steps": steps}


def _attack_double_map():
    """One granule cannot back two realms outside a consented sharing."""
    steps = _setup_realm("A", 0) + _setup_realm("B", 4)
    steps += [
        {"actor": "host", "op": "granule_delegate", "args": {"granule": 12}},
        {"actor": "host", "op": "rmi_data_create_unknown",
         "args": {"rd": 0, "granule": 12, "ipa": 0x4000}},
        {"actor": "host", "op": "adversarial_step",
         "args": {"rd": 4, "ipa": 0x4000},
         "expect": {"ok": {"granule": 12, "result": "AlreadyMapped"}}},
        {"actor": "host", "op": "rmi_data_create_unknown",
         "args": {"rd": 4, "granule": 12, "ipa": 0x5000},
         "expect": {"error": "AlreadyMapped"}},
    ]
    return {"schema": 1, "name": "attack_double_map", "seed": 0, "granules": 64,
            "policy": "double_mapper", "steps": steps}


def _starving_host():
    """A host that never services exits only denies progress; the pending
    call re-emits forever and no isolation property budges."""
    steps = _setup_realm("P", 0)
    steps += [
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x2000, "size": 1}, "expect": "pending"},
        # The suspended vCPU cannot issue further service calls.
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0x8000, "size": 1}, "expect": {"error": "BadState"}},
        # Re-entering without doing the work just re-emits the exit.
        {"actor": "host", "op": "rec_enter", "args": {"rd": 0},
         "expect": "pending"},
        {"actor": "host", "op": "world_stats",
         "expect": {"ok": {"granules": {"data": 0}}}},
    ]
    return {"schema": 1, "name": "starving_host", "seed": 0, "granules": 64,
            "policy": "starve", "steps": steps}


BUILTINS = {
    "happy_path": _happy_path(),
    "two_consumers": _two_consumers(),
    "dedup_accounting": _dedup_accounting(),
    "attack_impersonation": _attack_impersonation(),
    "attack_fake_csm": _attack_fake_csm(),
    "attack_oob_access": _attack_oob_access(),
    "attack_overlap_reserve": _attack_overlap_reserve(),
    "attack_toctou_rd_swap": _attack_toctou_rd_swap(),
    "attack_host_probe": _attack_host_probe(),
    "attack_double_map": _attack_double_map(),
    "starving_host": _starving_host(),
}
