"""Granule-level memory isolation with confidential shared memory, as an
executable model: a world of tagged granules managed by a monitor, realms
that share protected regions under mutual consent, an adversarial host, a
scenario harness, a bounded state explorer, and an inter-realm channel
benchmark.
"""

from .csm import (
    PENDING,
    Permission,
    compose_sharing_id,
    rsi_csm_attach,
    rsi_csm_create,
    rsi_csm_destroy,
    rsi_csm_detach_and_free,
    rsi_csm_reserve,
    rsi_csm_revoke,
    rsi_csm_share,
)
from .attestation import (
    AttestationToken,
    OwnerExpectation,
    owner_release_peer_id,
    rsi_attestation_token,
    verify_token,
)
from .granules import (
    GRANULE_SIZE,
    GranuleState,
    PasTag,
    SecurityState,
    gpc_check,
)
from .harness import (
    RunConfig,
    Scenario,
    builtin_scenarios,
    load_scenario,
    parse_scenario,
    run_scenario,
)
from .host import Host, HostPolicy
from .invariants import check_invariants
from .rmm import Lifecycle, World

__all__ = [
    "AttestationToken", "GranuleState", "GRANULE_SIZE", "Host", "HostPolicy",
    "Lifecycle", "OwnerExpectation", "PasTag", "PENDING", "Permission",
    "RunConfig", "Scenario", "SecurityState", "World", "builtin_scenarios",
    "check_invariants", "compose_sharing_id", "gpc_check", "load_scenario",
    "owner_release_peer_id", "parse_scenario", "rsi_attestation_token",
    "rsi_csm_attach", "rsi_csm_create", "rsi_csm_destroy",
    "rsi_csm_detach_and_free", "rsi_csm_reserve", "rsi_csm_revoke",
    "rsi_csm_share", "run_scenario", "verify_token",
]
