"""Seeded (policy, log) instances used by the differential tests and the
benchmarks: the GLBA disclosure clause plus five synthetic clauses that
exercise disjunctive guards, guard existentials, equality binding, nested
quantifiers and repeated variables."""

import random
from dataclasses import dataclass

from .evalkit import GenSpec, gen_log
from .modecheck import arities, is_well_moded, parse_modes
from .policy import GLBA_EXAMPLE, GLBA_MODES, parse_policy

SYNTHETIC_MODES = """\
pred access/4 modes(-,-,-,-) time(4)
pred export/4 modes(-,-,-,-) time(4)
pred role/2 modes(+,-)
pred consent/3 modes(+,+,-) time(3)
pred logged/3 modes(+,+,+) time(3)
pred audited/2 modes(+,+) time(2)
pred purposeOf/2 modes(+,+)
pred approval/3 modes(+,-,-) time(3)
pred reviewer/2 modes(+,-)
pred cleared/2 modes(+,+)
pred selfshare/3 modes(-,-,-) time(3)
pred waiver/2 modes(+,-) time(2)
"""

SYNTHETIC_POLICIES = {
    "consent": """\
forall u,r,pu,t. (access(u, r, pu, t) and role(u, "nurse")
    -> exists t2. (consent(r, pu, t2) and timeOrder(t2, 0, t, 0)))
""",
    "either_channel": """\
forall u,r,pu,t. ((access(u, r, pu, t) or export(u, r, pu, t)) and role(u, "doctor")
    -> logged(u, r, t))
""",
    "hidden_record": """\
forall u,t,v. (exists r,pu. (access(u, r, pu, t)) and v = u -> audited(v, t))
""",
    "research_review": """\
forall u,r,pu,t. (access(u, r, pu, t) and purposeOf(pu, "research")
    -> exists a,t3. (approval(r, a, t3) and timeOrder(t3, 0, t, 7)
        and forall w. (reviewer(a, w) -> cleared(w, r))))
""",
    "self_share": """\
forall u,t. (selfshare(u, u, t) and role(u, "admin")
    -> logged(u, u, t) or exists t4. (waiver(u, t4) and timeOrder(t, 0, t4, 30)
        and timeOrder(t4, 0, t, 40)))
""",
}


@dataclass
class Instance:
    name: str
    policy: object
    modes: dict
    delta: frozenset
    log: object
    seed: int


def policies():
    """``{name: (policy, modes)}`` for the six corpus policies."""
    out = {}
    glba_modes = parse_modes(GLBA_MODES)
    out["glba"] = (parse_policy(GLBA_EXAMPLE, arities(glba_modes)), glba_modes)
    syn = parse_modes(SYNTHETIC_MODES)
    for name, text in SYNTHETIC_POLICIES.items():
        out[name] = (parse_policy(text, arities(syn)), syn)
    return out


def instances(count, seed=0, min_actions=100, max_actions=500, reuse=0.3, noise=0.3):
    """``count`` seeded instances cycling through the corpus policies, with
    a random subset of tables marked incomplete in each."""
    rng = random.Random(seed)
    pols = policies()
    names = list(pols)
    for i in range(count):
        name = names[i % len(names)]
        policy, modes = pols[name]
        ok, delta = is_well_moded(policy, modes)
        if not ok:
            raise ValueError(f"corpus policy {name} is not well-moded: {delta}")
        incomplete = frozenset(t for t in modes if rng.random() < 0.4)
        s = rng.randrange(1 << 30)
        spec = GenSpec(policy, modes, rng.randint(min_actions, max_actions),
                       rng.randint(0, 3), s, incomplete, reuse, noise)
        yield Instance(name, policy, modes, delta, gen_log(spec), s)
