#!/usr/bin/env python3
"""Straight-line reference for one adapter stream, written from the update
rules alone, plus the generator of the golden fixtures it is compared against.

    python3 crates/core/tests/oracle/sight_oracle.py crates/core/tests/fixtures/oracle

Plain Python floats (IEEE binary64), no numpy, no shared code with the crate.
Inputs are rounded to 6 decimals so both sides parse identical values.
"""

import json
import math
import random
import sys
from pathlib import Path

FLAGS = [
    "surprise_feature_distance",
    "habit_raw",
    "assignment_hard",
    "no_source_anchor",
    "no_surprise",
    "no_geometric_routing",
    "no_habit_prior",
    "no_prototype_update",
]


def norm(v, eps):
    n = math.sqrt(sum(x * x for x in v))
    return [x / (n + eps) for x in v], n


def proj(a, eps):
    s = sum(a)
    if s <= eps:
        return [1.0 / len(a)] * len(a), True
    return [x / s for x in a], False


def softmax(s, tau):
    m = max(s)
    e = [math.exp((x - m) / tau) for x in s]
    t = sum(e)
    return [x / t for x in e]


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def run(case):
    c = case["config"]
    ab = set(c["ablations"])
    eps, beta, tau = c["epsilon"], c["beta"], c["tau"]
    eta_mu, eta_h, omega = c["eta_mu"], c["eta_h"], c["omega_mu"]
    K = len(case["weights"])
    anchors = [norm(w, eps)[0] for w in case["weights"]]
    protos = [list(a) for a in anchors]
    habit = [1.0 / K] * K
    prev = None
    out = []
    for t, rec in enumerate(case["records"]):
        z = norm(rec["feature"], eps)[0]
        if "logits" in rec:
            p = softmax(rec["logits"], 1.0)
        else:
            p = proj(rec["probs"], eps)[0]
        row = {"raw": p}
        if prev is None:
            u = [1.0 / K] * K
            row.update(expected_state=z, expected_state_degenerate=False, discrepancy=0.0, surprise=0.0,
                       routing=u, calibrated_prior=u, temporal_prior=u, refined=list(p), annihilated=False)
            q = list(p)
        else:
            # expected state
            acc = [0.0] * len(z)
            for k in range(K):
                for i in range(len(z)):
                    acc[i] += prev[k] * protos[k][i]
            e, n = norm(acc, eps)
            # surprise
            if "surprise_feature_distance" in ab:
                D = math.sqrt(sum((a - b) ** 2 for a, b in zip(z, e)))
            else:
                D = min(max(1.0 - dot(z, e), 0.0), 2.0)
            lam = c["no_surprise_lambda"] if "no_surprise" in ab else 1.0 - math.exp(-beta * D * D)
            # routing
            if "no_geometric_routing" in ab:
                r = [1.0 / K] * K
            else:
                v = norm([a - b for a, b in zip(z, e)], eps)[0]
                a = [dot(v, norm([m - x for m, x in zip(protos[k], e)], eps)[0]) for k in range(K)]
                r = softmax(a, tau)
            # habit calibration
            if "no_habit_prior" in ab:
                rho = list(r)
            else:
                ht = list(habit) if "habit_raw" in ab else proj([math.sqrt(h + eps) for h in habit], eps)[0]
                rho = proj([x * y for x, y in zip(r, ht)], eps)[0]
            # refinement
            pi = [(1.0 - lam) * qq + lam * rr for qq, rr in zip(prev, rho)]
            q, dead = proj([x * y for x, y in zip(p, pi)], eps)
            row.update(expected_state=e, expected_state_degenerate=n <= eps, discrepancy=D, surprise=lam,
                       routing=r, calibrated_prior=rho, temporal_prior=pi, refined=q, annihilated=dead)
        # habit
        habit = [(1.0 - eta_h) * h + eta_h * x for h, x in zip(habit, q)]
        # prototypes
        if "no_prototype_update" not in ab:
            if "assignment_hard" in ab:
                best = max(range(K), key=lambda k: (q[k], -k))
                w = [1.0 if k == best else 0.0 for k in range(K)]
            else:
                w = q
            om = 0.0 if "no_source_anchor" in ab else omega
            for k in range(K):
                s = eta_mu * w[k]
                bar = norm([(1.0 - s) * m + s * x for m, x in zip(protos[k], z)], eps)[0]
                protos[k] = norm([(1.0 - om) * m + om * a for m, a in zip(bar, anchors[k])], eps)[0]
        if t % 25 == 0 or t == len(case["records"]) - 1:
            row["prototypes"] = [list(m) for m in protos]
        out.append(row)
        prev = q
    return out


def r6(x):
    return round(x, 6)


def random_case(rng, idx, length):
    K = rng.randint(2, 5)
    d = rng.randint(1, 8)
    if idx < len(FLAGS):
        ablations = [FLAGS[idx]]
    elif idx == len(FLAGS):
        ablations = ["no_surprise", "no_geometric_routing", "no_habit_prior"]
    else:
        ablations = [f for f in FLAGS if rng.random() < 0.25]
    config = {
        "beta": r6(rng.uniform(0.3, 4.0)),
        "tau": r6(rng.uniform(0.02, 0.5)),
        "eta_mu": r6(rng.uniform(0.0, 0.2)),
        "eta_h": r6(rng.uniform(0.0, 0.3)),
        "omega_mu": r6(rng.uniform(0.0, 0.2)),
        "epsilon": rng.choice([1e-8, 1e-8, 1e-6]),
        "no_surprise_lambda": rng.choice([1.0, 0.5]),
        "ablations": ablations,
    }
    weights = [[r6(rng.gauss(0, 1)) for _ in range(d)] for _ in range(K)]
    use_probs = rng.random() < 0.3
    gain = rng.uniform(0.5, 4.0)
    records = []
    state = rng.randrange(K)
    last = None
    for _ in range(length):
        if rng.random() < 0.15:
            state = rng.randrange(K)
        if last is not None and rng.random() < 0.1:
            z = list(last)  # exact repeat: zero displacement when belief is settled
        else:
            z = [r6(w + rng.gauss(0, 0.4)) for w in weights[state]]
        last = z
        logits = [r6(gain * dot(w, z)) for w in weights]
        rec = {"feature": z}
        if use_probs:
            p = [r6(x) for x in softmax(logits, 1.0)]
            rec["probs"] = p
        else:
            rec["logits"] = logits
        records.append(rec)
    return {"config": config, "weights": weights, "records": records}


def crafted_cases():
    base = {"beta": 1.0, "tau": 0.05, "eta_mu": 0.005, "eta_h": 0.05, "omega_mu": 0.01,
            "epsilon": 1e-8, "no_surprise_lambda": 1.0, "ablations": []}
    # two classes, planted micro-trace
    micro = {"config": dict(base), "weights": [[1.0, 0.0], [0.0, 1.0]], "records": [
        {"feature": [0.9, 0.1], "logits": [2.7, 0.4]},
        {"feature": [0.2, 0.8], "logits": [0.6, 2.5]},
        {"feature": [0.1, 0.9], "logits": [0.3, 2.8]},
    ]}
    # antipodal prototypes: a balanced belief cancels the expected state
    anti = {"config": dict(base, eta_mu=0.0, omega_mu=0.0), "weights": [[1.0, 0.0], [-1.0, 0.0]], "records": [
        {"feature": [0.0, 1.0], "probs": [0.5, 0.5]},
        {"feature": [0.0, 1.0], "probs": [0.5, 0.5]},
        {"feature": [1.0, 0.0], "probs": [0.5, 0.5]},
    ]}
    # one-hot probabilities flipping under an unchanged feature: the
    # consensus product has no mass
    dead = {"config": dict(base, eta_mu=0.0, omega_mu=0.0), "weights": [[1.0, 0.0], [0.0, 1.0]], "records": [
        {"feature": [1.0, 0.0], "probs": [1.0, 0.0]},
        {"feature": [1.0, 0.0], "probs": [0.0, 1.0]},
        {"feature": [1.0, 0.0], "probs": [0.0, 1.0]},
    ]}
    return [("micro", micro), ("antipodal", anti), ("annihilation", dead)]


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("*.json"):
        old.unlink()
    rng = random.Random(20240917)
    cases = crafted_cases()
    for i in range(50 - len(cases)):
        length = 200 if i % 5 == 0 else rng.randint(1, 60)
        cases.append((f"random_{i:02d}", random_case(rng, i, length)))
    for name, case in cases:
        case["trace"] = run(case)
        with open(out / f"{name}.json", "w") as f:
            json.dump(case, f, separators=(",", ":"))
            f.write("\n")
    print(f"wrote {len(cases)} cases to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/oracle")
