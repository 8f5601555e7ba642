#!/usr/bin/env python3
"""Independent reference solver used to freeze golden values.

Parses the bundled .case files, builds the bus admittance matrix, solves the
AC power flow by Newton-Raphson and the AC OPF with scipy's trust-constr
solver, then writes a golden JSON file consumed by the C++ test suites.

This script shares no code with the C++ implementation. Run once:

    python3 tests/oracle/reference_solver.py data/ieee9.case tests/golden/ieee9.golden.json
    python3 tests/oracle/reference_solver.py data/ieee30.case tests/golden/ieee30.golden.json
"""
import json
import sys

import numpy as np
from scipy.optimize import NonlinearConstraint, minimize


def load_case(path):
    with open(path) as f:
        return json.load(f)


def build_ybus(case):
    n = len(case["buses"])
    idx = {b["id"]: k for k, b in enumerate(case["buses"])}
    Y = np.zeros((n, n), dtype=complex)
    for br in case["branches"]:
        if br["status"] == 0:
            continue
        f, t = idx[br["from"]], idx[br["to"]]
        ys = 1.0 / complex(br["r"], br["x"])
        bc = 0.5j * br["b_ch"]
        Y[f, f] += ys + bc
        Y[t, t] += ys + bc
        Y[f, t] -= ys
        Y[t, f] -= ys
    for b in case["buses"]:
        Y[idx[b["id"]], idx[b["id"]]] += complex(b["gsh"], b["bsh"])
    return Y, idx


def bus_injections(V, Y):
    return V * np.conj(Y @ V)


def dSbus_dV(V, Y):
    I = Y @ V
    diagV = np.diag(V)
    diagI = np.diag(I)
    diagVnorm = np.diag(V / np.abs(V))
    dS_dVa = 1j * diagV @ np.conj(diagI - Y @ diagV)
    dS_dVm = diagVnorm @ np.conj(diagI) + diagV @ np.conj(Y @ diagVnorm)
    return dS_dVa, dS_dVm


def newton_pf(case, Y, idx, pg_mw, vg, tol=1e-10, max_iter=40):
    """pg_mw / vg are per-generator arrays; slack pg entry is ignored."""
    n = len(case["buses"])
    base = case["base_mva"]
    kinds = [b["kind"] for b in case["buses"]]
    slack = kinds.index("slack")
    Sd = np.array([complex(b["pd"], b["qd"]) for b in case["buses"]]) / base

    Pg_bus = np.zeros(n)
    vset = np.ones(n)
    genbus = [idx[g["bus"]] for g in case["generators"]]
    for k, gb in enumerate(genbus):
        vset[gb] = vg[k]
        if gb != slack:
            Pg_bus[gb] += pg_mw[k] / base

    pv = [i for i in range(n) if i in genbus and i != slack]
    pq = [i for i in range(n) if i not in genbus]
    vm = np.array([vset[i] if i in genbus else 1.0 for i in range(n)])
    va = np.zeros(n)

    Psched = Pg_bus - Sd.real
    Qsched = -Sd.imag

    iters = 0
    for it in range(max_iter):
        V = vm * np.exp(1j * va)
        S = bus_injections(V, Y)
        dP = Psched - S.real
        dQ = Qsched - S.imag
        mis = np.concatenate([dP[pv + pq], dQ[pq]])
        iters = it
        if np.max(np.abs(mis)) < tol:
            break
        dSa, dSm = dSbus_dV(V, Y)
        rows_p = pv + pq
        J11 = dSa[np.ix_(rows_p, rows_p)].real
        J12 = dSm[np.ix_(rows_p, pq)].real
        J21 = dSa[np.ix_(pq, rows_p)].imag
        J22 = dSm[np.ix_(pq, pq)].imag
        J = np.block([[J11, J12], [J21, J22]])
        dx = np.linalg.solve(J, mis)
        va[rows_p] += dx[: len(rows_p)]
        vm[pq] += dx[len(rows_p):]
    V = vm * np.exp(1j * va)
    S = bus_injections(V, Y)
    mis = np.concatenate([(Psched - S.real)[pv + pq], (Qsched - S.imag)[pq]])
    assert np.max(np.abs(mis)) < tol, "reference NR did not converge"

    slack_pg = (S.real[slack] + Sd.real[slack]) * base
    qg = np.array([(S.imag[gb] + Sd.imag[gb]) * base for gb in genbus])
    return {
        "vm": vm.tolist(),
        "va": va.tolist(),
        "slack_pg_mw": slack_pg,
        "qg_mvar": qg.tolist(),
        "iterations": iters,
        "max_mismatch": float(np.max(np.abs(mis))),
    }


def solve_opf(case, Y, idx):
    n = len(case["buses"])
    base = case["base_mva"]
    ng = len(case["generators"])
    kinds = [b["kind"] for b in case["buses"]]
    slack = kinds.index("slack")
    nonslack = [i for i in range(n) if i != slack]
    Sd = np.array([complex(b["pd"], b["qd"]) for b in case["buses"]]) / base
    genbus = [idx[g["bus"]] for g in case["generators"]]
    Cg = np.zeros((n, ng))
    for k, gb in enumerate(genbus):
        Cg[gb, k] = 1.0

    c2 = np.array([c["c2"] for c in case["gencosts"]])
    c1 = np.array([c["c1"] for c in case["gencosts"]])
    c0 = np.array([c["c0"] for c in case["gencosts"]])

    branches = [b for b in case["branches"] if b["status"] == 1]
    fb = np.array([idx[b["from"]] for b in branches])
    tb = np.array([idx[b["to"]] for b in branches])
    limited = [k for k, b in enumerate(branches) if b["smax"] > 0]
    nl = len(branches)
    Yf = np.zeros((nl, n), dtype=complex)
    Yt = np.zeros((nl, n), dtype=complex)
    for k, b in enumerate(branches):
        ys = 1.0 / complex(b["r"], b["x"])
        bc = 0.5j * b["b_ch"]
        Yf[k, fb[k]] = ys + bc
        Yf[k, tb[k]] = -ys
        Yt[k, tb[k]] = ys + bc
        Yt[k, fb[k]] = -ys

    # x = [va(nonslack), vm(n), pg(ng), qg(ng)], powers in pu
    nva = len(nonslack)

    def unpack(x):
        va = np.zeros(n)
        va[nonslack] = x[:nva]
        vm = x[nva: nva + n]
        pg = x[nva + n: nva + n + ng]
        qg = x[nva + n + ng:]
        return va, vm, pg, qg

    def voltage(x):
        va, vm, _, _ = unpack(x)
        return vm * np.exp(1j * va)

    def objective(x):
        _, _, pg, _ = unpack(x)
        p = pg * base
        return float(np.sum(c2 * p * p + c1 * p + c0))

    def objective_grad(x):
        _, _, pg, _ = unpack(x)
        g = np.zeros_like(x)
        g[nva + n: nva + n + ng] = base * (2.0 * c2 * pg * base + c1)
        return g

    def mismatch(x):
        va, vm, pg, qg = unpack(x)
        V = vm * np.exp(1j * va)
        S = bus_injections(V, Y)
        dS = S - (Cg @ (pg + 1j * qg) - Sd)
        return np.concatenate([dS.real, dS.imag])

    def mismatch_jac(x):
        V = voltage(x)
        dSa, dSm = dSbus_dV(V, Y)
        J = np.zeros((2 * n, len(x)))
        J[:n, :nva] = dSa[:, nonslack].real
        J[n:, :nva] = dSa[:, nonslack].imag
        J[:n, nva: nva + n] = dSm.real
        J[n:, nva: nva + n] = dSm.imag
        J[:n, nva + n: nva + n + ng] = -Cg
        J[n:, nva + n + ng:] = -Cg
        return J

    def flow_sq(x):
        V = voltage(x)
        If = Yf @ V
        It = Yt @ V
        Sf = V[fb] * np.conj(If)
        St = V[tb] * np.conj(It)
        return np.concatenate([np.abs(Sf[limited]) ** 2, np.abs(St[limited]) ** 2])

    def flow_sq_jac(x):
        V = voltage(x)
        vm = np.abs(V)
        If = Yf @ V
        It = Yt @ V
        Sf = V[fb] * np.conj(If)
        St = V[tb] * np.conj(It)
        Cf = np.zeros((nl, n))
        Ct = np.zeros((nl, n))
        Cf[np.arange(nl), fb] = 1.0
        Ct[np.arange(nl), tb] = 1.0
        dSf_dVa = 1j * (np.diag(V[fb] * np.conj(If)) @ Cf - np.diag(V[fb]) @ np.conj(Yf @ np.diag(V)))
        dSt_dVa = 1j * (np.diag(V[tb] * np.conj(It)) @ Ct - np.diag(V[tb]) @ np.conj(Yt @ np.diag(V)))
        dSf_dVm = np.diag(V[fb] * np.conj(If) / vm[fb]) @ Cf + np.diag(V[fb]) @ np.conj(Yf @ np.diag(V / vm))
        dSt_dVm = np.diag(V[tb] * np.conj(It) / vm[tb]) @ Ct + np.diag(V[tb]) @ np.conj(Yt @ np.diag(V / vm))
        J = np.zeros((2 * len(limited), len(x)))
        for r, k in enumerate(limited):
            J[r, :nva] = 2 * (np.conj(Sf[k]) * dSf_dVa[k, nonslack]).real
            J[r, nva: nva + n] = 2 * (np.conj(Sf[k]) * dSf_dVm[k]).real
            J[len(limited) + r, :nva] = 2 * (np.conj(St[k]) * dSt_dVa[k, nonslack]).real
            J[len(limited) + r, nva: nva + n] = 2 * (np.conj(St[k]) * dSt_dVm[k]).real
        return J

    # sanity: analytic jacobians vs central differences at a random point
    rng = np.random.default_rng(0)
    xt = np.concatenate([
        rng.uniform(-0.1, 0.1, nva), rng.uniform(0.98, 1.04, n),
        rng.uniform(0.1, 0.5, ng), rng.uniform(-0.2, 0.2, ng)])
    for fn, jac in ((mismatch, mismatch_jac), (flow_sq, flow_sq_jac)):
        h = 1e-6
        Jn = np.zeros((len(fn(xt)), len(xt)))
        for k in range(len(xt)):
            e = np.zeros(len(xt)); e[k] = h
            Jn[:, k] = (fn(xt + e) - fn(xt - e)) / (2 * h)
        assert np.max(np.abs(Jn - jac(xt))) < 1e-5, "analytic jacobian check failed"

    lb = np.concatenate([
        np.full(nva, -np.pi), [b["vmin"] for b in case["buses"]],
        [g["pmin"] / base for g in case["generators"]],
        [g["qmin"] / base for g in case["generators"]]])
    ub = np.concatenate([
        np.full(nva, np.pi), [b["vmax"] for b in case["buses"]],
        [g["pmax"] / base for g in case["generators"]],
        [g["qmax"] / base for g in case["generators"]]])

    x0 = np.concatenate([
        np.zeros(nva), np.ones(n),
        np.clip([g["pg0"] / base for g in case["generators"]],
                [g["pmin"] / base for g in case["generators"]],
                [g["pmax"] / base for g in case["generators"]]),
        np.zeros(ng)])

    smax2 = np.array([(branches[k]["smax"] / base) ** 2 for k in limited])
    cons = [
        NonlinearConstraint(mismatch, 0.0, 0.0, jac=mismatch_jac),
        NonlinearConstraint(flow_sq, -np.inf, np.concatenate([smax2, smax2]), jac=flow_sq_jac),
    ]
    res = minimize(objective, x0, jac=objective_grad, method="trust-constr",
                   bounds=list(zip(lb, ub)), constraints=cons,
                   options={"gtol": 1e-10, "xtol": 1e-12, "maxiter": 5000})
    assert res.constr_violation < 1e-8, f"OPF constraint violation {res.constr_violation}"
    va, vm, pg, qg = unpack(res.x)
    return {
        "objective": float(res.fun),
        "pg_mw": (pg * base).tolist(),
        "qg_mvar": (qg * base).tolist(),
        "vg": [vm[gb] for gb in (idx[g["bus"]] for g in case["generators"])],
        "vm": vm.tolist(),
        "va": va.tolist(),
        "constr_violation": float(res.constr_violation),
    }


def main():
    case_path, out_path = sys.argv[1], sys.argv[2]
    case = load_case(case_path)
    Y, idx = build_ybus(case)
    pg0 = [g["pg0"] for g in case["generators"]]
    vg0 = [g["vg0"] for g in case["generators"]]
    golden = {
        "case": case["name"],
        "ybus": {"n": Y.shape[0], "re": Y.real.tolist(), "im": Y.imag.tolist()},
        "pf_base": {"pg_mw": pg0, "vg": vg0, **newton_pf(case, Y, idx, pg0, vg0)},
        "pf_flat": {"pg_mw": pg0, "vg": [1.0] * len(vg0),
                    **newton_pf(case, Y, idx, pg0, [1.0] * len(vg0))},
        "opf": solve_opf(case, Y, idx),
    }
    with open(out_path, "w") as f:
        json.dump(golden, f, indent=1)
    print(f"{case['name']}: slack_pg(flat)={golden['pf_flat']['slack_pg_mw']:.4f} MW, "
          f"opf objective={golden['opf']['objective']:.4f} $/h")


if __name__ == "__main__":
    main()
