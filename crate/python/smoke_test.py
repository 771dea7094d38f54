import math

import critsense


def close(a, b, tol):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1.0)


def main():
    m = critsense.Model.qrm_effective(0.8, 40)
    assert m.name == "qrm_effective"
    assert close(m.delta, critsense.delta_g(0.8), 1e-12)
    assert m.commutator_residual() < 1e-8
    h = m.hamiltonian()
    assert len(h) == m.dim and all(abs(h[i][j] - h[j][i].conjugate()) < 1e-12 for i in range(5) for j in range(5))
    ev = m.eigenvalues()
    assert ev == sorted(ev)

    t = 2.0
    gen = m.qfi(t)
    fid = m.qfi(t, "fidelity")
    assert close(gen, fid, 1e-2), (gen, fid)
    try:
        m.qfi(t, "nonsense")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown QFI method accepted")

    p = critsense.inverted_variance(0.8, n=1)
    assert close(p["inv_var"], critsense.inverted_variance_closed_form(0.8, 1), 1e-2)
    assert p["inv_var"] <= 1.02 * p["qfi"]
    assert close(p["time"], critsense.tau_n(0.8, 1), 1e-12)
    mean, var = critsense.quadrature_closed_form(0.8, p["time"])
    assert abs(mean) < 1e-6 and close(var, 1.0, 1e-6)

    wps = critsense.working_points(3)
    assert [w[0] for w in wps] == [1, 2, 3]
    g_o, tau = wps[0][1], wps[0][2]
    point, amp = critsense.loschmidt(g_o, tau)
    assert abs(amp) <= 1.0 + 1e-12
    assert point["inv_var"] <= 1.02 * point["qfi"]

    pts = [(x, 3.0 * x ** -3) for x in (0.5, 1.0, 2.0, 4.0)]
    slope, intercept, r2 = critsense.fit_powerlaw(pts)
    assert close(slope, -3.0, 1e-12) and close(intercept, math.log(3.0), 1e-12)

    try:
        critsense.Model.qrm_full(0.8, 0.5, 40)
    except ValueError:
        pass
    else:
        raise AssertionError("eta < 1 accepted")

    csv = critsense.run("quadrature", "[grid]\nvalues = [0.7, 0.8]\n")
    lines = csv.strip().splitlines()
    assert lines[0].split(",") == list(critsense.COLUMNS)
    assert len(lines) == 3

    checks = critsense.validate()
    failed = [c for c in checks if not c[1]]
    assert not failed, failed
    print(f"smoke test ok: {len(checks)} checks, F(0.8) = {p['inv_var']:.6g}")


if __name__ == "__main__":
    main()
