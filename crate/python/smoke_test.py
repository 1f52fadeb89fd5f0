"""Smoke test for the multifid Python extension.

Build and install first:

    pip install --no-build-isolation ./crates/python
    python python/smoke_test.py
"""

import math

import numpy as np

import multifid as mf


def np_uhlmann(a, b):
    # independent oracle: F = Tr sqrt(sqrt(a) b sqrt(a))
    w, v = np.linalg.eigh(a)
    ra = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    m = ra @ b @ ra
    return float(np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(m), 0, None))))


def main():
    rho = mf.DensityMatrix.random(3, 2, seed=1)
    sigma = mf.DensityMatrix.random(3, 3, seed=2)
    tau = mf.DensityMatrix.maximally_mixed(3)
    assert rho.dim == 3
    assert abs(sum(rho.eigenvalues()) - 1) < 1e-12

    a, b = np.array(rho.to_list()), np.array(sigma.to_list())
    assert abs(mf.uhlmann(rho, sigma) - np_uhlmann(a, b)) < 1e-7
    assert abs(mf.fid_z(rho, sigma, 0.5) - mf.uhlmann(rho, sigma)) < 1e-12
    assert abs(mf.fid_z(rho, sigma, 1) - mf.holevo(rho, sigma)) < 1e-12

    t = mf.StateTuple([rho, sigma, tau])
    assert (t.r, t.dim, len(t)) == (3, 3, 3)
    fh = mf.avg_pairwise(t, 1).value
    fu = mf.avg_pairwise(t).value
    fsdp = mf.f_sdp(t)
    fs = mf.f_secrecy(t).value
    assert fsdp.certificate["status"] == "optimal"
    assert fh <= fs + 1e-8 <= fsdp.value + 2e-8 <= fu + 3e-8 <= math.sqrt(fh) + 4e-8

    full = mf.StateTuple([mf.DensityMatrix.random(3, 3, seed=s) for s in (4, 5, 6)])
    both = mf.f_sdp(full, form="both")
    assert both.certificate["status"] == "optimal"
    assert abs(both.value - mf.f_sdp(full).value) < 1e-6

    div, omega = mf.oveloh(t)
    assert omega is not None and abs(sum(omega.eigenvalues()) - 1) < 1e-9
    assert abs(math.exp(-div.value) - mf.f_log_euclidean(t).value) < 1e-8

    # commuting tuple reduces to the classical pairwise average
    p = [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [0.1, 0.1, 0.8]]
    ct = mf.StateTuple([mf.DensityMatrix.diagonal(x) for x in p])
    pairs = [(0, 1), (0, 2), (1, 2)]
    classical = sum(sum(math.sqrt(p[i][k] * p[j][k]) for k in range(3)) for i, j in pairs) / 3
    assert abs(mf.f_sdp(ct).value - classical) < 1e-6

    again = mf.StateTuple.from_json(t.to_json(), strict=True)
    assert again.to_json() == t.to_json()

    try:
        mf.f_sdp(t, form="nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown form accepted")

    reports = mf.run_property_suite("kwise-ordering-classical", trials=10, seed=0)
    assert reports and all(r["failures"] == 0 for r in reports)
    assert "inequality-chain" in mf.suite_ids()
    assert all(r["failures"] == 0 for r in mf.reproduce("matusita-zero"))

    print("smoke test ok:", fsdp)


if __name__ == "__main__":
    main()
