"""Regenerate the FCIDUMP corpus used by the tests and examples.

Requires pyscf (tested with 2.14). Every file is an RHF canonical-orbital
FCIDUMP in the minimal STO-3G basis, written with
``pyscf.tools.fcidump.from_scf``. Run from this directory:

    python3 generate.py
"""
from pyscf import gto, scf
from pyscf.tools import fcidump


def write(name, atom):
    mol = gto.M(atom=atom, basis="sto-3g", unit="Angstrom", verbose=0, symmetry=False)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    assert mf.converged, name
    fcidump.from_scf(mf, f"{name}.fcidump", tol=1e-14)
    print(f"{name}: norb={mol.nao} nelec={mol.nelectron} E_HF={mf.e_tot:.10f}")


def h_chain(n, spacing):
    return "; ".join(f"H 0 0 {i * spacing:.6f}" for i in range(n))


write("h2_sto3g", "H 0 0 0; H 0 0 0.7414")
write("h4_chain_sto3g", h_chain(4, 0.9))
write("h4_chain_stretched_sto3g", h_chain(4, 1.8))
write("lih_sto3g", "Li 0 0 0; H 0 0 1.5949")
write("beh2_sto3g", "Be 0 0 0; H 0 0 1.3264; H 0 0 -1.3264")
for r in (0.8, 1.0, 1.2, 1.5, 1.8):
    write(f"h4_chain_r{r:.2f}_sto3g", h_chain(4, r))
