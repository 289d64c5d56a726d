"""Accuracy and sample totals of one-body fermionic learning across mode counts."""

import argparse

import numpy as np

from shadowtomo.fermion import enumerate_kbody, make_mapping, monomial_to_pauli
from shadowtomo.protocols import learn_fermionic
from shadowtomo.quantum_sim import expectation, haar_random, random_product
from shadowtomo.rng import make_rng


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--modes", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--eps", type=float, default=0.3)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("n_modes,mapping,trial,state,max_error,size_chi,copies")
    for n_modes in args.modes:
        mp = make_mapping("ternary" if n_modes <= 4 else "jw", n_modes)
        paulis = [monomial_to_pauli(o, mp) for o in enumerate_kbody(n_modes, 1)]
        for t in range(args.trials):
            rng = make_rng(args.seed, "sweep", n_modes, t)
            kind = "haar" if t % 2 else "product"
            rho = haar_random(mp.n_qubits, rng) if t % 2 else random_product(mp.n_qubits, rng)
            rep = learn_fermionic(rho, n_modes, 1, mp, args.eps, rng)
            err = np.abs(rep.estimates - [expectation(rho, p) for p in paulis]).max()
            chi = rep.metadata.get("coloring", {}).get("size_chi", 0)
            print(f"{n_modes},{mp.mapping_kind},{t},{kind},{err:.4f},{chi:g},{rep.metadata['sample_totals']['copies']}")


if __name__ == "__main__":
    main()
