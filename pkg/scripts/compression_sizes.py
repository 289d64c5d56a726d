"""Record sizes of the compressed two-copy run against n*M + n^2*N for n = 2..5."""

import argparse

from shadowtomo.acceptance import compression_rows, fit_size_model


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-queries", action="store_true")
    args = ap.parse_args()

    rows = compression_rows(eps=args.eps, seed=args.seed, check_queries=not args.skip_queries)
    c1, c2, factor = fit_size_model(rows)
    print("n,bits,n_M,n2_N,unit_ratio,fitted_ratio,queries_exact")
    for r in rows:
        fitted = r["bits"] / (c1 * r["n_M"] + c2 * r["n2_N"])
        print(f"{r['n']},{r['bits']},{r['n_M']},{r['n2_N']},{r['unit_ratio']:.3f},{fitted:.3f},{r['queries_exact']}")
    print(f"# c1={c1:.4g} c2={c2:.4g} worst factor {factor:.3f}")


if __name__ == "__main__":
    main()
