"""Regenerate the bundled data files. Deterministic; rerun after changing parameters."""

from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent


def go_like_collection(rng, n_sets=100, n_genes=2288):
    genes = [f"GENE{i:05d}" for i in range(1, n_genes + 1)]
    sizes = np.round(np.exp(rng.uniform(np.log(10), np.log(120), n_sets))).astype(int)
    members = [set() for _ in range(n_sets)]
    # every gene lands in at least one set so the union is exactly n_genes
    order = rng.permutation(n_genes)
    weights = sizes / sizes.sum()
    for g in order:
        members[rng.choice(n_sets, p=weights)].add(genes[g])
    for s in range(n_sets):
        while len(members[s]) < sizes[s]:
            members[s].add(genes[rng.integers(n_genes)])
    ids = sorted(rng.choice(np.arange(1, 80000), n_sets, replace=False))
    lines = []
    for s in range(n_sets):
        desc = f"simulated process {s + 1}"
        lines.append("\t".join([f"GO:{ids[s]:07d}", desc] + sorted(members[s])))
    assert len(set().union(*members)) == n_genes
    return "\n".join(lines) + "\n"


def tiny(rng):
    n_features, n_per_group = 20, 5
    samples = [f"S{j:02d}" for j in range(1, 2 * n_per_group + 1)]
    features = [f"p{i:02d}" for i in range(1, n_features + 1)]
    group = np.array([0] * n_per_group + [1] * n_per_group)
    age = np.round(rng.uniform(30, 70, 2 * n_per_group)).astype(int)
    effect = np.zeros(n_features)
    effect[:6] = [2.0, 1.6, 1.4, 1.2, 0.9, 0.7]
    effect[10:12] = [-1.5, 1.0]
    values = 6 + rng.normal(0, 1, (n_features, 2 * n_per_group)) + np.outer(effect, group)
    values += 0.01 * np.outer(rng.normal(0, 1, n_features), age - age.mean())

    # two probes for GA and GF; p20 carries no gene
    gene_of = {f: f"G{chr(ord('A') + i)}" for i, f in enumerate(features)}
    gene_of["p02"] = "GA"
    gene_of["p12"] = "GF"
    gene_of["p20"] = ""

    out = ROOT / "data" / "tiny"
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "expression.tsv", "w") as f:
        f.write("feature_id\t" + "\t".join(samples) + "\n")
        for i, fid in enumerate(features):
            f.write(fid + "\t" + "\t".join(f"{v:.4f}" for v in values[i]) + "\n")
    # phenotype rows deliberately not in matrix order
    perm = rng.permutation(len(samples))
    with open(out / "phenotype.tsv", "w") as f:
        f.write("sample_id\tstatus\tage\n")
        for j in perm:
            f.write(f"{samples[j]}\t{'smoker' if group[j] else 'never'}\t{age[j]}\n")
    with open(out / "annotation.tsv", "w") as f:
        f.write("feature_id\tgene_id\n")
        for fid in features:
            f.write(f"{fid}\t{gene_of[fid]}\n")
    sets = [
        ("GO:0006468", "protein phosphorylation", ["GA", "GC", "GD", "GE", "GF", "GK"]),
        ("GO:0019222", "regulation of metabolic process", ["GF", "GG", "GH", "GI", "GJ", "GM", "GN"]),
        ("GO:0044267", "cellular protein metabolic process", ["GA", "GL", "GN", "GO", "GP", "GQ", "GR", "GS"]),
        ("GO:0016310", "phosphorylation", ["GA", "GC", "GZ"]),
    ]
    with open(out / "sets.gmt", "w") as f:
        for sid, desc, genes in sets:
            f.write("\t".join([sid, desc] + genes) + "\n")


def main():
    rng = np.random.default_rng(20120917)
    (ROOT / "data" / "simulation").mkdir(parents=True, exist_ok=True)
    (ROOT / "data" / "simulation" / "go_like_100.gmt").write_text(go_like_collection(rng))
    tiny(rng)


if __name__ == "__main__":
    main()
