"""Regenerate the frozen reference fixtures used by the core test suite.

Requires RDKit and the MOSES training split (train.csv.gz). The outputs are
checked in; this script only documents how they were produced.

    python3 tools/make_fixtures.py path/to/moses/train.csv.gz
"""
import gzip
import random
import sys

from rdkit import Chem
from rdkit.Chem import Crippen, rdMolDescriptors

# Acceptor definition of rdMolDescriptors.CalcNumHBA restricted to N and O.
HBA = Chem.MolFromSmarts(
    "[$([O;H1;v2]-[!$(*=[O,N,P,S])]),$([O;H0;v2]),$([O;-]),"
    "$([N;v3;!$(N-*=!@[O,N,P,S])]),$([nH0,o;+0])]"
)
HBD = Chem.MolFromSmarts("[#7,#8;!H0]")

GOLDEN = [
    ("aspirin", "CC(=O)Oc1ccccc1C(=O)O"),
    ("tamiflu", "CCC(CC)OC1C=C(CC(C1NC(=O)C)N)C(=O)OCC"),
    ("methane", "C"),
    ("ethanol", "CCO"),
    ("benzene", "c1ccccc1"),
    ("caffeine", "Cn1cnc2c1c(=O)n(C)c(=O)n2C"),
    ("ibuprofen", "CC(C)Cc1ccc(cc1)C(C)C(=O)O"),
    ("paracetamol", "CC(=O)Nc1ccc(O)cc1"),
    ("nicotine", "CN1CCCC1c1cccnc1"),
    ("lenalidomide", "Nc1cccc2c1CN(C1CCC(=O)NC1=O)C2=O"),
    ("rivaroxaban", "O=C(NCC1CN(c2ccc(N3CCOCC3=O)cc2)C(=O)O1)c1ccc(Cl)s1"),
    ("pregabalin", "CC(C)CC(CN)CC(=O)O"),
    ("nitrobenzene", "O=[N+]([O-])c1ccccc1"),
    ("indole", "c1ccc2[nH]ccc2c1"),
    ("sulfamethoxazole", "Cc1cc(NS(=O)(=O)c2ccc(N)cc2)no1"),
    ("fluconazole", "OC(Cn1cncn1)(Cn1cncn1)c1ccc(F)cc1F"),
    ("diazepam", "CN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc21"),
    ("furosemide", "NS(=O)(=O)c1cc(C(=O)O)c(NCc2ccco2)cc1Cl"),
    ("acetonitrile", "CC#N"),
    ("bromoiodophenol", "Oc1ccc(Br)cc1I"),
]


def props(mol):
    return (
        rdMolDescriptors.CalcExactMolWt(mol),
        Crippen.MolLogP(mol),
        len(mol.GetSubstructMatches(HBD)),
        len(mol.GetSubstructMatches(HBA)),
        rdMolDescriptors.CalcTPSA(mol),
    )


def row(name, smi):
    mol = Chem.MolFromSmiles(smi)
    mw, logp, hbd, hba, tpsa = props(mol)
    return f"{name}\t{smi}\t{mw:.6f}\t{logp:.4f}\t{hbd}\t{hba}\t{tpsa:.4f}"


def main(moses_train):
    with open("crates/core/tests/fixtures/golden_descriptors.tsv", "w") as f:
        f.write("# name\tsmiles\tmw\tlogp\thbd\thba\ttpsa\n")
        for name, smi in GOLDEN:
            f.write(row(name, smi) + "\n")

    with gzip.open(moses_train, "rt") as f:
        lines = [l.strip() for l in f][1:]
    rng = random.Random(20180101)
    sample = rng.sample(lines, 20000)
    with gzip.open("crates/core/data/desk_corpus.smi.gz", "wt") as f:
        f.write("# 20,000 molecules sampled from the MOSES (ZINC clean leads) training split\n")
        for s in sample:
            f.write(s + "\n")

    with open("crates/core/tests/fixtures/corpus_descriptors.tsv", "w") as f:
        f.write("# name\tsmiles\tmw\tlogp\thbd\thba\ttpsa\n")
        for i, s in enumerate(sample[:1000]):
            f.write(row(f"corpus{i}", s) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
